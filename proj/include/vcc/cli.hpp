#pragma once

// `vcc` command-line front end: extract, train, predict, eval, synth.
// Exit codes: 0 success, 1 error, 2 every frame rejected by the filters.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vcc/checkpoint.hpp"
#include "vcc/classify.hpp"
#include "vcc/keyframes.hpp"
#include "vcc/manifest.hpp"
#include "vcc/media.hpp"
#include "vcc/report.hpp"
#include "vcc/synth.hpp"
#include "vcc/trainer.hpp"

namespace vcc::cli {

inline constexpr std::uint64_t kDefaultSeed = 42;

struct ExtractOptions {
  std::filesystem::path input;
  std::size_t count = 5;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> report;
  std::uint64_t seed = kDefaultSeed;
  std::optional<double> tau_diff;
  double brightness_low = 0.10, brightness_high = 0.90;
  double entropy_min = 3.0;
};

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::size_t epochs = 15;
  std::size_t batch = 128;
  double split = 0.8;
  std::uint64_t seed = kDefaultSeed;
  double lr = 0.01;
  std::size_t input_size = 224;
  std::size_t keyframes = 5;
};

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path input;
  std::size_t keyframes = 5;
  std::optional<std::filesystem::path> json;
  std::uint64_t seed = kDefaultSeed;
};

struct EvalOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::size_t keyframes = 5;
  std::uint64_t seed = kDefaultSeed;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline PipelineConfig pipeline_for(std::size_t keyframes, std::uint64_t seed) {
  PipelineConfig config;
  config.requested_keyframes = keyframes;
  config.seed = seed;
  return config;
}

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline Dataset build_dataset(const Manifest& manifest, const std::vector<std::string>& classes, const ModelSpec& spec,
                             std::size_t keyframes, std::uint64_t seed) {
  Dataset d{{}, classes};
  const PipelineConfig config = detail::pipeline_for(keyframes, seed);
  for (const auto& entry : manifest.entries) {
    auto it = std::find(classes.begin(), classes.end(), entry.label);
    if (it == classes.end()) fail(ErrorCode::BadManifest, "label " + entry.label + " is not a model class");
    std::vector<Frame> frames = load_video(entry.path);
    try {
      d.samples.push_back({entry.path.string(), keyframe_sequence(frames, spec, config),
                           static_cast<std::size_t>(it - classes.begin())});
    } catch (const Error& e) {
      fail(e.code(), entry.path.string() + ": " + e.message());
    }
  }
  return d;
}

inline int cmd_extract(const ExtractOptions& opt, std::ostream& out) {
  PipelineConfig config = detail::pipeline_for(opt.count, opt.seed);
  config.fixed_tau = opt.tau_diff;
  config.brightness_low = opt.brightness_low;
  config.brightness_high = opt.brightness_high;
  config.entropy_min = opt.entropy_min;
  config.validate();

  std::vector<Frame> frames = load_video(opt.input);
  const std::string source = opt.input.string();
  try {
    KeyframeSet set = extract_keyframes(frames, config);
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + opt.out_dir.string() + ": " + ec.message());
    for (const auto& kf : set.keyframes) {
      auto path = opt.out_dir / ("kf_" + std::to_string(kf.frame_index) + ".ppm");
      write_file(path, write_ppm(kf.frame));
      out << "keyframe " << kf.frame_index << " (cluster " << kf.cluster << ") -> " << path.string() << '\n';
    }
    out << "stage_counts:";
    for (auto c : set.stage_counts) out << ' ' << c;
    out << '\n';
    if (opt.report) detail::write_text(*opt.report, keyframe_report_json(set, config, source).dump(2) + "\n");
    return 0;
  } catch (const AllFramesRejected& e) {
    if (opt.report) detail::write_text(*opt.report, keyframe_report_json(e.partial(), config, source).dump(2) + "\n");
    throw;
  }
}

inline std::string train_banner(const TrainOptions& opt) {
  std::ostringstream b;
  b << "vcc train: input=" << opt.input_size << 'x' << opt.input_size << " epochs=" << opt.epochs
    << " batch=" << opt.batch << " split=" << detail::fixed2(opt.split) << " lr=" << opt.lr << " seed=" << opt.seed
    << " keyframes=" << opt.keyframes;
  return b.str();
}

inline int cmd_train(const TrainOptions& opt, std::ostream& out) {
  TrainConfig cfg;
  cfg.split_ratio = opt.split;
  cfg.batch_size = opt.batch;
  cfg.epochs = opt.epochs;
  cfg.learning_rate = opt.lr;
  cfg.seed = opt.seed;
  cfg.validate();
  if (opt.input_size < 4 || opt.input_size % 4 != 0) {
    fail(ErrorCode::InvalidArgument, "input size must be a positive multiple of 4");
  }
  if (opt.keyframes < 1) fail(ErrorCode::InvalidArgument, "keyframes must be >= 1");

  out << train_banner(opt) << '\n';
  const Manifest manifest = load_manifest(opt.data);
  const ModelSpec spec = default_model(manifest.classes(), opt.input_size);
  const Dataset data = build_dataset(manifest, spec.classes, spec, opt.keyframes, opt.seed);
  auto [train_set, val_set] = split_dataset(data, cfg.split_ratio, cfg.seed);
  out << "samples: " << data.size() << " (train " << train_set.size() << ", val " << val_set.size() << "), classes: "
      << spec.classes.size() << '\n';

  auto [params, report] = train(spec, train_set, val_set, cfg, [&](const EpochStats& s) {
    out << "epoch " << s.epoch << '/' << cfg.epochs << ": loss=" << std::fixed << std::setprecision(6)
        << s.train_loss << std::defaultfloat << " train_accuracy=" << format_percent(s.train_accuracy) << '%'
        << " val_accuracy=" << (s.val_accuracy ? format_percent(*s.val_accuracy) + "%" : std::string("n/a"))
        << std::endl;
  });
  save_checkpoint(spec, params, opt.out);
  out << "val_accuracy: "
      << (report.final_val_accuracy ? format_percent(*report.final_val_accuracy) + "%" : std::string("n/a")) << '\n';
  out << "model written to " << opt.out.string() << '\n';
  return 0;
}

inline int cmd_predict(const PredictOptions& opt, std::ostream& out) {
  if (opt.keyframes < 1) fail(ErrorCode::InvalidArgument, "keyframes must be >= 1");
  auto [spec, params] = load_checkpoint(opt.model);
  std::vector<Frame> frames = load_video(opt.input);
  Tensor probs = classify_video(spec, params, frames, detail::pipeline_for(opt.keyframes, opt.seed));
  PredictionReport report = make_prediction_report(probs, spec.classes, opt.input.string());
  out << render_prediction(report);
  if (opt.json) detail::write_text(*opt.json, prediction_json(report).dump(2) + "\n");
  return 0;
}

inline int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  auto [spec, params] = load_checkpoint(opt.model);
  const Manifest manifest = load_manifest(opt.data);
  const Dataset data = build_dataset(manifest, spec.classes, spec, opt.keyframes, opt.seed);
  out << "samples: " << data.size() << '\n';
  out << "accuracy: " << format_percent(evaluate(spec, params, data)) << "%\n";
  return 0;
}

inline int cmd_synth(const SynthOptions& opt, const std::filesystem::path& out_dir, std::ostream& out) {
  Manifest manifest = write_synthetic_corpus(out_dir, opt);
  out << "wrote " << manifest.entries.size() << " clips (" << opt.classes << " classes) to " << out_dir.string()
      << '\n';
  out << "manifest: " << (out_dir / "manifest.tsv").string() << '\n';
  return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keyframe extraction and CNN+LSTM video classification", "vcc"};
  app.require_subcommand(1);

  auto add_seed = [](CLI::App* sub, std::uint64_t& seed) {
    sub->add_option("--seed", seed, "Random seed (falls back to $VCC_SEED)")->envname("VCC_SEED");
  };

  ExtractOptions ex;
  std::string brightness;
  auto* extract = app.add_subcommand("extract", "Select keyframes from a video");
  extract->add_option("--input", ex.input, "Frame directory or .y4m file")->required();
  extract->add_option("--count", ex.count, "Requested keyframes")->required();
  extract->add_option("--out", ex.out_dir, "Output directory for kf_<index>.ppm")->required();
  extract->add_option("--report", ex.report, "Write the JSON audit report here");
  add_seed(extract, ex.seed);
  extract->add_option("--tau-diff", ex.tau_diff, "Fixed LUV difference threshold (default: adaptive)");
  extract->add_option("--brightness", brightness, "Brightness range LO,HI (default 0.10,0.90)");
  extract->add_option("--entropy-min", ex.entropy_min, "Minimum entropy in bits (default 3.0)");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier from a manifest");
  train_cmd->add_option("--data", tr.data, "Manifest (label<TAB>path per line)")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint output path")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs (default 15)");
  train_cmd->add_option("--batch", tr.batch, "Batch size (default 128)");
  train_cmd->add_option("--split", tr.split, "Training fraction (default 0.8)");
  add_seed(train_cmd, tr.seed);
  train_cmd->add_option("--lr", tr.lr, "Learning rate (default 0.01)");
  train_cmd->add_option("--input-size", tr.input_size, "Model input side (default 224)");
  train_cmd->add_option("--keyframes", tr.keyframes, "Keyframes per video (default 5)");

  PredictOptions pr;
  auto* predict = app.add_subcommand("predict", "Classify one video");
  predict->add_option("--model", pr.model, "Checkpoint")->required();
  predict->add_option("--input", pr.input, "Frame directory or .y4m file")->required();
  predict->add_option("--keyframes", pr.keyframes, "Keyframes per video (default 5)");
  predict->add_option("--json", pr.json, "Also write the prediction as JSON");
  add_seed(predict, pr.seed);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a manifest");
  eval->add_option("--model", ev.model, "Checkpoint")->required();
  eval->add_option("--data", ev.data, "Manifest")->required();
  eval->add_option("--keyframes", ev.keyframes, "Keyframes per video (default 5)");
  add_seed(eval, ev.seed);

  SynthOptions sy;
  std::filesystem::path synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", sy.classes, "Class count (default 5)");
  synth->add_option("--clips-per-class", sy.clips_per_class, "Clips per class (default 40)");
  synth->add_option("--frames", sy.frames, "Frames per clip (default 30)");
  synth->add_option("--size", sy.size, "Frame side in pixels (default 64)");
  add_seed(synth, sy.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (*extract) {
      if (!brightness.empty()) {
        auto comma = brightness.find(',');
        try {
          if (comma == std::string::npos) throw std::invalid_argument("no comma");
          std::size_t used = 0;
          ex.brightness_low = std::stod(brightness.substr(0, comma), &used);
          if (used != comma) throw std::invalid_argument("trailing");
          std::string hi = brightness.substr(comma + 1);
          ex.brightness_high = std::stod(hi, &used);
          if (used != hi.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          fail(ErrorCode::InvalidArgument, "--brightness expects LO,HI, got " + brightness);
        }
      }
      return cmd_extract(ex, out);
    }
    if (*train_cmd) return cmd_train(tr, out);
    if (*predict) return cmd_predict(pr, out);
    if (*eval) return cmd_eval(ev, out);
    if (*synth) return cmd_synth(sy, synth_out, out);
  } catch (const AllFramesRejected& e) {
    err << "vcc: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "vcc: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "vcc: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace vcc::cli
