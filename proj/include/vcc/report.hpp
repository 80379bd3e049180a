#pragma once

// Serialisation of keyframe audit reports (JSON) and class predictions
// (text listing and JSON).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcc/keyframes.hpp"
#include "vcc/tensor.hpp"

namespace vcc {

using Json = nlohmann::ordered_json;

// At most six fractional digits in serialised numbers.
inline double round6(double x) {
  return std::round(x * 1e6) / 1e6;
}

inline Json keyframe_report_json(const KeyframeSet& set, const PipelineConfig& config, const std::string& source) {
  Json cfg;
  cfg["requested_keyframes"] = config.requested_keyframes;
  cfg["tau_diff_mode"] = config.fixed_tau ? "fixed" : "adaptive";
  cfg["tau_diff"] = round6(set.tau);
  cfg["brightness_range"] = {round6(config.brightness_low), round6(config.brightness_high)};
  cfg["entropy_min"] = round6(config.entropy_min);
  cfg["seed"] = config.seed;
  cfg["max_iterations"] = config.max_iterations;
  cfg["tolerance"] = config.tolerance;
  if (config.resize_before_scoring) {
    cfg["resize_before_scoring"] = {config.resize_before_scoring->first, config.resize_before_scoring->second};
  } else {
    cfg["resize_before_scoring"] = nullptr;
  }

  Json frames = Json::array();
  for (const auto& s : set.scores) {
    Json f;
    f["index"] = s.index;
    if (std::isfinite(s.diff)) {
      f["diff"] = round6(s.diff);
    } else {
      f["diff"] = nullptr;  // frame 0 has no predecessor
    }
    f["brightness"] = round6(s.brightness);
    f["entropy"] = round6(s.entropy);
    f["blur"] = round6(s.blur);
    f["verdict"] = s.kept() ? "kept" : "rejected";
    if (s.rejected) f["reject_reason"] = to_string(*s.rejected);
    frames.push_back(std::move(f));
  }

  Json clusters = Json::array();
  for (const auto& c : set.clusters) {
    clusters.push_back({{"id", c.id}, {"members", c.members}, {"keyframe", c.keyframe}});
  }

  Json report;
  report["source"] = source;
  report["config"] = std::move(cfg);
  report["frames"] = std::move(frames);
  report["stage_counts"] = set.stage_counts;
  report["clusters"] = std::move(clusters);
  report["keyframes"] = set.keyframe_indices();
  return report;
}

struct PredictionEntry {
  std::string label;
  double probability = 0.0;
};

struct PredictionReport {
  std::string source;
  std::vector<PredictionEntry> entries;  // descending probability, ties by class order
};

template <class T>
PredictionReport make_prediction_report(const BasicTensor<T>& probs, const std::vector<std::string>& classes,
                                        std::string source) {
  if (probs.size() != classes.size()) fail(ErrorCode::ShapeMismatch, "one probability per class expected");
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  PredictionReport report{std::move(source), {}};
  for (std::size_t i : order) report.entries.push_back({classes[i], static_cast<double>(probs[i])});
  return report;
}

// Round half-up to hundredths of a percent: 0.453949 -> "45.39", 0.45395 -> "45.40".
inline std::string format_percent(double probability) {
  const auto hundredths = static_cast<long long>(std::floor(probability * 10000.0 + 0.5));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", hundredths / 100, hundredths % 100);
  return buf;
}

inline std::string render_prediction(const PredictionReport& report) {
  std::string out = "Test video path: " + report.source + "\n";
  for (const auto& e : report.entries) out += e.label + ": " + format_percent(e.probability) + "%\n";
  return out;
}

inline Json prediction_json(const PredictionReport& report) {
  Json predictions = Json::array();
  for (const auto& e : report.entries) {
    predictions.push_back({{"label", e.label},
                           {"probability", e.probability},
                           {"percentage", std::stod(format_percent(e.probability))}});
  }
  return {{"source", report.source}, {"predictions", std::move(predictions)}};
}

}  // namespace vcc
