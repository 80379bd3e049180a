#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>

#include "cli_support.hpp"

using namespace vcc;
namespace fs = std::filesystem;

namespace {

fs::path work(const std::string& name) { return test::fresh_dir(fs::temp_directory_path() / ("vcc_test_cli_" + name)); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

FeatureVector mean_feature(const std::vector<Frame>& frames) {
  FeatureVector mean(kHistogramDims, 0.0);
  for (const auto& f : frames) {
    auto h = histogram_feature(f);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += h[i] / frames.size();
  }
  return mean;
}

}  // namespace

TEST_CASE("help and usage errors", "[cli]") {
  CHECK(test::run_cli({"--help"}).code == 0);
  CHECK(test::run_cli({"train", "--help"}).code == 0);
  CHECK(test::run_cli({}).code == 1);
  CHECK(test::run_cli({"bogus"}).code == 1);
  CHECK(test::run_cli({"extract", "--input", "x"}).code == 1);
}

TEST_CASE("train banner shows the default workflow settings", "[cli][train]") {
  std::string banner = cli::train_banner(cli::TrainOptions{});
  CHECK(banner.find("input=224x224") != std::string::npos);
  CHECK(banner.find("epochs=15 batch=128 split=0.80") != std::string::npos);
}

TEST_CASE("train rejects bad arguments", "[cli][train]") {
  fs::path dir = work("train_args");
  auto r = test::run_cli({"train", "--data", (dir / "none.tsv").string(), "--out", (dir / "m.bin").string(),
                          "--split", "1.0"});
  CHECK(r.code == 1);
  CHECK(r.err.find("split") != std::string::npos);
  r = test::run_cli({"train", "--data", (dir / "none.tsv").string(), "--out", (dir / "m.bin").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("none.tsv") != std::string::npos);
  r = test::run_cli({"train", "--data", (dir / "none.tsv").string(), "--out", (dir / "m.bin").string(),
                     "--input-size", "30"});
  CHECK(r.code == 1);
}

TEST_CASE("extract writes keyframes and a report", "[cli][extract]") {
  fs::path dir = work("extract");
  test::write_three_scene_y4m(dir / "scenes.y4m");
  auto r = test::run_cli({"extract", "--input", (dir / "scenes.y4m").string(), "--count", "3", "--out",
                          (dir / "kf").string(), "--report", (dir / "report.json").string()});
  REQUIRE(r.code == 0);
  std::vector<fs::path> ppms;
  for (const auto& e : fs::directory_iterator(dir / "kf")) ppms.push_back(e.path());
  CHECK(ppms.size() == 3);
  for (const auto& p : ppms) {
    CHECK(p.filename().string().rfind("kf_", 0) == 0);
    CHECK(parse_ppm(read_file(p)).width == 32);
  }
  auto report = Json::parse(test::slurp(dir / "report.json"));
  std::vector<std::string> keys;
  for (auto it = report.begin(); it != report.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"source", "config", "frames", "stage_counts", "clusters", "keyframes"});
  CHECK(report["stage_counts"].size() == 5);
  CHECK(report["frames"].size() == 30);
  CHECK(report["frames"][0]["diff"].is_null());
  CHECK(report["keyframes"].size() == 3);
  for (const auto& f : report["frames"]) {
    CHECK((f["verdict"] == "kept" || f["verdict"] == "rejected"));
    CHECK(f.contains("reject_reason") == (f["verdict"] == "rejected"));
  }

  auto one = test::run_cli({"extract", "--input", (dir / "scenes.y4m").string(), "--count", "1", "--out",
                            (dir / "kf1").string()});
  REQUIRE(one.code == 0);
  CHECK(std::distance(fs::directory_iterator(dir / "kf1"), fs::directory_iterator{}) == 1);
}

TEST_CASE("extract exit codes", "[cli][extract]") {
  fs::path dir = work("extract_codes");
  auto missing = test::run_cli({"extract", "--input", (dir / "nope.y4m").string(), "--count", "2", "--out",
                                (dir / "kf").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nope.y4m") != std::string::npos);
  CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);

  fs::create_directories(dir / "dark");
  for (int i = 0; i < 3; ++i)
    write_file(dir / "dark" / ("f" + std::to_string(i) + ".ppm"), write_ppm(test::solid_frame(8, 8, 0, 0, 0)));
  auto dark = test::run_cli({"extract", "--input", (dir / "dark").string(), "--count", "2", "--out",
                             (dir / "kf").string(), "--report", (dir / "dark.json").string()});
  CHECK(dark.code == 2);
  CHECK(dark.err.find("brightness") != std::string::npos);
  auto report = Json::parse(test::slurp(dir / "dark.json"));
  CHECK(report["frames"][0]["reject_reason"] == "brightness");

  auto bad_range = test::run_cli({"extract", "--input", (dir / "dark").string(), "--count", "2", "--out",
                                  (dir / "kf").string(), "--brightness", "0.5"});
  CHECK(bad_range.code == 1);
  auto relaxed = test::run_cli({"extract", "--input", (dir / "dark").string(), "--count", "2", "--out",
                                (dir / "kf").string(), "--brightness", "0,0.5", "--entropy-min", "0"});
  CHECK(relaxed.code == 0);
}

TEST_CASE("VCC_SEED is a fallback for --seed", "[cli]") {
  fs::path dir = work("seed_env");
  test::write_three_scene_y4m(dir / "v.y4m", 4, 16);
  auto seed_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"extract", "--input", (dir / "v.y4m").string(), "--count", "2",
                                  "--out", (dir / "kf").string(), "--report", (dir / "r.json").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(test::run_cli(args).code == 0);
    return Json::parse(test::slurp(dir / "r.json"))["config"]["seed"].get<std::uint64_t>();
  };
  ::unsetenv("VCC_SEED");
  CHECK(seed_of({}) == 42);
  ::setenv("VCC_SEED", "7", 1);
  CHECK(seed_of({}) == 7);
  CHECK(seed_of({"--seed", "9"}) == 9);
  ::unsetenv("VCC_SEED");
}

TEST_CASE("predict prints the percentage listing", "[cli][predict]") {
  fs::path dir = work("predict");
  test::write_three_scene_y4m(dir / "clip.y4m", 4, 16);
  std::vector<std::string> classes{"Punch", "CricketShot", "Surfing", "Archery", "Yoga"};
  ModelSpec spec = default_model(classes, 16);
  save_checkpoint(spec, zero_parameters<float>(spec), dir / "zero.bin");
  auto r = test::run_cli({"predict", "--model", (dir / "zero.bin").string(), "--input", (dir / "clip.y4m").string(),
                          "--json", (dir / "p.json").string()});
  REQUIRE(r.code == 0);
  auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "Test video path: " + (dir / "clip.y4m").string());
  for (std::size_t i = 1; i < 6; ++i) CHECK(lines[i] == classes[i - 1] + ": 20.00%");
  auto json = Json::parse(test::slurp(dir / "p.json"));
  CHECK(json["predictions"].size() == 5);

  const std::regex line_re("^[A-Za-z0-9_]+: [0-9]+\\.[0-9]{2}%$");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    save_checkpoint(spec, init_parameters<float>(spec, seed), dir / "m.bin");
    auto p = test::run_cli({"predict", "--model", (dir / "m.bin").string(), "--input", (dir / "clip.y4m").string()});
    REQUIRE(p.code == 0);
    auto ls = lines_of(p.out);
    REQUIRE(ls.size() == 6);
    double sum = 0, previous = 101;
    for (std::size_t i = 1; i < ls.size(); ++i) {
      CHECK(std::regex_match(ls[i], line_re));
      double v = std::stod(ls[i].substr(ls[i].find(": ") + 2));
      CHECK(v <= previous);
      previous = v;
      sum += v;
    }
    CHECK(std::abs(sum - 100.0) <= 0.05);
  }

  auto missing = test::run_cli({"predict", "--model", (dir / "absent.bin").string(), "--input",
                                (dir / "clip.y4m").string()});
  CHECK(missing.code == 1);
}

TEST_CASE("percent formatting rounds half up", "[cli][predict]") {
  CHECK(format_percent(0.453949) == "45.39");
  CHECK(format_percent(0.45395) == "45.40");
  CHECK(format_percent(1.0) == "100.00");
  CHECK(format_percent(0.0) == "0.00");
  CHECK(format_percent(0.2) == "20.00");
}

TEST_CASE("manifest parsing", "[cli][manifest]") {
  Manifest m = parse_manifest("# comment\nB\tclips/b.y4m\n\nA\t/abs/a dir\n", "/base");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].path == fs::path("/base/clips/b.y4m"));
  CHECK(m.entries[1].path == fs::path("/abs/a dir"));
  CHECK(m.classes() == std::vector<std::string>{"A", "B"});
  CHECK_THROWS_AS(parse_manifest("A\tx\nB\tx\n"), Error);
  CHECK_THROWS_AS(parse_manifest("A x\n"), Error);
  CHECK_THROWS_AS(parse_manifest("bad label\tx\n"), Error);
  CHECK_THROWS_AS(parse_manifest("# only comments\n"), Error);
}

TEST_CASE("synth corpus", "[cli][synth]") {
  fs::path a = work("synth_a"), b = work("synth_b");
  auto r = test::run_cli({"synth", "--out", a.string()});
  REQUIRE(r.code == 0);
  auto manifest_lines = lines_of(test::slurp(a / "manifest.tsv"));
  CHECK(manifest_lines.size() == 200);
  Manifest m = load_manifest(a / "manifest.tsv");
  CHECK(m.classes().size() == 5);
  auto first = load_video(m.entries.front().path);
  CHECK(first.size() == 30);
  CHECK(first[0].width == 64);

  // Same seed: byte-identical files. Checked on a smaller corpus to keep this fast.
  REQUIRE(test::run_cli({"synth", "--out", (a / "small").string(), "--clips-per-class", "3", "--frames", "5"}).code == 0);
  REQUIRE(test::run_cli({"synth", "--out", (b / "small").string(), "--clips-per-class", "3", "--frames", "5"}).code == 0);
  for (const auto& e : fs::recursive_directory_iterator(a / "small")) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), a / "small");
    CHECK(test::slurp(e.path()) == test::slurp(b / "small" / rel));
  }
  REQUIRE(test::run_cli({"synth", "--out", (b / "other").string(), "--clips-per-class", "3", "--frames", "5",
                         "--seed", "43"}).code == 0);
  CHECK(test::slurp(a / "small" / "clips" / "RedDisc_000.y4m") != test::slurp(b / "other" / "clips" / "RedDisc_000.y4m"));
}

TEST_CASE("synth classes are separable by histogram", "[cli][synth]") {
  SynthOptions opt;
  std::vector<std::vector<FeatureVector>> features(opt.classes);
  for (std::size_t c = 0; c < opt.classes; ++c)
    for (std::size_t k = 0; k < 6; ++k)
      features[c].push_back(mean_feature(render_clip(class_style(c, opt.classes), opt, derive_seed(opt.seed, c * 100 + k))));
  double within = 0, between = 0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t c1 = 0; c1 < opt.classes; ++c1)
    for (std::size_t c2 = c1; c2 < opt.classes; ++c2)
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
          if (c1 == c2 && j <= i) continue;
          double d = std::sqrt(squared_distance(features[c1][i], features[c2][j]));
          (c1 == c2 ? within : between) += d;
          ++(c1 == c2 ? nw : nb);
        }
  CHECK(between / nb > within / nw);
}
