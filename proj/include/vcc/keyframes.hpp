#pragma once

// Five-stage keyframe selection:
//   1. candidates: frame 0 plus frames whose LUV difference to the previous
//      input frame exceeds tau (adaptive: mean + 1 std of all differences);
//   2. brightness within [low, high];
//   3. entropy >= entropy_min;
//   4. k-means over colour histograms of the survivors;
//   5. sharpest frame (variance of Laplacian) per cluster.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcc/clustering.hpp"
#include "vcc/colorspace.hpp"
#include "vcc/media.hpp"
#include "vcc/scoring.hpp"

namespace vcc {

struct PipelineConfig {
  std::size_t requested_keyframes = 5;
  std::optional<double> fixed_tau;  // nullopt: adaptive
  double brightness_low = 0.10;
  double brightness_high = 0.90;
  double entropy_min = 3.0;
  std::uint64_t seed = 42;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
  std::optional<std::pair<std::size_t, std::size_t>> resize_before_scoring;

  void validate() const {
    if (requested_keyframes < 1) fail(ErrorCode::InvalidArgument, "requested_keyframes must be >= 1");
    if (!(brightness_low < brightness_high) || brightness_low < 0.0 || brightness_high > 1.0) {
      fail(ErrorCode::InvalidArgument, "brightness range must satisfy 0 <= low < high <= 1");
    }
    if (!(entropy_min >= 0.0 && entropy_min <= 8.0)) {
      fail(ErrorCode::InvalidArgument, "entropy_min must be in [0, 8]");
    }
    if (fixed_tau && !std::isfinite(*fixed_tau)) fail(ErrorCode::InvalidArgument, "tau must be finite");
  }
};

struct Keyframe {
  std::size_t frame_index = 0;
  std::size_t cluster = 0;
  Frame frame;
};

struct Cluster {
  std::size_t id = 0;
  std::vector<std::size_t> members;  // frame indices, ascending
  std::size_t keyframe = 0;
};

struct KeyframeSet {
  std::vector<Keyframe> keyframes;  // ascending frame index
  std::vector<Cluster> clusters;    // ordered by id
  std::vector<FrameScores> scores;  // one per input frame
  std::array<std::size_t, 5> stage_counts{};
  double tau = 0.0;  // effective stage-1 threshold

  std::vector<std::size_t> keyframe_indices() const {
    std::vector<std::size_t> out;
    for (const auto& kf : keyframes) out.push_back(kf.frame_index);
    return out;
  }
};

class AllFramesRejected : public Error {
 public:
  AllFramesRejected(RejectReason stage, KeyframeSet partial)
      : Error(ErrorCode::AllFramesRejected,
              std::string("every candidate was rejected by the ") + to_string(stage) + " filter"),
        stage_(stage),
        partial_(std::move(partial)) {}

  RejectReason stage() const noexcept { return stage_; }
  // Scores and stage counts computed before the pipeline stopped.
  const KeyframeSet& partial() const noexcept { return partial_; }

 private:
  RejectReason stage_;
  KeyframeSet partial_;
};

inline KeyframeSet extract_keyframes(std::span<const Frame> frames, const PipelineConfig& config) {
  config.validate();
  if (frames.empty()) fail(ErrorCode::EmptyInput, "no frames");
  const std::size_t w = frames[0].width, h = frames[0].height;
  for (const auto& f : frames) {
    require_space(f.space, ColorSpace::Rgb8, "extract_keyframes");
    if (f.width != w || f.height != h) fail(ErrorCode::DimensionMismatch, "frames differ in size");
  }
  if (w == 0 || h == 0) fail(ErrorCode::EmptyFrame, "zero-sized frames");

  const std::size_t m = frames.size();
  KeyframeSet set;
  set.scores.resize(m);
  std::vector<FeatureVector> features(m);

  LuvFrame previous;
  for (std::size_t i = 0; i < m; ++i) {
    std::optional<Frame> resized;
    if (config.resize_before_scoring) {
      resized = resize_bilinear(frames[i], config.resize_before_scoring->first,
                                config.resize_before_scoring->second);
    }
    const Frame& scored = resized ? *resized : frames[i];
    LuvFrame luv = rgb_to_luv(scored);
    Frame gray = rgb_to_gray(scored);
    FrameScores& s = set.scores[i];
    s.index = i;
    if (i > 0) s.diff = luv_frame_difference(previous, luv);
    s.brightness = brightness_score(luv);
    s.entropy = entropy_score(gray);
    s.blur = gray.width >= 3 && gray.height >= 3 ? laplacian_variance(gray) : 0.0;
    features[i] = histogram_feature(scored);
    previous = std::move(luv);
  }

  // Stage 1.
  if (config.fixed_tau) {
    set.tau = *config.fixed_tau;
  } else if (m > 1) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 1; i < m; ++i) {
      sum += set.scores[i].diff;
      sum_sq += set.scores[i].diff * set.scores[i].diff;
    }
    const double count = static_cast<double>(m - 1);
    const double mean = sum / count;
    set.tau = mean + std::sqrt(std::max(0.0, sum_sq / count - mean * mean));
  }

  std::vector<std::size_t> survivors;
  for (auto& s : set.scores) {
    if (s.index != 0 && !(s.diff > set.tau)) {
      s.rejected = RejectReason::Diff;
    } else if (s.brightness < config.brightness_low || s.brightness > config.brightness_high) {
      s.rejected = RejectReason::Brightness;
    } else if (s.entropy < config.entropy_min) {
      s.rejected = RejectReason::Entropy;
    } else {
      survivors.push_back(s.index);
    }
  }
  std::size_t s1 = 0, s2 = 0;
  for (const auto& s : set.scores) {
    if (s.rejected != RejectReason::Diff) ++s1;
    if (s.kept() || s.rejected == RejectReason::Entropy) ++s2;
  }
  set.stage_counts = {s1, s2, survivors.size(), 0, 0};
  if (survivors.empty()) {
    RejectReason stage = s2 == 0 ? RejectReason::Brightness : RejectReason::Entropy;
    throw AllFramesRejected(stage, std::move(set));
  }

  // Stage 4.
  std::vector<FeatureVector> points;
  for (std::size_t idx : survivors) points.push_back(features[idx]);
  KMeansOptions km;
  km.k = std::min(config.requested_keyframes, survivors.size());
  km.seed = config.seed;
  km.max_iterations = config.max_iterations;
  km.tolerance = config.tolerance;
  KMeansResult clusters = kmeans(points, km);
  set.stage_counts[3] = km.k;

  // Stage 5.
  set.clusters.resize(km.k);
  for (std::size_t c = 0; c < km.k; ++c) set.clusters[c].id = c;
  for (std::size_t j = 0; j < survivors.size(); ++j) {
    set.clusters[clusters.assignments[j]].members.push_back(survivors[j]);
  }
  for (auto& cluster : set.clusters) {
    std::size_t best = cluster.members.front();
    for (std::size_t idx : cluster.members) {
      if (set.scores[idx].blur > set.scores[best].blur) best = idx;
    }
    cluster.keyframe = best;
    set.keyframes.push_back({best, cluster.id, frames[best]});
    set.keyframes.back().frame.index = best;
  }
  std::sort(set.keyframes.begin(), set.keyframes.end(),
            [](const Keyframe& a, const Keyframe& b) { return a.frame_index < b.frame_index; });
  set.stage_counts[4] = set.keyframes.size();
  return set;
}

}  // namespace vcc
