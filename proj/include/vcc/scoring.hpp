#pragma once

// Per-frame measurements used by keyframe selection: LUV difference,
// brightness, intensity entropy and variance of the Laplacian.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "vcc/frame.hpp"

namespace vcc {

enum class RejectReason { Diff, Brightness, Entropy };

constexpr const char* to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::Diff: return "diff";
    case RejectReason::Brightness: return "brightness";
    case RejectReason::Entropy: return "entropy";
  }
  return "?";
}

struct FrameScores {
  std::size_t index = 0;
  double diff = std::numeric_limits<double>::infinity();  // +inf for frame 0
  double brightness = 0.0;
  double entropy = 0.0;
  double blur = 0.0;
  std::optional<RejectReason> rejected;  // nullopt means kept

  bool kept() const noexcept { return !rejected.has_value(); }
};

// Mean absolute difference over every pixel and all three LUV channels.
inline double luv_frame_difference(const LuvFrame& a, const LuvFrame& b) {
  require_space(a.space, ColorSpace::LuvF32, "luv_frame_difference");
  require_space(b.space, ColorSpace::LuvF32, "luv_frame_difference");
  if (a.width != b.width || a.height != b.height) {
    fail(ErrorCode::DimensionMismatch, std::to_string(a.width) + "x" + std::to_string(a.height) +
                                           " vs " + std::to_string(b.width) + "x" +
                                           std::to_string(b.height));
  }
  if (a.pixels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    sum += std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
  }
  return sum / static_cast<double>(a.pixels.size());
}

// Mean L* / 100.
inline double brightness_score(const LuvFrame& frame) {
  require_space(frame.space, ColorSpace::LuvF32, "brightness_score");
  const std::size_t n = frame.pixel_count();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += frame.pixels[3 * i];
  return sum / static_cast<double>(n) / 100.0;
}

// Shannon entropy (bits) of the 256-bin intensity histogram.
inline double entropy_score(const Frame& gray) {
  require_space(gray.space, ColorSpace::Gray8, "entropy_score");
  std::array<std::size_t, 256> histogram{};
  for (std::uint8_t v : gray.pixels) ++histogram[v];
  const double n = static_cast<double>(gray.pixels.size());
  double h = 0.0;
  for (std::size_t count : histogram) {
    if (count == 0) continue;
    double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

// Population variance of the 4-neighbour Laplacian over interior pixels.
inline double laplacian_variance(const Frame& gray) {
  require_space(gray.space, ColorSpace::Gray8, "laplacian_variance");
  if (gray.width < 3 || gray.height < 3) {
    fail(ErrorCode::TooSmall, "laplacian needs at least 3x3, got " + std::to_string(gray.width) +
                                  "x" + std::to_string(gray.height));
  }
  const std::size_t w = gray.width;
  const std::uint8_t* p = gray.pixels.data();
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t y = 1; y + 1 < gray.height; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      std::size_t i = y * w + x;
      int response = p[i - w] + p[i + w] + p[i - 1] + p[i + 1] - 4 * p[i];
      sum += response;
      sum_sq += static_cast<double>(response) * response;
    }
  }
  const double n = static_cast<double>((w - 2) * (gray.height - 2));
  const double mean = sum / n;
  return std::max(0.0, sum_sq / n - mean * mean);
}

}  // namespace vcc
