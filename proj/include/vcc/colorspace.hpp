#pragma once

#include <cmath>
#include <cstdint>

#include "vcc/frame.hpp"

namespace vcc {

struct LuvPixel {
  double L = 0.0;
  double u = 0.0;
  double v = 0.0;
};

// D65 reference white.
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.00000;
inline constexpr double kWhiteZ = 1.08883;

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

// sRGB (8-bit per channel) -> CIE L*u*v* relative to D65.
inline LuvPixel rgb_to_luv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = srgb_to_linear(r8 / 255.0);
  const double g = srgb_to_linear(g8 / 255.0);
  const double b = srgb_to_linear(b8 / 255.0);

  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

  constexpr double kEpsilon = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
  const double yr = y / kWhiteY;
  const double L = yr > kEpsilon ? 116.0 * std::cbrt(yr) - 16.0 : 903.3 * yr;

  constexpr double kWhiteDenom = kWhiteX + 15.0 * kWhiteY + 3.0 * kWhiteZ;
  constexpr double un = 4.0 * kWhiteX / kWhiteDenom;
  constexpr double vn = 9.0 * kWhiteY / kWhiteDenom;
  const double denom = x + 15.0 * y + 3.0 * z;
  const double up = denom > 0.0 ? 4.0 * x / denom : un;
  const double vp = denom > 0.0 ? 9.0 * y / denom : vn;

  return {L, 13.0 * L * (up - un), 13.0 * L * (vp - vn)};
}

inline LuvFrame rgb_to_luv(const Frame& frame) {
  require_space(frame.space, ColorSpace::Rgb8, "rgb_to_luv");
  LuvFrame out(frame.width, frame.height, ColorSpace::LuvF32);
  out.index = frame.index;
  const std::size_t n = frame.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = &frame.pixels[3 * i];
    LuvPixel luv = rgb_to_luv(p[0], p[1], p[2]);
    out.pixels[3 * i + 0] = static_cast<float>(luv.L);
    out.pixels[3 * i + 1] = static_cast<float>(luv.u);
    out.pixels[3 * i + 2] = static_cast<float>(luv.v);
  }
  return out;
}

inline std::uint8_t luma_601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // Integer weights (x1000) keep gray inputs exact: 299 + 587 + 114 = 1000.
  std::uint32_t weighted = 299u * r + 587u * g + 114u * b;
  std::uint32_t rounded = (weighted + 500u) / 1000u;
  return static_cast<std::uint8_t>(rounded > 255u ? 255u : rounded);
}

inline Frame rgb_to_gray(const Frame& frame) {
  require_space(frame.space, ColorSpace::Rgb8, "rgb_to_gray");
  Frame out(frame.width, frame.height, ColorSpace::Gray8);
  out.index = frame.index;
  const std::size_t n = frame.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.pixels[i] = luma_601(frame.pixels[3 * i], frame.pixels[3 * i + 1], frame.pixels[3 * i + 2]);
  }
  return out;
}

}  // namespace vcc
