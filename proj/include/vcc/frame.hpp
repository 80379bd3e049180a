#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vcc/error.hpp"

namespace vcc {

enum class ColorSpace { Rgb8, Gray8, LuvF32 };

constexpr std::size_t channel_count(ColorSpace space) noexcept {
  return space == ColorSpace::Gray8 ? 1 : 3;
}

constexpr const char* to_string(ColorSpace space) noexcept {
  switch (space) {
    case ColorSpace::Rgb8: return "RGB8";
    case ColorSpace::Gray8: return "GRAY8";
    case ColorSpace::LuvF32: return "LUV_F32";
  }
  return "?";
}

// Row-major interleaved raster. `Sample` is std::uint8_t for RGB8/GRAY8 and
// float for LUV_F32; `space` tags which interpretation applies.
template <class Sample>
struct Raster {
  std::size_t index = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  ColorSpace space = ColorSpace::Rgb8;
  std::vector<Sample> pixels;

  Raster() = default;
  Raster(std::size_t w, std::size_t h, ColorSpace cs, Sample fill = Sample{})
      : width(w), height(h), space(cs), pixels(w * h * channel_count(cs), fill) {}

  std::size_t channels() const noexcept { return channel_count(space); }
  std::size_t pixel_count() const noexcept { return width * height; }
  bool empty() const noexcept { return width == 0 || height == 0; }

  Sample& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return pixels[(y * width + x) * channels() + c];
  }
  const Sample& at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels() + c];
  }

  bool operator==(const Raster&) const = default;
};

using Frame = Raster<std::uint8_t>;
using LuvFrame = Raster<float>;

inline void require_space(ColorSpace actual, ColorSpace expected, const char* what) {
  if (actual != expected) {
    fail(ErrorCode::WrongColorSpace, std::string(what) + " expects " + to_string(expected) +
                                         ", got " + to_string(actual));
  }
}

}  // namespace vcc
