#pragma once

// Deterministic labelled corpus of short Y4M clips. Each class has its own
// background hue and moving-shape motif; clips vary in shape path, colour
// jitter and per-frame sensor noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vcc/manifest.hpp"
#include "vcc/media.hpp"
#include "vcc/rng.hpp"

namespace vcc {

struct SynthOptions {
  std::size_t classes = 5;
  std::size_t clips_per_class = 40;
  std::size_t frames = 30;
  std::size_t size = 64;
  std::uint64_t seed = 42;

  void validate() const {
    if (classes < 1) fail(ErrorCode::InvalidArgument, "need at least one class");
    if (clips_per_class < 1) fail(ErrorCode::InvalidArgument, "need at least one clip per class");
    if (frames < 1) fail(ErrorCode::InvalidArgument, "need at least one frame per clip");
    if (size < 8 || size % 2) fail(ErrorCode::InvalidArgument, "size must be even and >= 8");
  }
};

enum class Motif { Disc, Bar, Square };

struct ClassStyle {
  std::string label;
  std::array<double, 3> background;
  std::array<double, 3> foreground;
  Motif motif;
};

namespace detail {

inline std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  h = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  std::array<double, 3> rgb;
  switch (sector) {
    case 0: rgb = {v, t, p}; break;
    case 1: rgb = {q, v, p}; break;
    case 2: rgb = {p, v, t}; break;
    case 3: rgb = {p, q, v}; break;
    case 4: rgb = {t, p, v}; break;
    default: rgb = {v, p, q}; break;
  }
  for (double& c : rgb) c *= 255.0;
  return rgb;
}

}  // namespace detail

inline ClassStyle class_style(std::size_t c, std::size_t class_count) {
  static constexpr std::array<const char*, 12> kHueNames = {"Red",  "Orange", "Yellow", "Lime",    "Green",  "Jade",
                                                            "Cyan", "Azure",  "Blue",   "Violet",  "Magenta", "Rose"};
  static constexpr std::array<const char*, 3> kMotifNames = {"Disc", "Bar", "Square"};
  const double hue = static_cast<double>(c) / static_cast<double>(class_count);
  ClassStyle style;
  style.motif = static_cast<Motif>(c % 3);
  style.background = detail::hsv_to_rgb(hue, 0.75, 0.70);
  style.foreground = detail::hsv_to_rgb(hue + 0.5, 0.60, 0.85);
  auto hue_slot = static_cast<std::size_t>(std::lround(hue * 12.0)) % 12;
  style.label = std::string(kHueNames[hue_slot]) + kMotifNames[c % 3];
  if (class_count > 12) style.label += "_" + std::to_string(c);
  return style;
}

// Renders one clip. `clip_seed` fixes the path, jitter and noise.
inline std::vector<Frame> render_clip(const ClassStyle& style, const SynthOptions& options, std::uint64_t clip_seed) {
  Rng rng(clip_seed);
  const double n = static_cast<double>(options.size);
  std::array<double, 3> bg = style.background, fg = style.foreground;
  for (double& c : bg) c = std::clamp(c + rng.uniform(-12.0, 12.0), 0.0, 255.0);
  for (double& c : fg) c = std::clamp(c + rng.uniform(-12.0, 12.0), 0.0, 255.0);
  double x = rng.uniform(0.2, 0.8) * n, y = rng.uniform(0.2, 0.8) * n;
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double speed = rng.uniform(0.01, 0.04) * n;
  double vx = speed * std::cos(angle), vy = speed * std::sin(angle);
  const double radius = rng.uniform(0.12, 0.2) * n;

  std::vector<Frame> clip;
  for (std::size_t t = 0; t < options.frames; ++t) {
    Frame frame(options.size, options.size, ColorSpace::Rgb8);
    frame.index = t;
    for (std::size_t py = 0; py < options.size; ++py) {
      for (std::size_t px = 0; px < options.size; ++px) {
        const double dx = static_cast<double>(px) - x, dy = static_cast<double>(py) - y;
        bool inside = false;
        switch (style.motif) {
          case Motif::Disc: inside = dx * dx + dy * dy <= radius * radius; break;
          case Motif::Bar: inside = std::abs(dx) <= radius * 0.35; break;
          case Motif::Square: inside = std::abs(dx) <= radius && std::abs(dy) <= radius; break;
        }
        const auto& base = inside ? fg : bg;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          frame.at(px, py, ch) = detail::clamp_round(base[ch] + rng.uniform(-30.0, 30.0));
        }
      }
    }
    clip.push_back(std::move(frame));
    x += vx;
    y += vy;
    if (x < 0.0 || x > n) vx = -vx;
    if (y < 0.0 || y > n) vy = -vy;
  }
  return clip;
}

// Writes clips/<label>_<nnn>.y4m and manifest.tsv under `out_dir`; returns
// the manifest (paths relative to out_dir).
inline Manifest write_synthetic_corpus(const std::filesystem::path& out_dir, const SynthOptions& options) {
  namespace fs = std::filesystem;
  options.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "clips", ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + (out_dir / "clips").string() + ": " + ec.message());

  Manifest manifest;
  for (std::size_t c = 0; c < options.classes; ++c) {
    const ClassStyle style = class_style(c, options.classes);
    for (std::size_t k = 0; k < options.clips_per_class; ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "_%03zu.y4m", k);
      const fs::path relative = fs::path("clips") / (style.label + name);
      std::ofstream out(out_dir / relative, std::ios::binary | std::ios::trunc);
      if (!out) fail(ErrorCode::Io, "cannot create " + (out_dir / relative).string());
      VideoHeader header;
      header.width = header.height = options.size;
      write_y4m_header(out, header);
      for (const Frame& f : render_clip(style, options, derive_seed(options.seed, c * 1000003ULL + k))) {
        write_y4m_frame(out, f);
      }
      if (!out) fail(ErrorCode::Io, "write failed: " + (out_dir / relative).string());
      manifest.entries.push_back({style.label, relative});
    }
  }
  const std::string text = format_manifest(manifest);
  write_file(out_dir / "manifest.tsv",
             std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return manifest;
}

}  // namespace vcc
