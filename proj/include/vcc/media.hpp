#pragma once

// Frame sources: binary PPM (P6) images, frame directories and uncompressed
// YUV4MPEG2 (4:2:0) streams, plus bilinear resampling to model resolution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vcc/error.hpp"
#include "vcc/frame.hpp"

namespace vcc {

namespace detail {

inline bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline constexpr std::size_t kMaxDimension = 1u << 16;

// Cursor over a PPM header. Whitespace and `#` comments may precede each field.
class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::optional<std::uint64_t> number() {
    std::uint64_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
      ++pos_;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::uint8_t clamp_round(double v) {
  double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace detail

inline Frame parse_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    fail(ErrorCode::BadMagic, "expected P6 signature");
  }
  detail::PpmHeaderReader reader(bytes.subspan(2));
  if (reader.at_end() || !(detail::is_space(reader.peek()) || reader.peek() == '#')) {
    fail(ErrorCode::BadHeader, "missing separator after magic");
  }

  std::uint64_t dims[2];
  for (auto& d : dims) {
    reader.skip_space_and_comments();
    auto n = reader.number();
    if (!n) fail(ErrorCode::BadHeader, "width/height must be a decimal integer");
    if (*n == 0) fail(ErrorCode::BadHeader, "zero image dimension");
    if (*n > detail::kMaxDimension) fail(ErrorCode::BadHeader, "image dimension too large");
    d = *n;
  }

  reader.skip_space_and_comments();
  auto maxval = reader.number();
  if (!maxval) fail(ErrorCode::BadHeader, "maxval must be a decimal integer");
  if (*maxval != 255) {
    fail(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(*maxval) + " (only 255)");
  }
  if (reader.at_end() || !detail::is_space(reader.peek())) {
    fail(ErrorCode::BadHeader, "maxval must be followed by one whitespace byte");
  }
  reader.advance();

  Frame frame(dims[0], dims[1], ColorSpace::Rgb8);
  std::size_t raster_start = 2 + reader.pos();
  std::size_t need = frame.pixels.size();
  std::size_t have = bytes.size() - raster_start;
  if (have < need) {
    fail(ErrorCode::TruncatedRaster,
         "raster needs " + std::to_string(need) + " bytes, found " + std::to_string(have));
  }
  if (have > need) {
    fail(ErrorCode::TrailingGarbage, std::to_string(have - need) + " bytes after raster");
  }
  std::copy_n(bytes.begin() + raster_start, need, frame.pixels.begin());
  return frame;
}

inline std::vector<std::uint8_t> write_ppm(const Frame& frame) {
  require_space(frame.space, ColorSpace::Rgb8, "write_ppm");
  std::string header =
      "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::Io, "read failed: " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

// Every `*.ppm` file in `dir`, in lexicographic filename order.
inline std::vector<Frame> load_frame_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& file : files) {
    auto bytes = read_file(file);
    try {
      frames.push_back(parse_ppm(bytes));
    } catch (const Error& e) {
      fail(e.code(), file.string() + ": " + e.message());
    }
    frames.back().index = frames.size() - 1;
  }
  return frames;
}

// ---------------------------------------------------------------------------
// YUV4MPEG2

struct VideoHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t fps_num = 25;
  std::uint32_t fps_den = 1;
  std::string chroma = "420";
  std::string source;

  std::size_t luma_size() const { return width * height; }
  std::size_t chroma_size() const { return (width / 2) * (height / 2); }
  std::size_t frame_size() const { return luma_size() + 2 * chroma_size(); }
};

// BT.601 limited range, rounded half-up and clamped.
inline void ycbcr_to_rgb(std::uint8_t y, std::uint8_t cb, std::uint8_t cr, std::uint8_t* rgb) {
  double c = static_cast<double>(y) - 16.0;
  double d = static_cast<double>(cb) - 128.0;
  double e = static_cast<double>(cr) - 128.0;
  rgb[0] = detail::clamp_round(1.164383 * c + 1.596027 * e);
  rgb[1] = detail::clamp_round(1.164383 * c - 0.391762 * d - 0.812968 * e);
  rgb[2] = detail::clamp_round(1.164383 * c + 2.017232 * d);
}

// Inverse of the above (used when writing Y4M).
inline void rgb_to_ycbcr(double r, double g, double b, double& y, double& cb, double& cr) {
  y = 16.0 + 0.256788 * r + 0.504129 * g + 0.097906 * b;
  cb = 128.0 - 0.148223 * r - 0.290993 * g + 0.439216 * b;
  cr = 128.0 + 0.439216 * r - 0.367788 * g - 0.071427 * b;
}

// Incremental YUV4MPEG2 reader: the header is parsed on construction and
// frames are decoded one at a time with `next()`.
class Y4mReader {
 public:
  explicit Y4mReader(std::istream& in, std::string source = {}) : in_(in) {
    header_.source = std::move(source);
    parse_header();
  }

  const VideoHeader& header() const { return header_; }

  std::optional<Frame> next() {
    char marker[5];
    in_.read(marker, 5);
    std::streamsize got = in_.gcount();
    if (got == 0 && in_.eof()) return std::nullopt;
    if (got != 5 || std::string_view(marker, 5) != "FRAME") {
      fail(ErrorCode::BadFrameMarker, "frame " + std::to_string(count_) + ": expected FRAME");
    }
    // Frame parameters are accepted and ignored.
    std::size_t skipped = 0;
    for (;;) {
      int c = in_.get();
      if (c == std::char_traits<char>::eof()) {
        fail(ErrorCode::TruncatedFrame, "frame " + std::to_string(count_) + ": unterminated FRAME line");
      }
      if (c == '\n') break;
      if (++skipped > 4096) fail(ErrorCode::BadFrameMarker, "FRAME line too long");
    }

    planes_.resize(header_.frame_size());
    in_.read(reinterpret_cast<char*>(planes_.data()), static_cast<std::streamsize>(planes_.size()));
    if (static_cast<std::size_t>(in_.gcount()) != planes_.size()) {
      fail(ErrorCode::TruncatedFrame, "frame " + std::to_string(count_) + ": payload needs " +
                                          std::to_string(planes_.size()) + " bytes, got " +
                                          std::to_string(in_.gcount()));
    }

    const std::size_t w = header_.width, h = header_.height, cw = w / 2;
    const std::uint8_t* luma = planes_.data();
    const std::uint8_t* cb = luma + header_.luma_size();
    const std::uint8_t* cr = cb + header_.chroma_size();
    Frame frame(w, h, ColorSpace::Rgb8);
    frame.index = count_++;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        std::size_t ci = (y / 2) * cw + (x / 2);
        ycbcr_to_rgb(luma[y * w + x], cb[ci], cr[ci], &frame.at(x, y, 0));
      }
    }
    return frame;
  }

  std::size_t frames_read() const { return count_; }

 private:
  static std::optional<std::uint64_t> parse_uint(std::string_view s) {
    if (s.empty() || s.size() > 9) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  }

  void parse_header() {
    std::string line;
    for (;;) {
      int c = in_.get();
      if (c == std::char_traits<char>::eof()) fail(ErrorCode::BadSignature, "unterminated stream header");
      if (c == '\n') break;
      line.push_back(static_cast<char>(c));
      if (line.size() > 4096) fail(ErrorCode::BadSignature, "stream header too long");
    }
    constexpr std::string_view kSignature = "YUV4MPEG2";
    if (line.compare(0, kSignature.size(), kSignature) != 0 ||
        (line.size() > kSignature.size() && line[kSignature.size()] != ' ')) {
      fail(ErrorCode::BadSignature, "expected YUV4MPEG2");
    }

    bool have_w = false, have_h = false, have_f = false;
    std::string_view rest = std::string_view(line).substr(kSignature.size());
    while (!rest.empty()) {
      auto space = rest.find(' ');
      std::string_view token = rest.substr(0, space);
      rest = space == std::string_view::npos ? std::string_view{} : rest.substr(space + 1);
      if (token.empty()) continue;
      char tag = token[0];
      std::string_view value = token.substr(1);
      switch (tag) {
        case 'W':
        case 'H': {
          auto v = parse_uint(value);
          if (!v) fail(ErrorCode::BadHeader, std::string("bad ") + tag + " tag");
          (tag == 'W' ? header_.width : header_.height) = static_cast<std::size_t>(*v);
          (tag == 'W' ? have_w : have_h) = true;
          break;
        }
        case 'F': {
          auto colon = value.find(':');
          auto num = parse_uint(value.substr(0, colon));
          auto den = colon == std::string_view::npos ? std::nullopt : parse_uint(value.substr(colon + 1));
          if (!num || !den || *den == 0) fail(ErrorCode::BadHeader, "bad F tag");
          header_.fps_num = static_cast<std::uint32_t>(*num);
          header_.fps_den = static_cast<std::uint32_t>(*den);
          have_f = true;
          break;
        }
        case 'C':
          header_.chroma = std::string(value);
          break;
        case 'I':  // interlacing: parsed, ignored
        case 'A':
        case 'X':
          break;
        default:
          break;
      }
    }
    if (!have_w || !have_h || !have_f) fail(ErrorCode::BadHeader, "W, H and F tags are required");
    if (header_.chroma != "420" && header_.chroma != "420jpeg" && header_.chroma != "420mpeg2") {
      fail(ErrorCode::UnsupportedChroma, "C" + header_.chroma + " (only 4:2:0)");
    }
    if (header_.width < 2 || header_.height < 2 || header_.width % 2 || header_.height % 2) {
      fail(ErrorCode::BadHeader, "4:2:0 requires even dimensions >= 2");
    }
    if (header_.width > detail::kMaxDimension || header_.height > detail::kMaxDimension) {
      fail(ErrorCode::BadHeader, "dimension too large");
    }
  }

  std::istream& in_;
  VideoHeader header_;
  std::vector<std::uint8_t> planes_;
  std::size_t count_ = 0;
};

struct Video {
  VideoHeader header;
  std::vector<Frame> frames;
};

inline Video parse_y4m(std::istream& in, std::string source = {}) {
  Y4mReader reader(in, std::move(source));
  Video video{reader.header(), {}};
  while (auto frame = reader.next()) video.frames.push_back(std::move(*frame));
  return video;
}

inline Video parse_y4m(std::span<const std::uint8_t> bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  return parse_y4m(in);
}

inline void write_y4m_header(std::ostream& out, const VideoHeader& header) {
  out << "YUV4MPEG2 W" << header.width << " H" << header.height << " F" << header.fps_num << ':'
      << header.fps_den << " Ip A1:1 C" << header.chroma << '\n';
}

// Encodes an RGB8 frame as a 4:2:0 FRAME record; chroma is the 2x2 block mean.
inline void write_y4m_frame(std::ostream& out, const Frame& frame) {
  require_space(frame.space, ColorSpace::Rgb8, "write_y4m_frame");
  const std::size_t w = frame.width, h = frame.height, cw = w / 2, ch = h / 2;
  std::vector<std::uint8_t> planes(w * h + 2 * cw * ch);
  std::uint8_t* cb_plane = planes.data() + w * h;
  std::uint8_t* cr_plane = cb_plane + cw * ch;
  std::vector<double> cb_acc(cw * ch, 0.0), cr_acc(cw * ch, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double luma, cb, cr;
      rgb_to_ycbcr(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2), luma, cb, cr);
      planes[y * w + x] = detail::clamp_round(luma);
      std::size_t ci = (y / 2) * cw + (x / 2);
      cb_acc[ci] += cb;
      cr_acc[ci] += cr;
    }
  }
  for (std::size_t i = 0; i < cw * ch; ++i) {
    cb_plane[i] = detail::clamp_round(cb_acc[i] / 4.0);
    cr_plane[i] = detail::clamp_round(cr_acc[i] / 4.0);
  }
  out << "FRAME\n";
  out.write(reinterpret_cast<const char*>(planes.data()), static_cast<std::streamsize>(planes.size()));
}

// Frame directory or `.y4m` file.
inline std::vector<Frame> load_video(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) fail(ErrorCode::Io, "no such file or directory: " + path.string());
  if (fs::is_directory(path)) return load_frame_directory(path);
  if (path.extension() != ".y4m") {
    fail(ErrorCode::Io, "unsupported input (expected directory or .y4m): " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return parse_y4m(in, path.string()).frames;
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.message());
  }
}

// ---------------------------------------------------------------------------
// Resampling

// Half-pixel-centre bilinear resize with edge clamping; output rounded half-up.
inline Frame resize_bilinear(const Frame& frame, std::size_t out_w, std::size_t out_h) {
  require_space(frame.space, ColorSpace::Rgb8, "resize_bilinear");
  if (out_w == 0 || out_h == 0 || frame.empty()) fail(ErrorCode::ZeroDimension, "resize to/from zero size");
  if (out_w == frame.width && out_h == frame.height) return frame;

  struct Tap {
    std::size_t lo, hi;
    double t;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    double scale = static_cast<double>(in) / static_cast<double>(out);
    double max_pos = static_cast<double>(in - 1);
    for (std::size_t i = 0; i < out; ++i) {
      double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, max_pos);
      auto lo = static_cast<std::size_t>(std::floor(src));
      result[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return result;
  };
  auto xs = taps(frame.width, out_w);
  auto ys = taps(frame.height, out_h);

  Frame out(out_w, out_h, ColorSpace::Rgb8);
  out.index = frame.index;
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& ty = ys[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      for (std::size_t c = 0; c < 3; ++c) {
        double top = frame.at(tx.lo, ty.lo, c) * (1.0 - tx.t) + frame.at(tx.hi, ty.lo, c) * tx.t;
        double bottom = frame.at(tx.lo, ty.hi, c) * (1.0 - tx.t) + frame.at(tx.hi, ty.hi, c) * tx.t;
        out.at(x, y, c) = detail::clamp_round(top * (1.0 - ty.t) + bottom * ty.t);
      }
    }
  }
  return out;
}

}  // namespace vcc
