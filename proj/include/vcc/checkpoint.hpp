#pragma once

// Checkpoint layout (all integers little-endian):
//   "VCCMODEL"            8 bytes
//   version               u32 = 1
//   descriptor length     u32
//   descriptor            UTF-8 text (see describe())
//   parameters            f32 LE, tensors in declaration order

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcc/media.hpp"
#include "vcc/model.hpp"

namespace vcc {

inline constexpr char kCheckpointMagic[8] = {'V', 'C', 'C', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const ModelSpec& spec, const Parameters& params) {
  const ModelPlan plan = plan_model(spec);
  if (params.size() != plan.param_shapes.size()) fail(ErrorCode::ShapeMismatch, "parameter count mismatch");
  const std::string descriptor = describe(spec);
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(descriptor.size()));
  out.insert(out.end(), descriptor.begin(), descriptor.end());
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(params[i], plan.param_shapes[i], "checkpoint parameter");
    for (float v : params[i].values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline std::pair<ModelSpec, Parameters> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    fail(ErrorCode::BadMagic, "not a VCCMODEL checkpoint");
  }
  if (bytes.size() < 16) fail(ErrorCode::Truncated, "checkpoint header truncated");
  const std::uint32_t version = detail::get_u32(bytes, 8);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version));
  }
  const std::uint32_t length = detail::get_u32(bytes, 12);
  if (bytes.size() - 16 < length) fail(ErrorCode::Truncated, "descriptor truncated");
  const std::string descriptor(bytes.begin() + 16, bytes.begin() + 16 + length);
  ModelSpec spec = parse_descriptor(descriptor);

  std::size_t at = 16 + length;
  Parameters params;
  for (const auto& shape : plan_model(spec).param_shapes) {
    Tensor t(shape);
    if ((bytes.size() - at) / 4 < t.size()) {
      fail(ErrorCode::Truncated, "parameter payload shorter than the descriptor declares");
    }
    for (float& v : t.values()) {
      v = std::bit_cast<float>(detail::get_u32(bytes, at));
      at += 4;
    }
    params.push_back(std::move(t));
  }
  if (at != bytes.size()) {
    fail(ErrorCode::DescriptorShapeMismatch, std::to_string(bytes.size() - at) + " bytes beyond declared parameters");
  }
  return {std::move(spec), std::move(params)};
}

inline void save_checkpoint(const ModelSpec& spec, const Parameters& params, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(spec, params));
}

inline std::pair<ModelSpec, Parameters> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace vcc
