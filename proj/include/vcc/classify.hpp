#pragma once

// Bridges video frames to the classifier: keyframe extraction, resizing to the
// model input and [0,1] scaling.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vcc/keyframes.hpp"
#include "vcc/media.hpp"
#include "vcc/model.hpp"

namespace vcc {

inline Tensor frame_to_tensor(const Frame& frame, std::size_t width, std::size_t height) {
  Frame resized = resize_bilinear(frame, width, height);
  Tensor t({height, width, 3});
  for (std::size_t i = 0; i < resized.pixels.size(); ++i) t[i] = static_cast<float>(resized.pixels[i]) / 255.0f;
  return t;
}

// Keyframes of `frames` in temporal order, as model inputs. Throws
// AllFramesRejected if the filters leave nothing.
inline std::vector<Tensor> keyframe_sequence(std::span<const Frame> frames, const ModelSpec& spec,
                                             const PipelineConfig& config) {
  KeyframeSet set = extract_keyframes(frames, config);
  std::vector<Tensor> sequence;
  for (const auto& kf : set.keyframes) sequence.push_back(frame_to_tensor(kf.frame, spec.input_w, spec.input_h));
  return sequence;
}

// P(class | video) for every class in spec.classes.
inline Tensor classify_video(const ModelSpec& spec, const Parameters& params, std::span<const Frame> frames,
                             const PipelineConfig& config) {
  return forward(spec, params, keyframe_sequence(frames, spec, config));
}

}  // namespace vcc
