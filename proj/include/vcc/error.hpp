#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcc {

enum class ErrorCode {
  // media_ingest
  BadMagic,
  BadHeader,
  UnsupportedMaxval,
  TruncatedRaster,
  TrailingGarbage,
  BadSignature,
  UnsupportedChroma,
  BadFrameMarker,
  TruncatedFrame,
  ZeroDimension,
  // colorspace / scoring / clustering
  WrongColorSpace,
  DimensionMismatch,
  TooSmall,
  EmptyFrame,
  KTooLarge,
  EmptyInput,
  AllFramesRejected,
  // neural
  ShapeMismatch,
  IndivisibleShape,
  BadRate,
  EmptySequence,
  BadIndex,
  NonFinite,
  InvalidSpec,
  // trainer
  TooFewSamples,
  EmptyDataset,
  VersionMismatch,
  Truncated,
  DescriptorShapeMismatch,
  // cli
  Io,
  BadManifest,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::TruncatedRaster: return "TruncatedRaster";
    case ErrorCode::TrailingGarbage: return "TrailingGarbage";
    case ErrorCode::BadSignature: return "BadSignature";
    case ErrorCode::UnsupportedChroma: return "UnsupportedChroma";
    case ErrorCode::BadFrameMarker: return "BadFrameMarker";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::WrongColorSpace: return "WrongColorSpace";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AllFramesRejected: return "AllFramesRejected";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndivisibleShape: return "IndivisibleShape";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::DescriptorShapeMismatch: return "DescriptorShapeMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadManifest: return "BadManifest";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every failure in the library is reported through this type; `code()` is
// the stable discriminator, `what()` is a human-readable one-liner.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vcc
