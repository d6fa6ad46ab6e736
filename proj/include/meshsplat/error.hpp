#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meshsplat {

enum class ErrorCode {
  // mesh_io
  MalformedHeader,
  TruncatedBody,
  NonTriangulatable,
  EmptyCloud,
  // colmap_io
  TruncatedFile,
  UnsupportedCameraModel,
  DanglingCameraRef,
  DuplicateId,
  InvalidModel,
  // sampler
  DepthTooLarge,
  AllDegenerate,
  TableTooShallow,
  // color_init
  NoImages,
  UndecodableImage,
  TooFewPixels,
  // registration
  TooFewCorrespondences,
  DegenerateConfiguration,
  ReflectionDetected,
  InvalidTransform,
  // splat_preview
  BehindCamera,
  // metrics
  DimensionMismatch,
  BoxOutOfBounds,
  TooSmall,
  // shared
  InvalidArgument,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a stable machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace meshsplat
