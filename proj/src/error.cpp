#include "meshsplat/error.hpp"

namespace meshsplat {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::NonTriangulatable: return "NonTriangulatable";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::UnsupportedCameraModel: return "UnsupportedCameraModel";
    case ErrorCode::DanglingCameraRef: return "DanglingCameraRef";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::DepthTooLarge: return "DepthTooLarge";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::TableTooShallow: return "TableTooShallow";
    case ErrorCode::NoImages: return "NoImages";
    case ErrorCode::UndecodableImage: return "UndecodableImage";
    case ErrorCode::TooFewPixels: return "TooFewPixels";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::ReflectionDetected: return "ReflectionDetected";
    case ErrorCode::InvalidTransform: return "InvalidTransform";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace meshsplat
