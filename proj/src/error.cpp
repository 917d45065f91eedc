#include "parastitch/error.hpp"

namespace parastitch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyOverlap: return "EmptyOverlap";
    case ErrorCode::kNoModelFound: return "NoModelFound";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kCanvasOverflow: return "CanvasOverflow";
    case ErrorCode::kSingularMap: return "SingularMap";
    case ErrorCode::kPointAtInfinity: return "PointAtInfinity";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace parastitch
