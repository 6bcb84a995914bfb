#include "occmatch/error.h"

namespace occmatch {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kEmptyDepth: return "EmptyDepth";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kChannelMismatch: return "ChannelMismatch";
    case ErrorCode::kUnknownAngle: return "UnknownAngle";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kDegenerateHeatmap: return "DegenerateHeatmap";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInsufficientMatches: return "InsufficientMatches";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kZeroTranslation: return "ZeroTranslation";
    case ErrorCode::kEmptyErrorList: return "EmptyErrorList";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kSchema: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace occmatch
