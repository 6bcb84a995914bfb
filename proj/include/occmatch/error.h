#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace occmatch {

enum class ErrorCode {
  kInvalidArgument,
  kNonPositiveDepth,
  kEmptyDepth,
  kEmptyCloud,
  kShapeMismatch,
  kChannelMismatch,
  kUnknownAngle,
  kEmptyCandidates,
  kEmptyGroundTruth,
  kDegenerateHeatmap,
  kLengthMismatch,
  kInsufficientMatches,
  kDegenerateConfiguration,
  kZeroTranslation,
  kEmptyErrorList,
  kEmptyList,
  kIo,
  kSchema,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define OCCMATCH_CHECK(cond, code, msg)        \
  do {                                         \
    if (!(cond)) {                             \
      throw ::occmatch::Error((code), (msg));  \
    }                                          \
  } while (false)

}  // namespace occmatch
