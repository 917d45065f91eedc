#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parastitch {

enum class ErrorCode {
  kDegenerateConfiguration,
  kPreconditionViolation,
  kEmptyResult,
  kDimensionMismatch,
  kDecodeError,
  kIoError,
  kEmptyOverlap,
  kNoModelFound,
  kEmptyRegion,
  kCanvasOverflow,
  kSingularMap,
  kPointAtInfinity,
  kInvalidSpec,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type; the
// code lets callers (and the CLI's exit-status mapping) branch on the class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace parastitch
