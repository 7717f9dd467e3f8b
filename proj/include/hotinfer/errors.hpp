#pragma once

#include <stdexcept>
#include <string>

namespace hotinfer {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteInput,
  DegenerateColumn,
  IndexOutOfRange,
  RankDeficientFreeSet,
  RankDeficientScreenSet,
  AllRankDeficient,
  SingularGram,
  SigmaCollapse,
  AllFitsFailed,
  DegenerateDirection,
  DegenerateInnerProduct,
  InvalidAlpha,
  InvalidPattern,
  FatalSimFailure,
  CsvError,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

/// Single exception type for all recoverable failures; the code tells
/// callers (and tests) which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hotinfer
