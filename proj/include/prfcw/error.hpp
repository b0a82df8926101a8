#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prfcw {

enum class ErrorCode {
  InvalidDistribution,
  NonFiniteMoment,
  NoConvergence,
  FlatnessUndetectable,
  DegenerateField,
  RegimeMismatch,
  NegativeVariance,
  Overflow,
  GridUnderflow,
  TooLarge,
  BadSubset,
  ScanTooLarge,
  OddSampleCount,
  EigFailure,
  InvalidSpec,
  NotReached,
  UsageError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prfcw
