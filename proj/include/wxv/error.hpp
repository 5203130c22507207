#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wxv {

/// Failure categories raised by the library. Each maps to one named error
/// condition of an operation contract.
enum class ErrorCode {
  DegenerateGrid,
  InvalidGrid,
  OutOfDomain,
  MissingStep,
  SpecMismatch,
  InvalidData,
  EmptyInput,
  EmptyEnsemble,
  FormatError,
  UnsupportedVariable,
  InsufficientHistory,
  InvalidStep,
  TrainingDiverged,
  NonSmoothPoint,
  LeadGridMismatch,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

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

}  // namespace wxv
