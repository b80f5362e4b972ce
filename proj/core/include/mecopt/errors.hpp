#pragma once

#include <stdexcept>
#include <string>

namespace mecopt {

// Malformed external input: scenario files, LLM text, CLI values.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition the caller was responsible for did not hold.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Numerical evaluation produced a non-finite or otherwise unusable value.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mecopt
