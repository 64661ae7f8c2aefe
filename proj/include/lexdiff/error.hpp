#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lexdiff {

/// Raised when caller-supplied data violates an operation's preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by bundle loading with every violation found, not just the first.
class ValidationError : public InputError {
 public:
  explicit ValidationError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Broken internal invariant (e.g. a NaN probability). Never expected.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lexdiff
