#include "lexdiff/error.hpp"

namespace lexdiff {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string message = std::to_string(problems.size()) + " validation problem(s)";
  for (const auto& p : problems) {
    message += "\n  ";
    message += p;
  }
  return message;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : InputError(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace lexdiff
