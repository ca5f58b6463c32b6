#include "bgae/errors.hpp"

namespace bgae {
namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out = "validation failed";
  for (const auto& v : violations) {
    out += "\n  - ";
    out += v;
  }
  return out;
}

}  // namespace

ParseError::ParseError(const std::filesystem::path& file, std::size_t line,
                       const std::string& message)
    : Error(file.string() + ":" + std::to_string(line) + ": " + message), file_(file), line_(line) {}

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

ValidationError::ValidationError(const std::string& violation)
    : ValidationError(std::vector<std::string>{violation}) {}

DivergenceError::DivergenceError(const std::string& message, int last_finite_epoch)
    : Error(message + " (last finite epoch: " + std::to_string(last_finite_epoch) + ")"),
      last_finite_epoch_(last_finite_epoch) {}

}  // namespace bgae
