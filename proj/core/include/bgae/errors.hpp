#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace bgae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `what()` names the file and 1-based line.
class ParseError : public Error {
 public:
  ParseError(const std::filesystem::path& file, std::size_t line, const std::string& message);

  const std::filesystem::path& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

/// One or more invariant violations, all reported at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  explicit ValidationError(const std::string& violation);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not agree for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, int last_finite_epoch);

  int last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

}  // namespace bgae
