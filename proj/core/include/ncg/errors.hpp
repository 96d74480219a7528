#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ncg {

/// Raised when an MCMC update produces non-finite state; carries the sweep index.
class SamplerFault : public std::runtime_error {
 public:
  SamplerFault(std::string what, long iteration)
      : std::runtime_error(std::move(what)), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// Raised when a variational update hits a singular system or corrupt moments.
class InferenceFault : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an EM shape update receives non-finite expectations.
class EmFault : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invariant violations on user-facing inputs; lists every failed field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "validation failed:";
    for (const auto& s : issues) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> issues_;
};

/// CSV/JSON ingestion errors with file location where known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long row = -1, long col = -1)
      : std::runtime_error(locate(what, row, col)), row_(row), col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  static std::string locate(const std::string& what, long row, long col) {
    std::string out = what;
    if (row >= 0) out += " (row " + std::to_string(row);
    if (row >= 0 && col >= 0) out += ", column " + std::to_string(col);
    if (row >= 0) out += ")";
    return out;
  }
  long row_;
  long col_;
};

}  // namespace ncg
