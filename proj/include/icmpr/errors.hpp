#pragma once

#include <stdexcept>
#include <string>

namespace icmpr {

// A model/covariate combination that violates the model-type rules, or an
// argument outside its contract.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised while reading a data or scenario file; carries the offending
// location so the CLI can point at it.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long row, std::string column)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", column '" + column + "')"),
        row_(row),
        column_(std::move(column)) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), row_(-1) {}

  long row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  long row_;
  std::string column_;
};

// The data cannot identify the model at all, e.g. every observation is
// right-censored.
class NonIdentifiableError : public std::runtime_error {
 public:
  explicit NonIdentifiableError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace icmpr
