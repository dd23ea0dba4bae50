#pragma once

#include <stdexcept>
#include <string>

namespace palmsdp {

/// Dimension mismatch, malformed data or a violated precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The Gram matrix was not formed because its predicted size exceeds the
/// configured threshold.
class GramRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky breakdown persisted through the whole perturbation ladder.
class DegenerateGram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user objective callback failed or returned non-finite data.
class ObjectiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The dense reference solver ran out of budget before certifying.
class OracleFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace palmsdp
