#pragma once

#include <stdexcept>
#include <string>

namespace sguq {

// Base of all library failures. `kind()` is a stable machine-parseable
// category used by the CLI for one-line diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Malformed input file or wire payload.
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error("parse", w) {}
};

// Well-formed input that violates a data-model invariant.
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error("validation", w) {}
};

// Caller passed an out-of-range or inconsistent argument.
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error("argument", w) {}
};

// Operation invoked on state that misses a stated precondition.
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error("precondition", w) {}
};

// Numerical routine left its validity envelope (non-PSD input,
// solver budget exhausted, ...).
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error("numerical", w) {}
};

// Transport or filesystem failure, possibly after retries.
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

// External judge produced an unusable verdict.
struct LabelError : Error {
  explicit LabelError(const std::string& w) : Error("label", w) {}
};

}  // namespace sguq
