#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document or expression. `position` is a line number for
// documents and a byte offset for expressions.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Structurally valid input that violates a model invariant
// (disconnected graph, nonpositive length, unknown edge id, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A coefficient sample was nonfinite or a pole was hit during evaluation.
class IntegrabilityError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Factorization breakdown, non-convergence, or a monotonicity assertion
// that failed beyond tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A mathematical hypothesis (positivity, integrability, ...) is not met.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// Inconsistent command-line or run configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace qgs
