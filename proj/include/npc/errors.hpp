#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace npc {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Schema construction or lookup failed (bad cardinality, duplicate name, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// An assignment, rule, or dataset refers to variables/values outside the
// schema it is used with.
class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

// The node table does not form a rooted DAG (cycle, dangling child, ...).
class CircuitStructureError : public Error {
 public:
  using Error::Error;
};

// Conditioning evidence has zero probability.
class UndefinedConditionalError : public Error {
 public:
  using Error::Error;
};

// The circuit evaluates to zero under the assignment, so d log f is undefined.
class GradientUndefinedError : public Error {
 public:
  using Error::Error;
};

// Malformed textual input (circuit file, rule file, dataset file, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A well-formed circuit failed semantic validation (smoothness,
// decomposability, normalization, weight positivity).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Rows with zero probability under the circuit; weight fitting cannot reach
// them via multiplicative updates.
class UnreachableRowsError : public Error {
 public:
  UnreachableRowsError(const std::string& what, std::vector<std::size_t> rows)
      : Error(what), rows_(std::move(rows)) {}
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

// Training produced a non-finite loss.
class DivergedTrainingError : public Error {
 public:
  using Error::Error;
};

// A training sample's true label has zero predicted probability.
class InfiniteLossError : public Error {
 public:
  using Error::Error;
};

// The attribute assignment space exceeds the enumeration cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Every enumerated explanation term is zero.
class NoExplanationError : public Error {
 public:
  using Error::Error;
};

// A rate metric has an empty denominator.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// The counterfactual objective is identically zero at initialization.
class UncorrectableError : public Error {
 public:
  using Error::Error;
};

// A referenced file or model bundle artifact is missing or unreadable.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace npc
