#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace degen {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or shape disagreement between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A data record violates a cohort invariant; message names the row.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file is missing required columns or has a malformed layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A synthetic-cohort spec cannot produce valid trajectories.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Configuration document or flag set is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Normal-equations system is singular; advise a positive ridge penalty.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A cached forward pass does not belong to the supplied parameters.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Metric is undefined for the given partition (e.g. a single cluster).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Input carries no usable variation (e.g. all rows identical).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite; carries the offending epoch.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& msg, std::size_t epoch)
      : Error(msg), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// An iterative routine produced a non-finite intermediate value.
class NumericalFailureError : public Error {
 public:
  NumericalFailureError(const std::string& msg, std::size_t iteration)
      : Error(msg), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace degen
