#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gimt_cdm {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV, config).
class ParseError : public Error {
public:
  using Error::Error;
};

// Inconsistent sizes between data, Q-matrix, parameters or priors.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Optimizer hit a non-finite risk. Carries the last finite iterate.
class OptimizationError : public Error {
public:
  OptimizationError(const std::string& what, Eigen::VectorXd last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}
  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }

private:
  Eigen::VectorXd last_iterate_;
};

// Hessian of the risk is not positive definite at the estimate.
class DegenerateFitError : public Error {
public:
  using Error::Error;
};

// A matrix expected to be symmetric positive definite is not.
class MatrixError : public Error {
public:
  using Error::Error;
};

// Influence-function variance is non-positive or non-finite.
class VarianceError : public Error {
public:
  using Error::Error;
};

class PerturbationError : public Error {
public:
  using Error::Error;
};

class EvaluationError : public Error {
public:
  using Error::Error;
};

} // namespace gimt_cdm
