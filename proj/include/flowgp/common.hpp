#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace flowgp {

inline constexpr const char* kToolVersion = "0.1.0";

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between objects that must agree (vector lengths, matrix
// sides, subspace dimensionalities). CLI maps this to exit code 2.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration, schema, or input file.
// CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: factorization breakdown, non-PSD matrix beyond
// tolerance, non-finite intermediate. CLI maps this to exit code 1.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Posterior mean and per-point variance at a set of query points.
struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

}  // namespace flowgp
