#pragma once

#include <Eigen/Core>

#include "flowgp/common.hpp"
#include "flowgp/kernels.hpp"

namespace flowgp {

// A regression problem in materialized form: points as rows, one observation
// per point.  Used directly for small problems and as the exactness oracle
// for the structured solvers.
struct DenseGpProblem {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;  // n
  KernelSpec spec;
  Hyperparameters hyp;
};

inline constexpr Eigen::Index kDenseCap = 4096;

// Gaussian log marginal likelihood through a jittered Cholesky of
// K + sigma^2 I.  Throws ConfigError when n exceeds `cap` (the dense path is
// deliberately capped; use the structured solvers beyond it).
double log_marginal(const DenseGpProblem& p, Eigen::Index cap = kDenseCap);

// Same quantity through a full symmetric eigendecomposition; slower, kept as
// an independent cross-check of the Cholesky path.
double log_marginal_eig(const DenseGpProblem& p, Eigen::Index cap = kDenseCap);

struct DensePrediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Exact posterior mean and covariance at the query rows.
DensePrediction predict_dense(const DenseGpProblem& p,
                              const Eigen::Ref<const Eigen::MatrixXd>& xstar,
                              Eigen::Index cap = kDenseCap);

}  // namespace flowgp
