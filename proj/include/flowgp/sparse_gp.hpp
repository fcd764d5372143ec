#pragma once

#include <Eigen/Core>

#include "flowgp/common.hpp"
#include "flowgp/dense_gp.hpp"
#include "flowgp/kernels.hpp"

namespace flowgp {

// Inducing point set for the variational sparse model, materialized as rows.
// Rows must be pairwise distinct.
class InducingSet {
 public:
  explicit InducingSet(Eigen::MatrixXd points, Eigen::Index cap = kDenseCap);

  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::Index count() const { return points_.rows(); }

 private:
  Eigen::MatrixXd points_;
};

// Gaussian variational posterior over the inducing values.
struct VariationalPosterior {
  Eigen::VectorXd mu;
  Eigen::MatrixXd s;  // m x m covariance
};

// Variational lower bound on the log marginal likelihood, evaluated by
// materializing the n x n Nystrom matrix.  Reference path, O(n^3).
double elbo_direct(const DenseGpProblem& p, const InducingSet& u);

// The same bound through the Woodbury identity and the eigendecomposition of
// the m x m matrix Q_mn Q_nm, costing O(n m^2).  Here Q_mn = C^-1 K_mn with
// C the (jittered) Cholesky factor of K_mm, applied by triangular solve.
double elbo_woodbury(const DenseGpProblem& p, const InducingSet& u);

// Optimal variational parameters:
//   S  = K_mm (K_mm + sigma^-2 K_mn K_nm)^-1 K_mm
//   mu = sigma^-2 S K_mm^-1 K_mn y
// solved directly through a Cholesky of the inner m x m matrix.
VariationalPosterior optimal_q_direct(const DenseGpProblem& p,
                                      const InducingSet& u);

// The same parameters rewritten through the eigendecomposition of
// Q_mn Q_nm, avoiding the inner solve.  Must agree with the direct form.
VariationalPosterior optimal_q_woodbury(const DenseGpProblem& p,
                                        const InducingSet& u);

// Posterior mean and variance at query rows for a given posterior:
//   mean = K_*m K_mm^-1 mu
//   var  = k(x*,x*) - K_*m K_mm^-1 K_m* + K_*m K_mm^-1 S K_mm^-1 K_m*
Prediction predict_sgp_dense(const InducingSet& u,
                             const VariationalPosterior& q,
                             const KernelSpec& spec, const Hyperparameters& h,
                             const Eigen::Ref<const Eigen::MatrixXd>& xstar);

}  // namespace flowgp
