#pragma once

#include <vector>

#include <Eigen/Core>

#include "flowgp/common.hpp"
#include "flowgp/kernels.hpp"

namespace flowgp {

// Training inputs on a Cartesian product of subspaces.  Subspace i holds
// n_i points of dimension d_i as rows; the joint input set is every
// cross-subspace combination, ordered with subspace 0 slowest-varying and
// the last subspace fastest.
class ProductInputs {
 public:
  explicit ProductInputs(std::vector<Eigen::MatrixXd> subspaces);

  const std::vector<Eigen::MatrixXd>& subspaces() const { return subspaces_; }
  std::size_t count() const { return subspaces_.size(); }
  Eigen::Index total_points() const;
  int total_dims() const;
  std::vector<int> subspace_dims() const;
  // stride_i = product of the point counts of the subspaces after i;
  // composite index k = sum_i index_i * stride_i.
  std::vector<Eigen::Index> strides() const;
  // Materialize every combination in canonical order.  Small problems only;
  // the structured solvers never call this.
  Eigen::MatrixXd expand() const;

 private:
  std::vector<Eigen::MatrixXd> subspaces_;
};

// Observations in the canonical composite ordering of a ProductInputs.
struct StructuredObservations {
  Eigen::VectorXd y;
  StructuredObservations(Eigen::VectorXd values, const ProductInputs& inputs);
};

// Exact log marginal likelihood on the product structure, through
// per-subspace eigendecompositions of the kernel factors.
double egp_log_marginal(const ProductInputs& inputs,
                        const StructuredObservations& obs,
                        const KernelSpec& spec, const Hyperparameters& h);

// Cached exact posterior for repeated prediction at fixed hyperparameters.
struct EgpFit {
  ProductInputs inputs;
  KernelSpec spec;
  std::vector<KernelSpec> subspecs;
  Hyperparameters hyp;
  std::vector<Eigen::MatrixXd> vecs;  // per-subspace kernel eigenvectors
  Eigen::VectorXd joint_values;       // joint prior eigenvalues, length N
  Eigen::VectorXd alpha;              // (K + sigma^2 I)^-1 y
  double sigma2 = 0.0;
  double kdiag = 0.0;
  double log_marginal = 0.0;
};

EgpFit egp_fit(const ProductInputs& inputs, const StructuredObservations& obs,
               const KernelSpec& spec, const Hyperparameters& h);

// Posterior mean and variance at arbitrary query rows (columns ordered as
// the concatenated subspace coordinates).  Variances are floored at 1e-12.
Prediction egp_predict(const EgpFit& fit,
                       const Eigen::Ref<const Eigen::MatrixXd>& xstar);

// Same posterior evaluated on a query Cartesian product, using structured
// products throughout; output in the canonical ordering of xstar.
Prediction egp_predict_grid(const EgpFit& fit, const ProductInputs& xstar);

}  // namespace flowgp
