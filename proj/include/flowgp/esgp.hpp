#pragma once

#include <vector>

#include <Eigen/Core>

#include "flowgp/common.hpp"
#include "flowgp/egp.hpp"
#include "flowgp/kernels.hpp"

namespace flowgp {

// Inducing inputs for the structured sparse model: one entry per data
// subspace, either an explicit point set (rows) or a further Cartesian grid
// of one-dimensional axes inside the subspace.  Axis 0 varies slowest in
// the expanded ordering, matching the ProductInputs convention.
class InducingGrid {
 public:
  struct Subspace {
    Eigen::MatrixXd points;             // explicit rows; empty when axes set
    std::vector<Eigen::VectorXd> axes;  // strictly increasing per axis

    bool is_grid() const { return !axes.empty(); }
    int dims() const;
    Eigen::Index count() const;
    Eigen::MatrixXd expanded() const;
  };

  static Subspace from_points(Eigen::MatrixXd pts);
  static Subspace from_axes(std::vector<Eigen::VectorXd> axes);

  explicit InducingGrid(std::vector<Subspace> subs);

  const std::vector<Subspace>& subspaces() const { return subs_; }
  std::size_t count() const { return subs_.size(); }
  Eigen::Index total_points() const;

 private:
  std::vector<Subspace> subs_;
};

// Per-axis covariance factors of an inner-grid inducing subspace, with their
// Cholesky factors.  The subspace covariance is the Kronecker product of
// axis_k, its factor the Kronecker product of axis_chol.
struct FactoredKmm {
  std::vector<Eigen::MatrixXd> axis_k;
  std::vector<Eigen::MatrixXd> axis_chol;  // lower factors
  double max_jitter = 0.0;
};

FactoredKmm inner_grid_kmm(const InducingGrid::Subspace& sub,
                           const KernelSpec& subspec,
                           const Hyperparameters& h);

// Variational lower bound with every piece factored per subspace: the rank
// reduction runs through Q_mn = C^-1 K_mn one subspace at a time, the m x m
// eigendecomposition splits into per-subspace ones, and the trace
// regularizer is a difference of per-subspace products.  Never materializes
// an n x n or n x m matrix across subspaces.
double esgp_elbo(const ProductInputs& inputs, const StructuredObservations& obs,
                 const InducingGrid& grid, const KernelSpec& spec,
                 const Hyperparameters& h);

struct EsgpSub {
  Eigen::MatrixXd xu;                      // expanded inducing points
  std::vector<Eigen::MatrixXd> axis_chol;  // per-axis factors (grid form)
  Eigen::MatrixXd chol;                    // assembled lower factor of K^i_mm
  double jitter = 0.0;
  Eigen::MatrixXd w;  // eigenvectors of Q^i_mn Q^i_nm
  Eigen::VectorXd e;  // eigenvalues, clamped >= 0
};

// Prediction works in the whitened basis b_i = W_i^T C_i^-1 k^i_m*: each
// solve hits a vector in the range of its subspace gram, so inducing sets
// that make K_mm nearly singular (dense axes, long length scales) cannot
// amplify roundoff the way an explicit K_mm^-1 application does.  The mean
// is b . proj and the variance is kdiag - sum_j vcoef_j b_j^2.
struct EsgpFit {
  KernelSpec spec;
  std::vector<KernelSpec> subspecs;
  Hyperparameters hyp;
  std::vector<EsgpSub> subs;
  Eigen::VectorXd weight;  // m-length: k_x*m dot weight is the mean at x*,
                           // kept for the dense cross-check; predictions use
                           // the whitened pieces below instead
  Eigen::VectorXd dinv;    // 1 / (sigma^2 + joint eigenvalues)
  Eigen::VectorXd proj;    // dinv * W^T C^-1 K_mn y, the whitened mean map
  Eigen::VectorXd vcoef;   // joint eigenvalues * dinv, the variance weights
  double sigma2 = 0.0;
  double kdiag = 0.0;
  double elbo = 0.0;
  // Diagnostics: gap against the dense optimal posterior when validation is
  // requested, and whether the dense weights were swapped in.
  double dense_weight_gap = -1.0;
  bool dense_fallback = false;
};

struct EsgpOptions {
  // Cross-check the prediction weights against the dense optimal posterior
  // (requires expanding the product, so capped) and fall back to the dense
  // weights if they disagree beyond the tolerance.
  bool validate_dense = false;
  Eigen::Index dense_cap = 2000;
  double tolerance = 1e-6;
};

EsgpFit esgp_fit(const ProductInputs& inputs, const StructuredObservations& obs,
                 const InducingGrid& grid, const KernelSpec& spec,
                 const Hyperparameters& h, const EsgpOptions& opts = {});

// Posterior mean and variance at arbitrary query rows; variances floored at
// 1e-12.
Prediction esgp_predict(const EsgpFit& fit,
                        const Eigen::Ref<const Eigen::MatrixXd>& xstar);

// Same posterior on a query Cartesian product, fully structured.
Prediction esgp_predict_grid(const EsgpFit& fit, const ProductInputs& xstar);

}  // namespace flowgp
