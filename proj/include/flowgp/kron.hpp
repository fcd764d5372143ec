#pragma once

#include <vector>

#include <Eigen/Core>

#include "flowgp/common.hpp"

namespace flowgp {

// Kronecker-factored symmetric matrix.  Factor 0 indexes the slowest-varying
// coordinate of the joint (row-major style) ordering, the last factor the
// fastest.  Construction validates that every factor is square, finite and
// symmetric to 1e-10 relative to its largest entry.
class KronMatrix {
 public:
  explicit KronMatrix(std::vector<Eigen::MatrixXd> factors);

  const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }
  Eigen::Index total_side() const;

 private:
  std::vector<Eigen::MatrixXd> factors_;
};

// Per-factor spectral decomposition of a KronMatrix.  Joint eigenvectors are
// the Kronecker product of the per-factor ones; joint eigenvalues are all
// cross-factor products, in the same ordering convention as KronMatrix.
struct EigenFactorization {
  std::vector<Eigen::MatrixXd> vectors;
  std::vector<Eigen::VectorXd> values;  // ascending per factor, clamped >= 0

  Eigen::VectorXd joint_values() const;
  std::vector<Eigen::MatrixXd> transposed_vectors() const;
};

struct LowerTriangular {
  Eigen::MatrixXd L;
  double jitter = 0.0;  // multiple of the identity added before factorizing
};

// Escalation schedule for the diagonal jitter, expressed as fractions of the
// mean diagonal: first attempt none, then `initial`, then times `growth`
// until `maximum` is exceeded.
struct JitterPolicy {
  double initial = 1e-10;
  double maximum = 1e-4;
  double growth = 10.0;
};

// y = (A_1 kron ... kron A_s) v without materializing the product.  Factors
// may be rectangular; v has length prod(cols), the result length prod(rows).
Eigen::VectorXd kron_matvec(const std::vector<Eigen::MatrixXd>& factors,
                            const Eigen::Ref<const Eigen::VectorXd>& v);

// x solving (L_1 kron ... kron L_s) x = v with every factor lower
// triangular, and the transposed-system variant.  Same ordering as above.
Eigen::VectorXd kron_solve_lower(const std::vector<Eigen::MatrixXd>& factors,
                                 const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd kron_solve_lower_transposed(
    const std::vector<Eigen::MatrixXd>& factors,
    const Eigen::Ref<const Eigen::VectorXd>& v);

// Symmetric eigendecomposition factor by factor.  Eigenvalues below
// -1e-10 * max(joint eigenvalue magnitude within the factor) raise
// NumericError; small negatives inside that tolerance are clamped to zero.
EigenFactorization kron_eigendecompose(const KronMatrix& k);

// Dense Cholesky with escalating diagonal jitter.  Throws NumericError once
// the policy maximum is exhausted, reporting the final jitter attempted.
LowerTriangular cholesky_with_jitter(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                     const JitterPolicy& policy = {});

// trace(A_1 kron ... kron A_s) = prod trace(A_i).
double kron_trace(const std::vector<Eigen::MatrixXd>& factors);

// Kronecker product of plain vectors (part 0 slowest-varying).
Eigen::VectorXd kron_vector(const std::vector<Eigen::VectorXd>& parts);

// Materialized Kronecker product; intended for small sides only.
Eigen::MatrixXd kron_dense(const std::vector<Eigen::MatrixXd>& factors);

}  // namespace flowgp
