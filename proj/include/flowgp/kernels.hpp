#pragma once

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgp/common.hpp"

namespace flowgp {

enum class LeafKind { kSquaredExponential, kPeriodic };

// One multiplicative factor of the kernel, acting on a single input column.
// `col` is the column index within the points the spec is evaluated on
// (local after splitting); `slot` is the first hyperparameter slot the leaf
// reads.  Squared-exponential leaves use one slot (log length-scale),
// periodic leaves two (log warp width, then log period).
struct KernelLeaf {
  LeafKind kind;
  int col;
  int slot;
};

// Product kernel over a fixed number of input columns.  Hyperparameters
// live in one shared log-space vector for the whole model:
//   slot 0               log signal amplitude sigma_f
//   slots 1..            leaf slots, in declaration order
//   last slot            log noise standard deviation sigma
// Sub-specs produced by split() keep the global slot numbering so a single
// vector drives every subspace; the amplitude is applied by exactly one
// sub-spec (the first) so the product of subspace kernels reproduces the
// full kernel.
class KernelSpec {
 public:
  static KernelSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  int dims() const { return dims_; }
  int slots() const { return total_slots_; }
  bool owns_amplitude() const { return owns_amplitude_; }
  const std::vector<KernelLeaf>& leaves() const { return leaves_; }

  // Partition the input columns into consecutive groups of the given sizes
  // and return one spec per group.  Every leaf acts on a single column, so
  // any consecutive grouping factorizes exactly.
  std::vector<KernelSpec> split(const std::vector<int>& group_dims) const;

 private:
  KernelSpec() = default;

  std::vector<KernelLeaf> leaves_;
  int dims_ = 0;
  int total_slots_ = 0;
  bool owns_amplitude_ = true;
};

// Log-space hyperparameter vector.  Construction rejects non-finite entries;
// the noise variance is floored at 1e-12 after exponentiation so downstream
// code can divide by it.
class Hyperparameters {
 public:
  explicit Hyperparameters(Eigen::VectorXd log_values);

  static Hyperparameters unit(const KernelSpec& spec);  // all parameters 1.0

  const Eigen::VectorXd& log_values() const { return log_; }
  Eigen::Index size() const { return log_.size(); }

  double signal_variance() const;  // sigma_f^2, slot 0
  double noise_variance() const;   // sigma^2, last slot, floored at 1e-12

 private:
  Eigen::VectorXd log_;
};

Eigen::VectorXd pack(const Hyperparameters& h);
Hyperparameters unpack(const Eigen::Ref<const Eigen::VectorXd>& v,
                       const KernelSpec& spec);

// Cross-covariance between the rows of x (a x d) and xp (b x d).
Eigen::MatrixXd eval_cross(const KernelSpec& spec, const Hyperparameters& h,
                           const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Eigen::Ref<const Eigen::MatrixXd>& xp);

// Symmetric covariance of the rows of x.  The evaluation is exactly
// symmetric in floating point and the diagonal equals the zero-distance
// value below.
Eigen::MatrixXd eval_symmetric(const KernelSpec& spec, const Hyperparameters& h,
                               const Eigen::Ref<const Eigen::MatrixXd>& x);

// k(x, x): sigma_f^2 if the spec applies the amplitude, otherwise 1.
double diagonal_value(const KernelSpec& spec, const Hyperparameters& h);

}  // namespace flowgp
