#include "flowgp/egp.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "flowgp/kron.hpp"

namespace flowgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kVarianceFloor = 1e-12;

struct EigCore {
  std::vector<KernelSpec> subspecs;
  std::vector<Eigen::MatrixXd> vecs;
  Eigen::VectorXd joint_values;
};

EigCore build_core(const ProductInputs& inputs, const KernelSpec& spec,
                   const Hyperparameters& h, const char* op) {
  if (spec.dims() != inputs.total_dims()) {
    throw ShapeError(std::string(op) + ": spec covers " +
                     std::to_string(spec.dims()) + " columns, inputs have " +
                     std::to_string(inputs.total_dims()));
  }
  EigCore core;
  core.subspecs = spec.split(inputs.subspace_dims());
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(inputs.count());
  for (std::size_t i = 0; i < inputs.count(); ++i) {
    factors.push_back(
        eval_symmetric(core.subspecs[i], h, inputs.subspaces()[i]));
  }
  const EigenFactorization ef = kron_eigendecompose(KronMatrix(factors));
  core.vecs = ef.vectors;
  core.joint_values = ef.joint_values();
  return core;
}

double log_marginal_from(const Eigen::VectorXd& t,
                         const Eigen::VectorXd& joint_values, double s2) {
  const Eigen::ArrayXd shifted = joint_values.array() + s2;
  const double quad = (t.array().square() / shifted).sum();
  const double logdet = shifted.log().sum();
  return -0.5 * (static_cast<double>(t.size()) * kLog2Pi + quad + logdet);
}

}  // namespace

ProductInputs::ProductInputs(std::vector<Eigen::MatrixXd> subspaces)
    : subspaces_(std::move(subspaces)) {
  if (subspaces_.empty()) {
    throw ShapeError("ProductInputs: no subspaces");
  }
  for (std::size_t i = 0; i < subspaces_.size(); ++i) {
    if (subspaces_[i].rows() < 1 || subspaces_[i].cols() < 1) {
      throw ShapeError("ProductInputs: subspace " + std::to_string(i) +
                       " is empty");
    }
    if (!subspaces_[i].allFinite()) {
      throw NumericError("ProductInputs: subspace " + std::to_string(i) +
                         " has non-finite coordinates");
    }
  }
}

Eigen::Index ProductInputs::total_points() const {
  Eigen::Index n = 1;
  for (const auto& s : subspaces_) n *= s.rows();
  return n;
}

int ProductInputs::total_dims() const {
  int d = 0;
  for (const auto& s : subspaces_) d += static_cast<int>(s.cols());
  return d;
}

std::vector<int> ProductInputs::subspace_dims() const {
  std::vector<int> dims;
  dims.reserve(subspaces_.size());
  for (const auto& s : subspaces_) dims.push_back(static_cast<int>(s.cols()));
  return dims;
}

std::vector<Eigen::Index> ProductInputs::strides() const {
  std::vector<Eigen::Index> out(subspaces_.size());
  Eigen::Index acc = 1;
  for (std::size_t i = subspaces_.size(); i-- > 0;) {
    out[i] = acc;
    acc *= subspaces_[i].rows();
  }
  return out;
}

Eigen::MatrixXd ProductInputs::expand() const {
  const Eigen::Index n = total_points();
  Eigen::MatrixXd out(n, total_dims());
  const std::vector<Eigen::Index> stride = strides();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index rem = k;
    Eigen::Index coff = 0;
    for (std::size_t i = 0; i < subspaces_.size(); ++i) {
      const Eigen::Index ii = rem / stride[i];
      rem %= stride[i];
      out.block(k, coff, 1, subspaces_[i].cols()) = subspaces_[i].row(ii);
      coff += subspaces_[i].cols();
    }
  }
  return out;
}

StructuredObservations::StructuredObservations(Eigen::VectorXd values,
                                               const ProductInputs& inputs)
    : y(std::move(values)) {
  if (y.size() != inputs.total_points()) {
    throw ShapeError("StructuredObservations: " + std::to_string(y.size()) +
                     " values for " + std::to_string(inputs.total_points()) +
                     " composite points");
  }
  if (!y.allFinite()) {
    throw NumericError("StructuredObservations: non-finite observation");
  }
}

double egp_log_marginal(const ProductInputs& inputs,
                        const StructuredObservations& obs,
                        const KernelSpec& spec, const Hyperparameters& h) {
  const EigCore core = build_core(inputs, spec, h, "egp_log_marginal");
  std::vector<Eigen::MatrixXd> vt;
  vt.reserve(core.vecs.size());
  for (const auto& v : core.vecs) vt.push_back(v.transpose());
  const Eigen::VectorXd t = kron_matvec(vt, obs.y);
  return log_marginal_from(t, core.joint_values, h.noise_variance());
}

EgpFit egp_fit(const ProductInputs& inputs, const StructuredObservations& obs,
               const KernelSpec& spec, const Hyperparameters& h) {
  EigCore core = build_core(inputs, spec, h, "egp_fit");
  const double s2 = h.noise_variance();

  std::vector<Eigen::MatrixXd> vt;
  vt.reserve(core.vecs.size());
  for (const auto& v : core.vecs) vt.push_back(v.transpose());
  const Eigen::VectorXd t = kron_matvec(vt, obs.y);
  const double ll = log_marginal_from(t, core.joint_values, s2);

  Eigen::VectorXd scaled = t;
  scaled.array() /= core.joint_values.array() + s2;
  Eigen::VectorXd alpha = kron_matvec(core.vecs, scaled);

  return EgpFit{inputs,
                spec,
                std::move(core.subspecs),
                h,
                std::move(core.vecs),
                std::move(core.joint_values),
                std::move(alpha),
                s2,
                diagonal_value(spec, h),
                ll};
}

Prediction egp_predict(const EgpFit& fit,
                       const Eigen::Ref<const Eigen::MatrixXd>& xstar) {
  if (xstar.cols() != fit.inputs.total_dims()) {
    throw ShapeError("egp_predict: queries have " +
                     std::to_string(xstar.cols()) + " columns, model has " +
                     std::to_string(fit.inputs.total_dims()));
  }
  const Eigen::Index t = xstar.rows();
  const std::size_t s = fit.inputs.count();
  const Eigen::ArrayXd denom = fit.joint_values.array() + fit.sigma2;

  Prediction out;
  out.mean.resize(t);
  out.variance.resize(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    std::vector<Eigen::MatrixXd> krows;
    std::vector<Eigen::VectorXd> uparts;
    krows.reserve(s);
    uparts.reserve(s);
    Eigen::Index coff = 0;
    for (std::size_t i = 0; i < s; ++i) {
      const Eigen::Index di = fit.inputs.subspaces()[i].cols();
      const Eigen::MatrixXd point = xstar.block(j, coff, 1, di);
      coff += di;
      Eigen::MatrixXd krow = eval_cross(fit.subspecs[i], fit.hyp, point,
                                        fit.inputs.subspaces()[i]);
      uparts.push_back((krow * fit.vecs[i]).transpose());
      krows.push_back(std::move(krow));
    }
    out.mean(j) = kron_matvec(krows, fit.alpha)(0);
    const Eigen::VectorXd u = kron_vector(uparts);
    const double var = fit.kdiag - (u.array().square() / denom).sum();
    out.variance(j) = std::max(var, kVarianceFloor);
  }
  return out;
}

Prediction egp_predict_grid(const EgpFit& fit, const ProductInputs& xstar) {
  if (xstar.count() != fit.inputs.count()) {
    throw ShapeError("egp_predict_grid: query product has " +
                     std::to_string(xstar.count()) + " subspaces, model has " +
                     std::to_string(fit.inputs.count()));
  }
  std::vector<Eigen::MatrixXd> kcross;
  std::vector<Eigen::MatrixXd> msq;
  kcross.reserve(fit.inputs.count());
  msq.reserve(fit.inputs.count());
  for (std::size_t i = 0; i < fit.inputs.count(); ++i) {
    if (xstar.subspaces()[i].cols() != fit.inputs.subspaces()[i].cols()) {
      throw ShapeError("egp_predict_grid: subspace " + std::to_string(i) +
                       " has mismatched dimension");
    }
    Eigen::MatrixXd k = eval_cross(fit.subspecs[i], fit.hyp,
                                   xstar.subspaces()[i],
                                   fit.inputs.subspaces()[i]);
    const Eigen::MatrixXd u = k * fit.vecs[i];
    msq.push_back(u.cwiseProduct(u));
    kcross.push_back(std::move(k));
  }
  Prediction out;
  out.mean = kron_matvec(kcross, fit.alpha);
  const Eigen::VectorXd dinv =
      (fit.joint_values.array() + fit.sigma2).inverse().matrix();
  out.variance = (fit.kdiag - kron_matvec(msq, dinv).array())
                     .cwiseMax(kVarianceFloor)
                     .matrix();
  return out;
}

}  // namespace flowgp
