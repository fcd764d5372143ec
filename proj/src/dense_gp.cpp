#include "flowgp/dense_gp.hpp"

#include <cmath>
#include <string>

#include "flowgp/kron.hpp"

namespace flowgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void validate(const DenseGpProblem& p, Eigen::Index cap, const char* op) {
  if (p.x.rows() < 1) {
    throw ShapeError(std::string(op) + ": empty training set");
  }
  if (p.y.size() != p.x.rows()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(p.x.rows()) +
                     " points but " + std::to_string(p.y.size()) +
                     " observations");
  }
  if (!p.y.allFinite()) {
    throw NumericError(std::string(op) + ": non-finite observation");
  }
  if (p.x.rows() > cap) {
    throw ConfigError(std::string(op) + ": n = " + std::to_string(p.x.rows()) +
                      " exceeds the dense cap " + std::to_string(cap));
  }
}

}  // namespace

double log_marginal(const DenseGpProblem& p, Eigen::Index cap) {
  validate(p, cap, "log_marginal");
  const Eigen::Index n = p.x.rows();
  Eigen::MatrixXd a = eval_symmetric(p.spec, p.hyp, p.x);
  a.diagonal().array() += p.hyp.noise_variance();
  const LowerTriangular chol = cholesky_with_jitter(a);
  const Eigen::VectorXd z =
      chol.L.triangularView<Eigen::Lower>().solve(p.y);
  const double quad = z.squaredNorm();
  const double logdet = 2.0 * chol.L.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(n) * kLog2Pi + quad + logdet);
}

double log_marginal_eig(const DenseGpProblem& p, Eigen::Index cap) {
  validate(p, cap, "log_marginal_eig");
  const Eigen::Index n = p.x.rows();
  const Eigen::MatrixXd k = eval_symmetric(p.spec, p.hyp, p.x);
  const EigenFactorization ef = kron_eigendecompose(KronMatrix({k}));
  const Eigen::VectorXd t = ef.vectors[0].transpose() * p.y;
  const double s2 = p.hyp.noise_variance();
  const Eigen::ArrayXd shifted = ef.values[0].array() + s2;
  const double quad = (t.array().square() / shifted).sum();
  const double logdet = shifted.log().sum();
  return -0.5 * (static_cast<double>(n) * kLog2Pi + quad + logdet);
}

DensePrediction predict_dense(const DenseGpProblem& p,
                              const Eigen::Ref<const Eigen::MatrixXd>& xstar,
                              Eigen::Index cap) {
  validate(p, cap, "predict_dense");
  if (xstar.cols() != p.x.cols()) {
    throw ShapeError("predict_dense: queries have " +
                     std::to_string(xstar.cols()) + " columns, training has " +
                     std::to_string(p.x.cols()));
  }
  Eigen::MatrixXd a = eval_symmetric(p.spec, p.hyp, p.x);
  a.diagonal().array() += p.hyp.noise_variance();
  const LowerTriangular chol = cholesky_with_jitter(a);
  const auto lower = chol.L.triangularView<Eigen::Lower>();

  const Eigen::MatrixXd ksn = eval_cross(p.spec, p.hyp, xstar, p.x);
  const Eigen::VectorXd alpha =
      lower.transpose().solve(Eigen::VectorXd(lower.solve(p.y)));

  DensePrediction out;
  out.mean = ksn * alpha;
  const Eigen::MatrixXd v = lower.solve(Eigen::MatrixXd(ksn.transpose()));
  Eigen::MatrixXd cov =
      eval_symmetric(p.spec, p.hyp, xstar) - v.transpose() * v;
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

}  // namespace flowgp
