#include "flowgp/sparse_gp.hpp"

#include <cmath>
#include <string>

#include "flowgp/kron.hpp"

namespace flowgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Parts {
  Eigen::MatrixXd kmm;
  LowerTriangular cmm;  // Cholesky of (possibly jittered) K_mm
  Eigen::MatrixXd kmn;  // m x n
  Eigen::MatrixXd r;    // Q_mn = C^-1 K_mn
};

Parts build(const DenseGpProblem& p, const InducingSet& u, const char* op) {
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
  if (u.points().cols() != p.x.cols()) {
    throw ShapeError(std::string(op) + ": inducing points have " +
                     std::to_string(u.points().cols()) +
                     " columns, training has " + std::to_string(p.x.cols()));
  }
  Parts parts;
  parts.kmm = eval_symmetric(p.spec, p.hyp, u.points());
  parts.cmm = cholesky_with_jitter(parts.kmm);
  parts.kmn = eval_cross(p.spec, p.hyp, u.points(), p.x);
  parts.r = parts.cmm.L.triangularView<Eigen::Lower>().solve(parts.kmn);
  return parts;
}

}  // namespace

InducingSet::InducingSet(Eigen::MatrixXd points, Eigen::Index cap)
    : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw ShapeError("InducingSet: need at least one point and one column");
  }
  if (points_.rows() > cap) {
    throw ConfigError("InducingSet: m = " + std::to_string(points_.rows()) +
                      " exceeds the cap " + std::to_string(cap));
  }
  if (!points_.allFinite()) {
    throw NumericError("InducingSet: non-finite coordinates");
  }
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points_.rows(); ++j) {
      if ((points_.row(i) - points_.row(j)).norm() == 0.0) {
        throw ConfigError("InducingSet: rows " + std::to_string(i) + " and " +
                          std::to_string(j) + " coincide");
      }
    }
  }
}

double elbo_direct(const DenseGpProblem& p, const InducingSet& u) {
  const Parts parts = build(p, u, "elbo_direct");
  const Eigen::Index n = p.x.rows();
  const double s2 = p.hyp.noise_variance();

  Eigen::MatrixXd a = parts.r.transpose() * parts.r;  // Nystrom approximation
  a = 0.5 * (a + a.transpose());
  a.diagonal().array() += s2;
  const LowerTriangular chol = cholesky_with_jitter(a);
  const Eigen::VectorXd z = chol.L.triangularView<Eigen::Lower>().solve(p.y);
  const double quad = z.squaredNorm();
  const double logdet = 2.0 * chol.L.diagonal().array().log().sum();

  const double trk = static_cast<double>(n) * diagonal_value(p.spec, p.hyp);
  const double trq = parts.r.squaredNorm();
  return -0.5 * (static_cast<double>(n) * kLog2Pi + quad + logdet) -
         0.5 * (trk - trq) / s2;
}

double elbo_woodbury(const DenseGpProblem& p, const InducingSet& u) {
  const Parts parts = build(p, u, "elbo_woodbury");
  const Eigen::Index n = p.x.rows();
  const Eigen::Index m = u.count();
  const double s2 = p.hyp.noise_variance();

  Eigen::MatrixXd g = parts.r * parts.r.transpose();
  g = 0.5 * (g + g.transpose());
  const EigenFactorization ef = kron_eigendecompose(KronMatrix({g}));
  const Eigen::VectorXd z = ef.vectors[0].transpose() * (parts.r * p.y);
  const Eigen::ArrayXd shifted = ef.values[0].array() + s2;

  const double quad =
      (p.y.squaredNorm() - (z.array().square() / shifted).sum()) / s2;
  const double logdet =
      static_cast<double>(n - m) * std::log(s2) + shifted.log().sum();

  const double trk = static_cast<double>(n) * diagonal_value(p.spec, p.hyp);
  const double trq = parts.r.squaredNorm();
  return -0.5 * (static_cast<double>(n) * kLog2Pi + quad + logdet) -
         0.5 * (trk - trq) / s2;
}

VariationalPosterior optimal_q_direct(const DenseGpProblem& p,
                                      const InducingSet& u) {
  const Parts parts = build(p, u, "optimal_q_direct");
  const double s2 = p.hyp.noise_variance();

  Eigen::MatrixXd b = parts.kmm + parts.kmn * parts.kmn.transpose() / s2;
  b = 0.5 * (b + b.transpose());
  const LowerTriangular cb = cholesky_with_jitter(b);
  const auto lower = cb.L.triangularView<Eigen::Lower>();

  VariationalPosterior q;
  const Eigen::MatrixXd binv_kmm =
      lower.transpose().solve(Eigen::MatrixXd(lower.solve(parts.kmm)));
  Eigen::MatrixXd s = parts.kmm * binv_kmm;
  q.s = 0.5 * (s + s.transpose());
  const Eigen::VectorXd kmny = parts.kmn * p.y;
  q.mu = parts.kmm *
         lower.transpose().solve(Eigen::VectorXd(lower.solve(kmny))) / s2;
  return q;
}

VariationalPosterior optimal_q_woodbury(const DenseGpProblem& p,
                                        const InducingSet& u) {
  const Parts parts = build(p, u, "optimal_q_woodbury");
  const double s2 = p.hyp.noise_variance();

  Eigen::MatrixXd g = parts.r * parts.r.transpose();
  g = 0.5 * (g + g.transpose());
  const EigenFactorization ef = kron_eigendecompose(KronMatrix({g}));
  const Eigen::MatrixXd& w = ef.vectors[0];
  const Eigen::VectorXd d = (ef.values[0].array() + s2).inverse();

  const Eigen::MatrixXd m = parts.kmn * parts.r.transpose();  // K_mn Q_nm
  const Eigen::MatrixXd core = w * d.asDiagonal() * w.transpose();

  VariationalPosterior q;
  Eigen::MatrixXd s = parts.kmm -
                      parts.kmn * parts.kmn.transpose() / s2 +
                      m * core * m.transpose() / s2;
  q.s = 0.5 * (s + s.transpose());

  const Eigen::VectorXd ry = parts.r * p.y;
  q.mu = (parts.kmn * p.y - m * ry / s2 + m * (core * (g * ry)) / s2) / s2;
  return q;
}

Prediction predict_sgp_dense(const InducingSet& u,
                             const VariationalPosterior& q,
                             const KernelSpec& spec, const Hyperparameters& h,
                             const Eigen::Ref<const Eigen::MatrixXd>& xstar) {
  const Eigen::Index m = u.count();
  if (q.mu.size() != m || q.s.rows() != m || q.s.cols() != m) {
    throw ShapeError("predict_sgp_dense: posterior sized " +
                     std::to_string(q.mu.size()) + "/" +
                     std::to_string(q.s.rows()) + "x" +
                     std::to_string(q.s.cols()) + " for " + std::to_string(m) +
                     " inducing points");
  }
  if (!q.mu.allFinite() || !q.s.allFinite()) {
    throw NumericError("predict_sgp_dense: non-finite posterior");
  }
  if (xstar.cols() != u.points().cols()) {
    throw ShapeError("predict_sgp_dense: queries have " +
                     std::to_string(xstar.cols()) +
                     " columns, inducing points have " +
                     std::to_string(u.points().cols()));
  }
  const double scale = q.s.cwiseAbs().maxCoeff();
  if ((q.s - q.s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ShapeError("predict_sgp_dense: posterior covariance is asymmetric");
  }

  const Eigen::MatrixXd kmm = eval_symmetric(spec, h, u.points());
  const LowerTriangular cm = cholesky_with_jitter(kmm);
  const auto lower = cm.L.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd ksm = eval_cross(spec, h, xstar, u.points());
  // a = K_mm^-1 K_m*, one column per query
  const Eigen::MatrixXd a =
      lower.transpose().solve(Eigen::MatrixXd(lower.solve(ksm.transpose())));

  Prediction out;
  out.mean = a.transpose() * q.mu;
  const Eigen::MatrixXd sa = q.s * a;
  const double kdiag = diagonal_value(spec, h);
  const Eigen::ArrayXd qterm =
      (ksm.transpose().array() * a.array()).colwise().sum().transpose();
  const Eigen::ArrayXd sterm =
      (a.array() * sa.array()).colwise().sum().transpose();
  out.variance = (kdiag - qterm + sterm).matrix();
  return out;
}

}  // namespace flowgp
