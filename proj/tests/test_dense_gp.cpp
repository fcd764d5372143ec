#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "flowgp/dense_gp.hpp"
#include "helpers.hpp"

using namespace flowgp;
using testutil::random_hyp;
using testutil::random_points;
using testutil::random_vector;
using testutil::se_spec;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Reference likelihood straight from the density, using a full LU solve and
// an eigenvalue log determinant; shares no code with the library paths.
double reference_log_marginal(const DenseGpProblem& p) {
  const Eigen::MatrixXd ky =
      eval_symmetric(p.spec, p.hyp, p.x) +
      p.hyp.noise_variance() *
          Eigen::MatrixXd::Identity(p.x.rows(), p.x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ky);
  const double logdet = es.eigenvalues().array().log().sum();
  const double quad = p.y.dot(ky.fullPivLu().solve(p.y));
  return -0.5 * quad - 0.5 * logdet -
         0.5 * static_cast<double>(p.x.rows()) * kLog2Pi;
}

DenseGpProblem random_problem(Rng& rng, Eigen::Index n, int d) {
  KernelSpec spec = se_spec(d);
  Hyperparameters h = random_hyp(rng, spec);
  return DenseGpProblem{random_points(rng, n, d), random_vector(rng, n), spec,
                        h};
}

}  // namespace

TEST_CASE("dense gp: two point log marginal, frozen value") {
  KernelSpec spec = se_spec(1);
  Eigen::VectorXd lv(3);
  lv << 0.0, std::log(0.5), std::log(0.3);
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 0.6;
  Eigen::VectorXd y(2);
  y << 0.2, -0.4;
  DenseGpProblem p{x, y, spec, Hyperparameters(lv)};
  CHECK(log_marginal(p) ==
        doctest::Approx(-1.9683815936859754).epsilon(1e-12));
}

TEST_CASE("dense gp: cholesky path matches the reference density") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    DenseGpProblem p =
        random_problem(rng, 2 + rng.uniform_index(30),
                       1 + static_cast<int>(rng.uniform_index(3)));
    const double want = reference_log_marginal(p);
    CHECK(log_marginal(p) ==
          doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("dense gp: eigendecomposition path agrees with cholesky") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    DenseGpProblem p = random_problem(rng, 2 + rng.uniform_index(40), 2);
    CHECK(log_marginal_eig(p) ==
          doctest::Approx(log_marginal(p)).epsilon(1e-9));
  }
}

TEST_CASE("dense gp: prediction matches the closed form") {
  Rng rng(33);
  for (int trial = 0; trial < 15; ++trial) {
    DenseGpProblem p = random_problem(rng, 12, 2);
    const Eigen::MatrixXd xs = random_points(rng, 5, 2);

    const Eigen::MatrixXd ky =
        eval_symmetric(p.spec, p.hyp, p.x) +
        p.hyp.noise_variance() * Eigen::MatrixXd::Identity(12, 12);
    const Eigen::MatrixXd ks = eval_cross(p.spec, p.hyp, xs, p.x);
    const Eigen::MatrixXd kss = eval_symmetric(p.spec, p.hyp, xs);
    const Eigen::MatrixXd kyi = ky.fullPivLu().inverse();
    const Eigen::VectorXd want_mean = ks * kyi * p.y;
    const Eigen::MatrixXd want_cov = kss - ks * kyi * ks.transpose();

    DensePrediction got = predict_dense(p, xs);
    CHECK((got.mean - want_mean).norm() <= 1e-9 * (1.0 + want_mean.norm()));
    CHECK((got.cov - want_cov).norm() <= 1e-8 * (1.0 + want_cov.norm()));
  }
}

TEST_CASE("dense gp: the size cap is enforced") {
  Rng rng(34);
  DenseGpProblem p = random_problem(rng, 20, 1);
  CHECK_THROWS_AS(log_marginal(p, 10), ConfigError);
  CHECK_THROWS_AS(predict_dense(p, p.x, 10), ConfigError);
}

TEST_CASE("dense gp: shape mismatches are rejected") {
  Rng rng(35);
  DenseGpProblem p = random_problem(rng, 8, 2);
  p.y = random_vector(rng, 7);
  CHECK_THROWS_AS(log_marginal(p), ShapeError);
}
