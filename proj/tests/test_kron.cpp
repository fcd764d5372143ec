#include <doctest.h>

#include <vector>

#include <Eigen/Dense>

#include "flowgp/kron.hpp"
#include "flowgp/rng.hpp"
#include "helpers.hpp"

using namespace flowgp;
using testutil::random_points;
using testutil::random_vector;

namespace {

// Independent reference: fold the product two factors at a time with the
// textbook index formula.
Eigen::MatrixXd naive_kron(const std::vector<Eigen::MatrixXd>& factors) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& f : factors) {
    Eigen::MatrixXd next(acc.rows() * f.rows(), acc.cols() * f.cols());
    for (Eigen::Index i = 0; i < acc.rows(); ++i)
      for (Eigen::Index j = 0; j < acc.cols(); ++j)
        next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) =
            acc(i, j) * f;
    acc = std::move(next);
  }
  return acc;
}

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd a = random_points(rng, n, n, -1.0, 1.0);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_lower(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd l = random_points(rng, n, n, -1.0, 1.0)
                          .triangularView<Eigen::Lower>();
  for (Eigen::Index i = 0; i < n; ++i) l(i, i) = rng.uniform(0.5, 2.0);
  return l;
}

}  // namespace

TEST_CASE("kron: dense materialization matches the index formula") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::MatrixXd> factors;
    const int parts = 1 + static_cast<int>(rng.uniform_index(3));
    for (int p = 0; p < parts; ++p)
      factors.push_back(random_points(rng, 1 + rng.uniform_index(4),
                                      1 + rng.uniform_index(4)));
    CHECK((kron_dense(factors) - naive_kron(factors)).norm() == 0.0);
  }
}

TEST_CASE("kron: matvec agrees with the materialized product") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Eigen::MatrixXd> factors;
    const int parts = 1 + static_cast<int>(rng.uniform_index(3));
    for (int p = 0; p < parts; ++p)
      factors.push_back(random_points(rng, 1 + rng.uniform_index(5),
                                      1 + rng.uniform_index(5)));
    const Eigen::MatrixXd full = naive_kron(factors);
    const Eigen::VectorXd v = random_vector(rng, full.cols());
    const Eigen::VectorXd got = kron_matvec(factors, v);
    const Eigen::VectorXd want = full * v;
    CHECK((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
  }
}

TEST_CASE("kron: matvec rejects a length mismatch") {
  std::vector<Eigen::MatrixXd> factors{Eigen::MatrixXd::Identity(2, 3)};
  CHECK_THROWS_AS(kron_matvec(factors, Eigen::VectorXd::Zero(2)), ShapeError);
}

TEST_CASE("kron: triangular solves invert the factored operator") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Eigen::MatrixXd> factors;
    const int parts = 1 + static_cast<int>(rng.uniform_index(3));
    for (int p = 0; p < parts; ++p)
      factors.push_back(random_lower(rng, 1 + rng.uniform_index(4)));
    const Eigen::MatrixXd full = naive_kron(factors);
    const Eigen::VectorXd v = random_vector(rng, full.rows());

    const Eigen::VectorXd x = kron_solve_lower(factors, v);
    CHECK((full * x - v).norm() <= 1e-10 * (1.0 + v.norm()));

    const Eigen::VectorXd xt = kron_solve_lower_transposed(factors, v);
    CHECK((full.transpose() * xt - v).norm() <= 1e-10 * (1.0 + v.norm()));
  }
}

TEST_CASE("kron: vector product follows the slowest-first convention") {
  std::vector<Eigen::VectorXd> parts;
  parts.push_back((Eigen::VectorXd(2) << 1.0, 2.0).finished());
  parts.push_back((Eigen::VectorXd(3) << 5.0, 7.0, 11.0).finished());
  const Eigen::VectorXd got = kron_vector(parts);
  Eigen::VectorXd want(6);
  want << 5.0, 7.0, 11.0, 10.0, 14.0, 22.0;
  CHECK((got - want).norm() == 0.0);
}

TEST_CASE("kron: trace factorizes") {
  Rng rng(14);
  std::vector<Eigen::MatrixXd> factors;
  for (int p = 0; p < 3; ++p)
    factors.push_back(random_points(rng, 3, 3));
  CHECK(kron_trace(factors) ==
        doctest::Approx(naive_kron(factors).trace()).epsilon(1e-12));
}

TEST_CASE("kron: construction validates the factors") {
  CHECK_THROWS_AS(KronMatrix({Eigen::MatrixXd::Identity(2, 3)}), ShapeError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(KronMatrix({asym}), ShapeError);
  CHECK_THROWS_AS(KronMatrix(std::vector<Eigen::MatrixXd>{}), ShapeError);
}

TEST_CASE("kron: factored eigendecomposition reconstructs the matrix") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::MatrixXd> factors;
    const int parts = 1 + static_cast<int>(rng.uniform_index(3));
    for (int p = 0; p < parts; ++p)
      factors.push_back(random_spd(rng, 2 + rng.uniform_index(3)));
    KronMatrix k(factors);
    EigenFactorization eig = kron_eigendecompose(k);

    std::vector<Eigen::MatrixXd> vs = eig.vectors;
    const Eigen::MatrixXd v_full = naive_kron(vs);
    const Eigen::MatrixXd full = naive_kron(factors);
    const Eigen::MatrixXd rebuilt =
        v_full * eig.joint_values().asDiagonal() * v_full.transpose();
    CHECK((rebuilt - full).norm() <= 1e-9 * (1.0 + full.norm()));
  }
}

TEST_CASE("kron: joint eigenvalues order factor 0 slowest") {
  Eigen::MatrixXd d1 = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  Eigen::MatrixXd d2 = Eigen::Vector2d(5.0, 7.0).asDiagonal();
  EigenFactorization eig = kron_eigendecompose(KronMatrix({d1, d2}));
  const Eigen::VectorXd joint = eig.joint_values();
  Eigen::VectorXd want(4);
  want << 10.0, 14.0, 15.0, 21.0;
  CHECK((joint - want).norm() == 0.0);
}

TEST_CASE("kron: rank deficient factors clamp to zero, indefinite ones throw") {
  Eigen::VectorXd a(3);
  a << 1.0, -2.0, 0.5;
  Eigen::MatrixXd psd = a * a.transpose();  // rank one
  EigenFactorization eig = kron_eigendecompose(KronMatrix({psd}));
  CHECK(eig.values[0].minCoeff() >= 0.0);

  Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(2, 2);
  indef(0, 0) = -1.0;
  CHECK_THROWS_AS(kron_eigendecompose(KronMatrix({indef})), NumericError);
}

TEST_CASE("kron: jittered cholesky leaves clean matrices alone") {
  Rng rng(16);
  const Eigen::MatrixXd m = random_spd(rng, 6);
  LowerTriangular c = cholesky_with_jitter(m);
  CHECK(c.jitter == 0.0);
  CHECK((c.L * c.L.transpose() - m).norm() <= 1e-10 * m.norm());
}

TEST_CASE("kron: jittered cholesky escalates on a singular matrix") {
  Eigen::VectorXd a(4);
  a << 1.0, 1.0, 2.0, -1.0;
  Eigen::MatrixXd m = a * a.transpose();
  LowerTriangular c = cholesky_with_jitter(m);
  CHECK(c.jitter > 0.0);
  const Eigen::MatrixXd target =
      m + c.jitter * Eigen::MatrixXd::Identity(4, 4);
  CHECK((c.L * c.L.transpose() - target).norm() <= 1e-8 * target.norm());
}

TEST_CASE("kron: jittered cholesky gives up on an indefinite matrix") {
  Eigen::MatrixXd m = -Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(cholesky_with_jitter(m), NumericError);
}
