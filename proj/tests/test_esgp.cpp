#include <doctest.h>

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "flowgp/esgp.hpp"
#include "flowgp/kron.hpp"
#include "flowgp/sparse_gp.hpp"
#include "helpers.hpp"

using namespace flowgp;
using testutil::random_hyp;
using testutil::random_points;
using testutil::random_product;
using testutil::random_vector;
using testutil::se_spec;

namespace {

Eigen::VectorXd sorted_axis(Rng& rng, Eigen::Index k, double lo = -2.0,
                            double hi = 2.0) {
  Eigen::VectorXd v(k);
  for (Eigen::Index i = 0; i < k; ++i) v[i] = rng.uniform(lo, hi);
  std::sort(v.data(), v.data() + k);
  return v;
}

InducingGrid::Subspace random_subspace(Rng& rng, int d, Eigen::Index m,
                                       bool grid) {
  if (!grid) return InducingGrid::from_points(random_points(rng, m, d));
  std::vector<Eigen::VectorXd> axes;
  for (int a = 0; a < d; ++a) axes.push_back(sorted_axis(rng, m));
  return InducingGrid::from_axes(std::move(axes));
}

struct Instance {
  ProductInputs inputs;
  StructuredObservations obs;
  InducingGrid grid;
  KernelSpec spec;
  Hyperparameters hyp;
};

Instance random_instance(Rng& rng, const std::vector<Eigen::Index>& counts,
                         const std::vector<int>& dims,
                         const std::vector<Eigen::Index>& inducing,
                         const std::vector<bool>& as_grid) {
  ProductInputs inputs = random_product(rng, counts, dims);
  std::vector<InducingGrid::Subspace> subs;
  for (std::size_t i = 0; i < inducing.size(); ++i)
    subs.push_back(random_subspace(rng, dims[i], inducing[i], as_grid[i]));
  InducingGrid grid(std::move(subs));
  int d = 0;
  for (int di : dims) d += di;
  KernelSpec spec = se_spec(d);
  Hyperparameters h = random_hyp(rng, spec);
  Eigen::VectorXd y = random_vector(rng, inputs.total_points());
  StructuredObservations obs(std::move(y), inputs);
  return {std::move(inputs), std::move(obs), std::move(grid), std::move(spec),
          std::move(h)};
}

// Expanded inducing points across all subspaces, canonical ordering.
Eigen::MatrixXd expand_grid(const InducingGrid& grid) {
  std::vector<Eigen::MatrixXd> expanded;
  for (const auto& s : grid.subspaces()) expanded.push_back(s.expanded());
  ProductInputs as_product(std::move(expanded));
  return as_product.expand();
}

}  // namespace

TEST_CASE("esgp: axis-factored covariance reassembles the subspace gram") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    InducingGrid::Subspace sub = random_subspace(rng, 2, 4, true);
    KernelSpec spec = se_spec(2);
    Hyperparameters h = random_hyp(rng, spec);
    FactoredKmm f = inner_grid_kmm(sub, spec, h);
    REQUIRE(f.axis_k.size() == 2);

    const Eigen::MatrixXd want = eval_symmetric(spec, h, sub.expanded());
    const Eigen::MatrixXd got = kron_dense(f.axis_k);
    CHECK((got - want).norm() <= 1e-10 * (1.0 + want.norm()));

    const Eigen::MatrixXd chol = kron_dense(f.axis_chol);
    CHECK((chol * chol.transpose() - want).norm() <=
          1e-8 * (1.0 + want.norm()));
  }
}

TEST_CASE("esgp: structured bound equals the dense reference bound") {
  Rng rng(62);
  const std::vector<std::vector<Eigen::Index>> counts = {{5, 6}, {4, 3, 3}};
  const std::vector<std::vector<int>> dims = {{2, 1}, {1, 1, 1}};
  const std::vector<std::vector<Eigen::Index>> ms = {{3, 4}, {3, 2, 2}};
  for (std::size_t s = 0; s < counts.size(); ++s) {
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<bool> as_grid;
      for (std::size_t i = 0; i < dims[s].size(); ++i)
        as_grid.push_back(rng.uniform() < 0.5);
      Instance inst =
          random_instance(rng, counts[s], dims[s], ms[s], as_grid);

      DenseGpProblem dense{inst.inputs.expand(), inst.obs.y, inst.spec,
                           inst.hyp};
      InducingSet u(expand_grid(inst.grid));
      const double want = elbo_direct(dense, u);
      const double got =
          esgp_elbo(inst.inputs, inst.obs, inst.grid, inst.spec, inst.hyp);
      CHECK(got == doctest::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("esgp: inducing equal to the training product recovers the "
          "log marginal") {
  Rng rng(63);
  for (int trial = 0; trial < 6; ++trial) {
    ProductInputs inputs = random_product(rng, {4, 5}, {1, 2});
    Eigen::VectorXd y = random_vector(rng, inputs.total_points());
    StructuredObservations obs(std::move(y), inputs);
    KernelSpec spec = se_spec(3);
    Hyperparameters h = random_hyp(rng, spec);
    std::vector<InducingGrid::Subspace> subs;
    for (const auto& pts : inputs.subspaces())
      subs.push_back(InducingGrid::from_points(pts));
    InducingGrid grid(std::move(subs));

    const double marginal = egp_log_marginal(inputs, obs, spec, h);
    const double bound = esgp_elbo(inputs, obs, grid, spec, h);
    CHECK(bound == doctest::Approx(marginal).epsilon(1e-6));
    CHECK(bound <= marginal + 1e-8);
  }
}

TEST_CASE("esgp: bound is invariant to inducing row order") {
  Rng rng(64);
  Instance inst =
      random_instance(rng, {5, 4}, {1, 1}, {4, 3}, {false, false});
  const double base =
      esgp_elbo(inst.inputs, inst.obs, inst.grid, inst.spec, inst.hyp);

  Eigen::MatrixXd pts = inst.grid.subspaces()[0].points;
  std::vector<Eigen::Index> perm(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) perm[i] = i;
  Rng shuffler(7);
  shuffler.shuffle(perm);
  Eigen::MatrixXd shuffled(pts.rows(), pts.cols());
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    shuffled.row(i) = pts.row(perm[i]);
  std::vector<InducingGrid::Subspace> subs;
  subs.push_back(InducingGrid::from_points(shuffled));
  subs.push_back(inst.grid.subspaces()[1]);
  const double permuted =
      esgp_elbo(inst.inputs, inst.obs, InducingGrid(std::move(subs)),
                inst.spec, inst.hyp);
  CHECK(permuted == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("esgp: fitted weights reproduce the dense optimal posterior") {
  Rng rng(65);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<bool> as_grid = {trial % 2 == 0, trial % 3 == 0};
    Instance inst = random_instance(rng, {6, 5}, {1, 2}, {4, 3}, as_grid);
    EsgpFit fit =
        esgp_fit(inst.inputs, inst.obs, inst.grid, inst.spec, inst.hyp);
    CHECK(fit.elbo ==
          doctest::Approx(esgp_elbo(inst.inputs, inst.obs, inst.grid,
                                    inst.spec, inst.hyp))
              .epsilon(1e-12));

    DenseGpProblem dense{inst.inputs.expand(), inst.obs.y, inst.spec,
                         inst.hyp};
    InducingSet u(expand_grid(inst.grid));
    VariationalPosterior q = optimal_q_direct(dense, u);
    const Eigen::MatrixXd xs = random_points(rng, 9, 3);
    Prediction want = predict_sgp_dense(u, q, inst.spec, inst.hyp, xs);
    Prediction got = esgp_predict(fit, xs);
    CHECK((got.mean - want.mean).norm() <= 1e-6 * (1.0 + want.mean.norm()));
    CHECK((got.variance - want.variance.cwiseMax(1e-12)).norm() <=
          1e-5 * (1.0 + want.variance.norm()));
  }
}

TEST_CASE("esgp: grid prediction matches row-wise prediction") {
  Rng rng(66);
  Instance inst =
      random_instance(rng, {5, 4}, {1, 1}, {3, 3}, {true, false});
  EsgpFit fit =
      esgp_fit(inst.inputs, inst.obs, inst.grid, inst.spec, inst.hyp);
  ProductInputs xs = random_product(rng, {4, 6}, {1, 1});
  Prediction grid = esgp_predict_grid(fit, xs);
  Prediction flat = esgp_predict(fit, xs.expand());
  CHECK((grid.mean - flat.mean).norm() <= 1e-9 * (1.0 + flat.mean.norm()));
  CHECK((grid.variance - flat.variance).norm() <=
        1e-9 * (1.0 + flat.variance.norm()));
}

TEST_CASE("esgp: refining a nested inducing grid never lowers the bound") {
  Rng rng(67);
  ProductInputs inputs = random_product(rng, {8, 7}, {1, 1});
  Eigen::VectorXd y = random_vector(rng, inputs.total_points());
  StructuredObservations obs(std::move(y), inputs);
  KernelSpec spec = se_spec(2);
  Hyperparameters h = random_hyp(rng, spec);

  // Coarse set, then the same set plus extra rows in subspace 0.
  const Eigen::MatrixXd& pts = inputs.subspaces()[0];
  Eigen::MatrixXd coarse = pts.topRows(3);
  Eigen::MatrixXd fine = pts.topRows(6);
  std::vector<InducingGrid::Subspace> coarse_subs, fine_subs;
  coarse_subs.push_back(InducingGrid::from_points(coarse));
  coarse_subs.push_back(InducingGrid::from_points(inputs.subspaces()[1]));
  fine_subs.push_back(InducingGrid::from_points(fine));
  fine_subs.push_back(InducingGrid::from_points(inputs.subspaces()[1]));

  const double lo =
      esgp_elbo(inputs, obs, InducingGrid(std::move(coarse_subs)), spec, h);
  const double hi =
      esgp_elbo(inputs, obs, InducingGrid(std::move(fine_subs)), spec, h);
  CHECK(hi >= lo - 1e-8);
}

TEST_CASE("esgp: dense validation reports a small gap and no fallback") {
  // The weight gap scales with the conditioning of K_mm, so pin a well
  // conditioned layout: evenly spread inducing knots and moderate lengths.
  Rng rng(68);
  ProductInputs inputs = random_product(rng, {5, 5}, {1, 1});
  Eigen::VectorXd y = random_vector(rng, inputs.total_points());
  StructuredObservations obs(std::move(y), inputs);
  KernelSpec spec = se_spec(2);
  Eigen::VectorXd lv(4);
  lv << 0.1, std::log(0.6), std::log(0.7), std::log(0.3);
  Hyperparameters h(lv);

  std::vector<InducingGrid::Subspace> subs;
  subs.push_back(InducingGrid::from_axes(
      {Eigen::VectorXd::LinSpaced(4, -1.5, 1.5)}));
  subs.push_back(
      InducingGrid::from_points(Eigen::VectorXd::LinSpaced(4, -1.4, 1.6)));
  InducingGrid grid(std::move(subs));

  EsgpOptions opts;
  opts.validate_dense = true;
  EsgpFit fit = esgp_fit(inputs, obs, grid, spec, h, opts);
  CHECK(fit.dense_weight_gap >= 0.0);
  CHECK(fit.dense_weight_gap <= 1e-8);
  CHECK(!fit.dense_fallback);
}

TEST_CASE("esgp: dense validation fallback swaps in the dense weights") {
  Rng rng(168);
  Instance inst = random_instance(rng, {5, 5}, {1, 1}, {4, 4}, {false, true});
  EsgpOptions opts;
  opts.validate_dense = true;
  opts.tolerance = -1.0;  // any gap triggers the swap
  EsgpFit fit = esgp_fit(inst.inputs, inst.obs, inst.grid, inst.spec,
                         inst.hyp, opts);
  CHECK(fit.dense_fallback);

  // With the dense weights installed the mean must match the dense sparse
  // predictor almost exactly.
  Eigen::MatrixXd xq = random_points(rng, 10, 2);
  DenseGpProblem p{inst.inputs.expand(), inst.obs.y, inst.spec, inst.hyp};
  InducingSet u(expand_grid(inst.grid));
  Prediction got = esgp_predict(fit, xq);
  Prediction want = predict_sgp_dense(u, optimal_q_direct(p, u), inst.spec,
                                      inst.hyp, xq);
  CHECK((got.mean - want.mean).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("esgp: subspace count mismatches are rejected") {
  Rng rng(69);
  ProductInputs inputs = random_product(rng, {3, 3}, {1, 1});
  Eigen::VectorXd y = random_vector(rng, 9);
  StructuredObservations obs(std::move(y), inputs);
  KernelSpec spec = se_spec(2);
  Hyperparameters h = Hyperparameters::unit(spec);
  std::vector<InducingGrid::Subspace> subs;
  subs.push_back(InducingGrid::from_points(random_points(rng, 2, 1)));
  InducingGrid grid(std::move(subs));
  CHECK_THROWS_AS(esgp_elbo(inputs, obs, grid, spec, h), ShapeError);
}
