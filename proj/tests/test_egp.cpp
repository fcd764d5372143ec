#include <doctest.h>

#include <vector>

#include <Eigen/Dense>

#include "flowgp/dense_gp.hpp"
#include "flowgp/egp.hpp"
#include "helpers.hpp"

using namespace flowgp;
using testutil::random_hyp;
using testutil::random_points;
using testutil::random_product;
using testutil::random_vector;
using testutil::se_spec;

namespace {

struct Instance {
  ProductInputs inputs;
  StructuredObservations obs;
  KernelSpec spec;
  Hyperparameters hyp;
};

Instance random_instance(Rng& rng, const std::vector<Eigen::Index>& counts,
                         const std::vector<int>& dims) {
  ProductInputs inputs = random_product(rng, counts, dims);
  int d = 0;
  for (int di : dims) d += di;
  KernelSpec spec = se_spec(d);
  Hyperparameters h = random_hyp(rng, spec);
  Eigen::VectorXd y = random_vector(rng, inputs.total_points());
  StructuredObservations obs(std::move(y), inputs);
  return {std::move(inputs), std::move(obs), std::move(spec), std::move(h)};
}

DenseGpProblem expand_problem(const Instance& inst) {
  return DenseGpProblem{inst.inputs.expand(), inst.obs.y, inst.spec, inst.hyp};
}

}  // namespace

TEST_CASE("product inputs: expansion order, strides, frozen layout") {
  std::vector<Eigen::MatrixXd> subs;
  Eigen::MatrixXd a(2, 1);
  a << 1.0, 2.0;
  Eigen::MatrixXd b(3, 1);
  b << 10.0, 20.0, 30.0;
  subs.push_back(a);
  subs.push_back(b);
  ProductInputs inputs(std::move(subs));

  CHECK(inputs.total_points() == 6);
  CHECK(inputs.total_dims() == 2);
  const auto strides = inputs.strides();
  REQUIRE(strides.size() == 2);
  CHECK(strides[0] == 3);
  CHECK(strides[1] == 1);

  Eigen::MatrixXd want(6, 2);
  want << 1.0, 10.0, 1.0, 20.0, 1.0, 30.0, 2.0, 10.0, 2.0, 20.0, 2.0, 30.0;
  CHECK((inputs.expand() - want).norm() == 0.0);
}

TEST_CASE("product inputs: validation") {
  CHECK_THROWS_AS(ProductInputs(std::vector<Eigen::MatrixXd>{}), ShapeError);
  std::vector<Eigen::MatrixXd> subs;
  subs.push_back(Eigen::MatrixXd::Zero(0, 1));
  CHECK_THROWS_AS(ProductInputs(std::move(subs)), ShapeError);
}

TEST_CASE("structured observations: length must match the product") {
  Rng rng(51);
  ProductInputs inputs = random_product(rng, {3, 4}, {1, 1});
  CHECK_THROWS_AS(StructuredObservations(Eigen::VectorXd::Zero(11), inputs),
                  ShapeError);
}

TEST_CASE("egp: log marginal equals the dense value on the expanded grid") {
  Rng rng(52);
  const std::vector<std::vector<Eigen::Index>> shapes = {
      {4, 5}, {3, 4, 2}, {6, 3}, {2, 2, 2, 2}};
  const std::vector<std::vector<int>> dims = {
      {1, 1}, {1, 2, 1}, {2, 1}, {1, 1, 1, 1}};
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    for (int trial = 0; trial < 6; ++trial) {
      Instance inst = random_instance(rng, shapes[s], dims[s]);
      const double want = log_marginal(expand_problem(inst));
      const double got =
          egp_log_marginal(inst.inputs, inst.obs, inst.spec, inst.hyp);
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("egp: fit caches the same marginal and exact solve") {
  Rng rng(53);
  Instance inst = random_instance(rng, {5, 4}, {2, 1});
  EgpFit fit = egp_fit(inst.inputs, inst.obs, inst.spec, inst.hyp);
  CHECK(fit.log_marginal ==
        doctest::Approx(
            egp_log_marginal(inst.inputs, inst.obs, inst.spec, inst.hyp))
            .epsilon(1e-12));

  DenseGpProblem p = expand_problem(inst);
  const Eigen::MatrixXd ky =
      eval_symmetric(p.spec, p.hyp, p.x) +
      p.hyp.noise_variance() *
          Eigen::MatrixXd::Identity(p.x.rows(), p.x.rows());
  const Eigen::VectorXd want_alpha = ky.fullPivLu().solve(p.y);
  CHECK((fit.alpha - want_alpha).norm() <= 1e-8 * (1.0 + want_alpha.norm()));
}

TEST_CASE("egp: prediction equals the dense posterior") {
  Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    Instance inst = random_instance(rng, {4, 5}, {1, 2});
    EgpFit fit = egp_fit(inst.inputs, inst.obs, inst.spec, inst.hyp);
    const Eigen::MatrixXd xs = random_points(rng, 6, 3);

    DensePrediction want = predict_dense(expand_problem(inst), xs);
    Prediction got = egp_predict(fit, xs);
    CHECK((got.mean - want.mean).norm() <= 1e-8 * (1.0 + want.mean.norm()));
    const Eigen::VectorXd want_var =
        want.cov.diagonal().cwiseMax(1e-12);
    CHECK((got.variance - want_var).norm() <=
          1e-7 * (1.0 + want_var.norm()));
  }
}

TEST_CASE("egp: grid prediction matches row-wise prediction") {
  Rng rng(55);
  Instance inst = random_instance(rng, {4, 3}, {1, 1});
  EgpFit fit = egp_fit(inst.inputs, inst.obs, inst.spec, inst.hyp);
  ProductInputs xs = random_product(rng, {3, 5}, {1, 1});
  Prediction grid = egp_predict_grid(fit, xs);
  Prediction flat = egp_predict(fit, xs.expand());
  CHECK((grid.mean - flat.mean).norm() <= 1e-10 * (1.0 + flat.mean.norm()));
  CHECK((grid.variance - flat.variance).norm() <=
        1e-10 * (1.0 + flat.variance.norm()));
}

TEST_CASE("egp: variance is floored at training points with tiny noise") {
  Rng rng(56);
  ProductInputs inputs = random_product(rng, {4, 4}, {1, 1});
  Eigen::VectorXd y = random_vector(rng, 16);
  StructuredObservations obs(std::move(y), inputs);
  KernelSpec spec = se_spec(2);
  Eigen::VectorXd lv = Eigen::VectorXd::Zero(spec.slots());
  lv[lv.size() - 1] = -12.0;  // nearly noiseless
  EgpFit fit = egp_fit(inputs, obs, spec, Hyperparameters(lv));
  Prediction at_train = egp_predict(fit, inputs.expand());
  CHECK(at_train.variance.minCoeff() >= 1e-12);
}

TEST_CASE("egp: query column mismatch is rejected") {
  Rng rng(57);
  Instance inst = random_instance(rng, {3, 3}, {1, 1});
  EgpFit fit = egp_fit(inst.inputs, inst.obs, inst.spec, inst.hyp);
  CHECK_THROWS_AS(egp_predict(fit, Eigen::MatrixXd::Zero(2, 3)), ShapeError);
}
