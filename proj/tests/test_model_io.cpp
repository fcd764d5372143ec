#include <doctest.h>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "flowgp/model_io.hpp"
#include "helpers.hpp"

using namespace flowgp;
using nlohmann::json;
using testutil::se_spec;
using testutil::slurp;
using testutil::TempDir;

namespace {

ModelFile sample_model(bool with_inducing) {
  KernelSpec spec = se_spec(2);
  Eigen::VectorXd hyp = Eigen::VectorXd::LinSpaced(spec.slots(), -0.5, 0.5);
  std::optional<InducingGrid> inducing;
  if (with_inducing) {
    std::vector<InducingGrid::Subspace> subs;
    Eigen::MatrixXd pts(3, 1);
    pts << 0.0, 0.5, 1.0;
    subs.push_back(InducingGrid::from_points(pts));
    std::vector<Eigen::VectorXd> axes;
    axes.push_back((Eigen::VectorXd(2) << -1.0, 1.0).finished());
    subs.push_back(InducingGrid::from_axes(std::move(axes)));
    inducing = InducingGrid(std::move(subs));
  }
  return ModelFile{with_inducing ? "esgp" : "egp",
                   spec,
                   hyp,
                   -12.5,
                   77,
                   "desc.json",
                   "data.csv",
                   {{0, 2, 5}, {}},
                   std::move(inducing),
                   kToolVersion};
}

}  // namespace

TEST_CASE("model io: json round trip preserves everything") {
  for (bool with_inducing : {false, true}) {
    ModelFile m = sample_model(with_inducing);
    ModelFile back = ModelFile::from_json(m.to_json());
    CHECK(back.kind == m.kind);
    CHECK(back.spec.to_json() == m.spec.to_json());
    CHECK((back.log_hyp - m.log_hyp).norm() == 0.0);
    CHECK(back.objective == m.objective);
    CHECK(back.seed == m.seed);
    CHECK(back.descriptor_path == m.descriptor_path);
    CHECK(back.sod == m.sod);
    CHECK(back.inducing.has_value() == with_inducing);
    if (with_inducing) {
      REQUIRE(back.inducing->count() == 2);
      CHECK(!back.inducing->subspaces()[0].is_grid());
      CHECK(back.inducing->subspaces()[1].is_grid());
      CHECK((back.inducing->subspaces()[0].points -
             m.inducing->subspaces()[0].points)
                .norm() == 0.0);
      CHECK((back.inducing->subspaces()[1].axes[0] -
             m.inducing->subspaces()[1].axes[0])
                .norm() == 0.0);
    }
    CHECK(back.to_json() == m.to_json());
  }
}

TEST_CASE("model io: file round trip is byte stable") {
  TempDir dir("model_io");
  ModelFile m = sample_model(true);
  save_model(m, dir.file("m.json"));
  ModelFile back = load_model(dir.file("m.json"));
  save_model(back, dir.file("m2.json"));
  CHECK(slurp(dir.file("m.json")) == slurp(dir.file("m2.json")));
}

TEST_CASE("model io: validation on load") {
  ModelFile m = sample_model(false);
  json doc = m.to_json();
  json bad = doc;
  bad["kind"] = "stdgp";
  CHECK_THROWS_AS(ModelFile::from_json(bad), ConfigError);
  bad = doc;
  bad["log_hyperparameters"] = {0.0, 0.0};
  CHECK_THROWS_AS(ModelFile::from_json(bad), ConfigError);
  bad = doc;
  bad["inducing"] = json::array();
  CHECK_THROWS_AS(ModelFile::from_json(bad), ConfigError);

  ModelFile e = sample_model(true);
  json edoc = e.to_json();
  edoc.erase("inducing");
  CHECK_THROWS_AS(ModelFile::from_json(edoc), ConfigError);
}

TEST_CASE("model io: trace csv layout") {
  TempDir dir("trace");
  MhTrace trace;
  trace.initial_objective = -3.0;
  trace.objective = {-2.5, -2.5, -1.0};
  trace.accepted = {1, 0, 1};
  trace.epoch_seconds = {0.25};
  save_trace_csv(trace, dir.file("trace.csv"));
  CHECK(slurp(dir.file("trace.csv")) ==
        "sample,objective,accepted\n"
        "0,-3,1\n"
        "1,-2.5,1\n"
        "2,-2.5,0\n"
        "3,-1,1\n");

  save_epochs_csv(trace, 3, dir.file("epochs.csv"));
  CHECK(slurp(dir.file("epochs.csv")) ==
        "epoch,seconds,samples\n"
        "1,0.25,3\n");
}
