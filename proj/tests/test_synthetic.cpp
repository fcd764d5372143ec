#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "flowgp/dataset.hpp"
#include "flowgp/synthetic.hpp"
#include "helpers.hpp"

using namespace flowgp;
using nlohmann::json;
using testutil::slurp;
using testutil::TempDir;

namespace {

json wave_config(double noise) {
  return json{{"generator", "traveling-wave"},
              {"seed", 11},
              {"noise_sigma", noise},
              {"amplitude", 0.8},
              {"decay_length", 0.5},
              {"wavelength", 2.0},
              {"speed", 0.3},
              {"grid",
               {{"y", {-1.0, 1.0, 4}},
                {"x", {0.0, 3.0, 5}},
                {"t", {0.0, 2.0, 3}}}}};
}

json cavity_config() {
  return json{{"generator", "cavity"},
              {"seed", 3},
              {"noise_sigma", 0.0},
              {"n_spatial", 25},
              {"velocities", {1.0, 2.0, 4.0}}};
}

}  // namespace

TEST_CASE("synthetic: identical configs give byte-identical files") {
  TempDir a("wave_a"), b("wave_b");
  generate_synthetic(wave_config(0.05), a.path.string());
  generate_synthetic(wave_config(0.05), b.path.string());
  for (const char* f :
       {"descriptor.json", "train.csv", "train_truth.csv"}) {
    CHECK(slurp(a.file(f)) == slurp(b.file(f)));
  }
}

TEST_CASE("synthetic: the wave samples its closed form") {
  TempDir dir("wave_exact");
  SyntheticSummary s =
      generate_synthetic(wave_config(0.0), dir.path.string());
  CHECK(s.train_rows == 4 * 5 * 3);

  // Noise-free training data equals the stated truth file.
  CHECK(slurp(dir.file("train.csv")) == slurp(dir.file("train_truth.csv")));

  CsvTable t = read_csv(dir.file("train.csv"));
  const int yc = t.require_column("y", "train");
  const int xc = t.require_column("x", "train");
  const int tc = t.require_column("t", "train");
  const int uc = t.require_column("u", "train");
  for (const auto& row : t.rows) {
    const double want =
        0.8 * std::exp(-row[yc] * row[yc] / 0.5) *
        std::sin(2.0 * 3.14159265358979323846 * (row[xc] - 0.3 * row[tc]) /
                 2.0);
    CHECK(row[uc] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("synthetic: wave output loads as a complete product dataset") {
  TempDir dir("wave_load");
  generate_synthetic(wave_config(0.02), dir.path.string());
  Dataset ds =
      load_dataset(dir.file("descriptor.json"), dir.file("train.csv"));
  REQUIRE(ds.inputs.count() == 3);
  CHECK(ds.inputs.subspaces()[0].rows() == 4);
  CHECK(ds.inputs.subspaces()[1].rows() == 5);
  CHECK(ds.inputs.subspaces()[2].rows() == 3);
  CHECK(ds.descriptor.dim_names() ==
        std::vector<std::string>{"y", "x", "t"});
}

TEST_CASE("synthetic: wave test grid is noise-free and aligned") {
  TempDir dir("wave_test");
  json cfg = wave_config(0.1);
  cfg["test"] = {{"grid",
                  {{"y", {-0.5, 0.5, 3}},
                   {"x", {0.5, 2.5, 4}},
                   {"t", {2.0, 2.5, 2}}}}};
  SyntheticSummary s = generate_synthetic(cfg, dir.path.string());
  CHECK(s.test_rows == 3 * 4 * 2);
  CsvTable pts = read_csv(dir.file("test_points.csv"));
  CsvTable truth = read_csv(dir.file("test_truth.csv"));
  REQUIRE(pts.rows.size() == 24);
  REQUIRE(truth.rows.size() == 24);
  const int uc = truth.require_column("u", "truth");
  for (std::size_t r = 0; r < pts.rows.size(); ++r) {
    const double y = pts.rows[r][0], x = pts.rows[r][1], tt = pts.rows[r][2];
    CHECK(truth.rows[r][0] == y);
    const double want =
        0.8 * std::exp(-y * y / 0.5) *
        std::sin(2.0 * 3.14159265358979323846 * (x - 0.3 * tt) / 2.0);
    CHECK(truth.rows[r][static_cast<std::size_t>(uc)] ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("synthetic: cavity field is linear in the wall speed") {
  TempDir dir("cavity");
  SyntheticSummary s =
      generate_synthetic(cavity_config(), dir.path.string());
  CHECK(s.train_rows == 75);
  Dataset ds =
      load_dataset(dir.file("descriptor.json"), dir.file("train.csv"));
  REQUIRE(ds.inputs.count() == 2);
  CHECK(ds.inputs.subspaces()[0].rows() == 25);
  CHECK(ds.inputs.subspaces()[1].rows() == 3);

  // y is stored fastest over the wall-speed subspace; doubling the wall
  // speed doubles the noise-free response at the same spatial point.
  const auto& walls = ds.inputs.subspaces()[1];
  REQUIRE(walls(0, 0) == 1.0);
  REQUIRE(walls(1, 0) == 2.0);
  for (Eigen::Index i = 0; i < 25; ++i) {
    const double at_one = ds.obs.y[i * 3 + 0];
    const double at_two = ds.obs.y[i * 3 + 1];
    CHECK(at_two == doctest::Approx(2.0 * at_one).epsilon(1e-12));
  }
}

TEST_CASE("synthetic: cavity validates its velocity list") {
  TempDir dir("cavity_bad");
  json cfg = cavity_config();
  cfg["velocities"] = {1.0, 1.0};
  CHECK_THROWS_AS(generate_synthetic(cfg, dir.path.string()), ConfigError);
  cfg["velocities"] = json::array();
  CHECK_THROWS_AS(generate_synthetic(cfg, dir.path.string()), ConfigError);
}

TEST_CASE("synthetic: unknown generators are rejected") {
  TempDir dir("unknown");
  CHECK_THROWS_AS(
      generate_synthetic(json{{"generator", "vortex"}}, dir.path.string()),
      ConfigError);
}
