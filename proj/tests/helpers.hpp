#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "flowgp/egp.hpp"
#include "flowgp/kernels.hpp"
#include "flowgp/rng.hpp"

namespace flowgp::testutil {

inline Eigen::MatrixXd random_points(Rng& rng, Eigen::Index n, Eigen::Index d,
                                     double lo = -2.0, double hi = 2.0) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform(lo, hi);
  return x;
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

// One squared-exponential leaf per input column.
inline KernelSpec se_spec(int d) {
  nlohmann::json factors = nlohmann::json::array();
  for (int i = 0; i < d; ++i)
    factors.push_back({{"type", "se"}, {"dims", {i}}});
  return KernelSpec::from_json({{"type", "product"}, {"factors", factors}});
}

// Moderate random log hyperparameters; the last slot (log noise sd) is drawn
// from its own range so tests can keep the noise well conditioned.
inline Hyperparameters random_hyp(Rng& rng, const KernelSpec& spec,
                                  double noise_lo = -2.0,
                                  double noise_hi = -0.7) {
  Eigen::VectorXd v(spec.slots());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-0.6, 0.6);
  v[v.size() - 1] = rng.uniform(noise_lo, noise_hi);
  return Hyperparameters(v);
}

inline ProductInputs random_product(Rng& rng,
                                    const std::vector<Eigen::Index>& counts,
                                    const std::vector<int>& dims) {
  std::vector<Eigen::MatrixXd> subs;
  for (std::size_t i = 0; i < counts.size(); ++i)
    subs.push_back(random_points(rng, counts[i], dims[i]));
  return ProductInputs(std::move(subs));
}

// Scratch directory per test group, wiped on construction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / "flowgp_tests" / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }

  std::string file(const std::string& rel) const {
    return (path / rel).string();
  }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace flowgp::testutil
