#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgp/common.hpp"

namespace flowgp {

struct SyntheticSummary {
  std::string out_dir;
  Eigen::Index train_rows = 0;
  Eigen::Index test_rows = 0;
  std::vector<std::string> files;
};

// Deterministic closed-form stand-ins for flow snapshot data, written as a
// dataset descriptor plus long-format CSVs (train.csv with observation
// noise, train_truth.csv without it, and when a test block is configured,
// test_points.csv / test_truth.csv).
//
// Generators:
//   traveling-wave  u(y, x, t) = A exp(-y^2 / lambda) sin(2 pi (x - c t) / L)
//                   on a y * x * t grid; a decaying oscillatory wake slice
//                   advected in time with period L / c.
//   cavity          u(x, y; u_wall) = u_wall sin(pi x)^2 sin(2 pi y) on an
//                   unstructured spatial cloud in (0,1)^2 crossed with a list
//                   of wall speeds; a recirculation pattern whose strength
//                   scales with the lid speed.
SyntheticSummary generate_synthetic(const nlohmann::json& config,
                                    const std::string& out_dir);

}  // namespace flowgp
