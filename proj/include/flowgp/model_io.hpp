#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgp/common.hpp"
#include "flowgp/esgp.hpp"
#include "flowgp/kernels.hpp"
#include "flowgp/mh.hpp"

namespace flowgp {

// Everything needed to rebuild a trained model deterministically: the kernel
// spec, the best log-space hyperparameters, the resolved data subset and
// inducing layout, and where the data came from.  Heavy caches are
// recomputed on load.
struct ModelFile {
  std::string kind;  // "egp" or "esgp"
  KernelSpec spec;
  Eigen::VectorXd log_hyp;
  double objective = 0.0;
  std::uint64_t seed = 0;
  std::string descriptor_path;
  std::string data_path;
  // Kept training rows per subspace; an empty list keeps that subspace whole.
  std::vector<std::vector<Eigen::Index>> sod;
  // Resolved inducing layout, esgp only: explicit axes or points, never a
  // re-randomized placement recipe.
  std::optional<InducingGrid> inducing;
  std::string tool_version;

  nlohmann::json to_json() const;
  static ModelFile from_json(const nlohmann::json& doc);
};

void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

nlohmann::json inducing_to_json(const InducingGrid& grid);
InducingGrid inducing_from_json(const nlohmann::json& doc);

// Sample trace as CSV: row 0 is the starting point, then one row per
// proposal decision.  Timing lives in its own file because wall-clock values
// are the one non-reproducible output.
void save_trace_csv(const MhTrace& trace, const std::string& path);
void save_epochs_csv(const MhTrace& trace, int samples_per_epoch,
                     const std::string& path);

}  // namespace flowgp
