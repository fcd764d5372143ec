#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowgp/common.hpp"
#include "flowgp/egp.hpp"
#include "flowgp/esgp.hpp"
#include "flowgp/kernels.hpp"

namespace flowgp {

struct MhConfig {
  int epochs = 1;
  int samples_per_epoch = 1000;
  Eigen::VectorXd init;   // log-space starting point; empty means all zeros
  Eigen::VectorXd step;   // per-slot proposal widths; empty broadcasts step_scale
  double step_scale = 0.05;
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;  // substream index, for parallel restarts
};

struct MhTrace {
  double initial_objective = 0.0;
  std::vector<double> objective;  // chain value after each proposal decision
  std::vector<std::uint8_t> accepted;
  std::vector<double> epoch_seconds;
  double best_objective = 0.0;
  Eigen::VectorXd best_point;
  std::size_t best_index = 0;  // 0 is the initial point, k the k-th sample

  double acceptance_rate() const;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Random-walk Metropolis in log-space: symmetric Gaussian proposals, flat
// prior, acceptance probability min(1, exp(l' - l)).  Every sample consumes
// a fixed amount of randomness (one normal per slot plus one uniform), so
// chains with equal (seed, chain) are identical draw for draw.  Proposals
// with a non-finite objective are rejected.  Ties for the best value keep
// the earliest point.
MhTrace mh_run(const Objective& objective, const MhConfig& cfg);

struct TrainedModel {
  std::string kind;  // "egp" or "esgp"
  KernelSpec spec;
  Hyperparameters best;
  double objective = 0.0;
};

struct TrainResult {
  TrainedModel model;
  MhTrace trace;
};

TrainResult train_egp(const ProductInputs& inputs,
                      const StructuredObservations& obs, const KernelSpec& spec,
                      const MhConfig& cfg);

TrainResult train_esgp(const ProductInputs& inputs,
                       const StructuredObservations& obs,
                       const InducingGrid& grid, const KernelSpec& spec,
                       const MhConfig& cfg);

// Dispatch on the model kind; "esgp" requires an inducing grid and "egp"
// forbids one.
TrainResult train(const ProductInputs& inputs,
                  const StructuredObservations& obs, const std::string& kind,
                  const KernelSpec& spec,
                  const std::optional<InducingGrid>& inducing,
                  const MhConfig& cfg);

}  // namespace flowgp
