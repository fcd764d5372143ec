#include "flowgp/mh.hpp"

#include <chrono>
#include <cmath>

#include "flowgp/rng.hpp"

namespace flowgp {

double MhTrace::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  double n = 0;
  for (const auto a : accepted) n += a;
  return n / static_cast<double>(accepted.size());
}

MhTrace mh_run(const Objective& objective, const MhConfig& cfg) {
  if (!objective) {
    throw ConfigError("mh_run: no objective");
  }
  if (cfg.epochs < 1 || cfg.samples_per_epoch < 1) {
    throw ConfigError("mh_run: epochs and samples_per_epoch must be >= 1");
  }
  if (cfg.init.size() < 1) {
    throw ShapeError("mh_run: empty initial point");
  }
  if (!cfg.init.allFinite()) {
    throw NumericError("mh_run: non-finite initial point");
  }
  Eigen::VectorXd step;
  if (cfg.step.size() == 0) {
    step = Eigen::VectorXd::Constant(cfg.init.size(), cfg.step_scale);
  } else if (cfg.step.size() == cfg.init.size()) {
    step = cfg.step;
  } else {
    throw ShapeError("mh_run: step vector has " +
                     std::to_string(cfg.step.size()) + " entries for " +
                     std::to_string(cfg.init.size()) + " parameters");
  }
  if (!step.allFinite() || (step.array() < 0.0).any()) {
    throw ConfigError("mh_run: proposal widths must be finite and >= 0");
  }

  const auto eval = [&](const Eigen::VectorXd& x, std::size_t index) {
    try {
      return objective(x);
    } catch (const std::exception& e) {
      throw NumericError("mh_run: objective failed at sample " +
                         std::to_string(index) + ": " + e.what());
    }
  };

  Rng rng = Rng(cfg.seed).stream(cfg.chain);
  const Eigen::Index dim = cfg.init.size();
  const std::size_t total =
      static_cast<std::size_t>(cfg.epochs) *
      static_cast<std::size_t>(cfg.samples_per_epoch);

  MhTrace trace;
  trace.objective.reserve(total);
  trace.accepted.reserve(total);
  trace.epoch_seconds.reserve(cfg.epochs);

  Eigen::VectorXd x = cfg.init;
  double cur = eval(x, 0);
  if (!std::isfinite(cur)) {
    throw NumericError("mh_run: objective non-finite at the initial point");
  }
  trace.initial_objective = cur;
  trace.best_objective = cur;
  trace.best_point = x;
  trace.best_index = 0;

  std::size_t k = 0;
  Eigen::VectorXd prop(dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tic = std::chrono::steady_clock::now();
    for (int s = 0; s < cfg.samples_per_epoch; ++s) {
      k += 1;
      for (Eigen::Index i = 0; i < dim; ++i) {
        prop(i) = x(i) + step(i) * rng.normal();
      }
      const double u = rng.uniform();
      const double val = eval(prop, k);
      const bool accept =
          std::isfinite(val) && (val >= cur || u < std::exp(val - cur));
      if (accept) {
        x = prop;
        cur = val;
        if (cur > trace.best_objective) {
          trace.best_objective = cur;
          trace.best_point = x;
          trace.best_index = k;
        }
      }
      trace.objective.push_back(cur);
      trace.accepted.push_back(accept ? 1 : 0);
    }
    const auto toc = std::chrono::steady_clock::now();
    trace.epoch_seconds.push_back(
        std::chrono::duration<double>(toc - tic).count());
  }
  return trace;
}

namespace {

MhConfig with_default_init(const MhConfig& cfg, const KernelSpec& spec,
                           const char* op) {
  MhConfig c = cfg;
  if (c.init.size() == 0) {
    c.init = Eigen::VectorXd::Zero(spec.slots());
  } else if (c.init.size() != spec.slots()) {
    throw ShapeError(std::string(op) + ": initial point has " +
                     std::to_string(c.init.size()) + " entries, spec expects " +
                     std::to_string(spec.slots()));
  }
  return c;
}

}  // namespace

TrainResult train_egp(const ProductInputs& inputs,
                      const StructuredObservations& obs, const KernelSpec& spec,
                      const MhConfig& cfg) {
  const MhConfig c = with_default_init(cfg, spec, "train_egp");
  const Objective f = [&](const Eigen::VectorXd& v) {
    return egp_log_marginal(inputs, obs, spec, unpack(v, spec));
  };
  MhTrace tr = mh_run(f, c);
  TrainedModel model{"egp", spec, unpack(tr.best_point, spec),
                     tr.best_objective};
  return {std::move(model), std::move(tr)};
}

TrainResult train_esgp(const ProductInputs& inputs,
                       const StructuredObservations& obs,
                       const InducingGrid& grid, const KernelSpec& spec,
                       const MhConfig& cfg) {
  const MhConfig c = with_default_init(cfg, spec, "train_esgp");
  const Objective f = [&](const Eigen::VectorXd& v) {
    return esgp_elbo(inputs, obs, grid, spec, unpack(v, spec));
  };
  MhTrace tr = mh_run(f, c);
  TrainedModel model{"esgp", spec, unpack(tr.best_point, spec),
                     tr.best_objective};
  return {std::move(model), std::move(tr)};
}

TrainResult train(const ProductInputs& inputs,
                  const StructuredObservations& obs, const std::string& kind,
                  const KernelSpec& spec,
                  const std::optional<InducingGrid>& inducing,
                  const MhConfig& cfg) {
  if (kind == "egp") {
    if (inducing.has_value()) {
      throw ConfigError("train: model kind 'egp' takes no inducing grid");
    }
    return train_egp(inputs, obs, spec, cfg);
  }
  if (kind == "esgp") {
    if (!inducing.has_value()) {
      throw ConfigError("train: model kind 'esgp' requires an inducing grid");
    }
    return train_esgp(inputs, obs, *inducing, spec, cfg);
  }
  throw ConfigError("train: unknown model kind '" + kind + "'");
}

}  // namespace flowgp
