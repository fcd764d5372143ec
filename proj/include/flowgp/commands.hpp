#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowgp/dataset.hpp"
#include "flowgp/metrics.hpp"
#include "flowgp/model_io.hpp"
#include "flowgp/synthetic.hpp"

namespace flowgp {

// Command implementations behind the CLI.  They throw ConfigError or
// ShapeError for bad input (exit code 2) and NumericError for numerical
// failures (exit code 1); the binary maps exceptions to exit codes.

SyntheticSummary cmd_synth(const std::string& config_path,
                           const std::string& out_dir);

struct TrainArtifacts {
  ModelFile model;
  MhTrace trace;
  std::string model_path;
  std::string trace_path;
  std::string epochs_path;
};

TrainArtifacts cmd_train(const std::string& config_path,
                         const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override = {});

// A model file turned back into a fitted predictor.  The recomputed
// objective must agree with the stored one; callers decide how strictly.
struct RebuiltModel {
  DatasetDescriptor descriptor;
  std::optional<EgpFit> egp;
  std::optional<EsgpFit> esgp;
  double objective = 0.0;

  Prediction predict(const Eigen::Ref<const Eigen::MatrixXd>& xstar) const;
};

RebuiltModel rebuild_model(const ModelFile& m);

Eigen::Index cmd_predict(const std::string& model_path,
                         const std::string& queries_path,
                         const std::string& out_path);

MetricsReport cmd_evaluate(const std::string& predictions_path,
                           const std::string& truth_path,
                           const std::string& out_path,
                           const std::string& value_column = "");

struct BenchRow {
  std::string model;
  double fraction = 0.0;
  Eigen::Index n_total = 0;
  int repeat = 0;
  double block_seconds = 0.0;
  double seconds_per_sample = 0.0;
};

struct BenchSummaryRow {
  std::string model;
  double fraction = 0.0;
  Eigen::Index n_total = 0;
  double median_seconds_per_sample = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchSummaryRow> medians;
  std::map<std::string, double> slopes;  // model name -> log-log slope vs N
  std::string timing_path;
  std::string summary_path;
};

// Time fixed-length sampling blocks per model kind over growing fractions of
// one subspace, then fit log time against log point count.
BenchReport cmd_bench(const std::string& config_path, const std::string& out_dir,
                      const std::vector<double>& fractions_override = {});

struct CompareRow {
  std::string resolution;
  std::string model;
  int seed = 0;
  double rmse = 0.0;
  double msll = 0.0;
  double objective = 0.0;
};

struct CompareSummaryRow {
  std::string resolution;
  std::string model;
  double rmse_min = 0.0, rmse_q1 = 0.0, rmse_median = 0.0, rmse_q3 = 0.0,
         rmse_max = 0.0;
  double msll_min = 0.0, msll_q1 = 0.0, msll_median = 0.0, msll_q3 = 0.0,
         msll_max = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::vector<CompareSummaryRow> summary;
  std::string results_path;
  std::string summary_path;
};

// Repeat train + evaluate over resolutions x model entries x placement
// seeds and tabulate held-out metric distributions.
CompareReport cmd_compare(const std::string& config_path,
                          const std::string& out_dir,
                          std::optional<int> seeds_override = {});

}  // namespace flowgp
