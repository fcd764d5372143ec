#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowgp/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Structured Gaussian process regression toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string model_path;
  std::string queries_path;
  std::string predictions_path;
  std::string truth_path;
  std::string value_column;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<double> fractions;
  int seeds = 0;
  bool seeds_set = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--config", config_path, "Generator config JSON")
      ->required();
  synth->add_option("--out", out_path, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "Training config JSON")
      ->required();
  train->add_option("--out", out_path, "Output directory")->required();
  train->add_option("--seed", seed, "Override the config seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* predict = app.add_subcommand("predict", "Predict at query points");
  predict->add_option("--model", model_path, "Trained model JSON")->required();
  predict->add_option("--queries", queries_path, "Query points CSV")
      ->required();
  predict->add_option("--out", out_path, "Predictions CSV")->required();

  auto* evaluate =
      app.add_subcommand("evaluate", "Score predictions against truth");
  evaluate->add_option("--predictions", predictions_path, "Predictions CSV")
      ->required();
  evaluate->add_option("--truth", truth_path, "Truth CSV")->required();
  evaluate->add_option("--out", out_path, "Metrics JSON (optional)");
  evaluate->add_option("--value-column", value_column,
                       "Truth column holding the observed value");

  auto* bench = app.add_subcommand("bench", "Time training cost vs data size");
  bench->add_option("--config", config_path, "Bench config JSON")->required();
  bench->add_option("--out", out_path, "Output directory")->required();
  bench->add_option("--fractions", fractions, "Override fraction list")
      ->delimiter(',');

  auto* compare =
      app.add_subcommand("compare", "Sweep models over inducing resolutions");
  compare->add_option("--config", config_path, "Compare config JSON")
      ->required();
  compare->add_option("--out", out_path, "Output directory")->required();
  compare->add_option("--seeds", seeds, "Override the placement seed count")
      ->each([&](const std::string&) { seeds_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      flowgp::cmd_synth(config_path, out_path);
    } else if (train->parsed()) {
      std::optional<std::uint64_t> override_seed;
      if (seed_set) override_seed = seed;
      flowgp::cmd_train(config_path, out_path, override_seed);
    } else if (predict->parsed()) {
      flowgp::cmd_predict(model_path, queries_path, out_path);
    } else if (evaluate->parsed()) {
      flowgp::cmd_evaluate(predictions_path, truth_path, out_path,
                           value_column);
    } else if (bench->parsed()) {
      flowgp::cmd_bench(config_path, out_path, fractions);
    } else if (compare->parsed()) {
      std::optional<int> override_seeds;
      if (seeds_set) override_seeds = seeds;
      flowgp::cmd_compare(config_path, out_path, override_seeds);
    }
  } catch (const flowgp::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const flowgp::ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const flowgp::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
