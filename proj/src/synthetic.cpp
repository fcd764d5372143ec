#include "flowgp/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "flowgp/dataset.hpp"
#include "flowgp/rng.hpp"

namespace flowgp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double get_number(const nlohmann::json& cfg, const char* key, double fallback,
                  bool required = false) {
  if (!cfg.contains(key)) {
    if (required)
      throw ConfigError(std::string("synthetic config needs '") + key + "'");
    return fallback;
  }
  if (!cfg[key].is_number())
    throw ConfigError(std::string("synthetic config field '") + key +
                      "' must be a number");
  double v = cfg[key].get<double>();
  if (!std::isfinite(v))
    throw ConfigError(std::string("synthetic config field '") + key +
                      "' must be finite");
  return v;
}

Eigen::VectorXd axis_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("axis '" + name + "' must be [lo, hi, count]");
  double lo = j[0].get<double>();
  double hi = j[1].get<double>();
  if (!j[2].is_number_integer() || j[2].get<long long>() < 2)
    throw ConfigError("axis '" + name + "' needs an integer count >= 2");
  Eigen::Index count = j[2].get<Eigen::Index>();
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo >= hi)
    throw ConfigError("axis '" + name + "' bounds are degenerate");
  return Eigen::VectorXd::LinSpaced(count, lo, hi);
}

std::string join(const std::filesystem::path& dir, const char* file) {
  return (dir / file).string();
}

struct WaveParams {
  double amplitude;
  double decay_length;
  double wavelength;
  double speed;

  double eval(double y, double x, double t) const {
    return amplitude * std::exp(-y * y / decay_length) *
           std::sin(2.0 * kPi * (x - speed * t) / wavelength);
  }
};

SyntheticSummary generate_wave(const nlohmann::json& cfg,
                               const std::filesystem::path& dir) {
  WaveParams p{};
  p.amplitude = get_number(cfg, "amplitude", 1.0);
  p.decay_length = get_number(cfg, "decay_length", 2e-3);
  p.wavelength = get_number(cfg, "wavelength", 0.1);
  p.speed = get_number(cfg, "speed", 0.024);
  if (p.decay_length <= 0.0 || p.wavelength <= 0.0)
    throw ConfigError("decay_length and wavelength must be positive");
  const double noise = get_number(cfg, "noise_sigma", 0.0);
  if (noise < 0.0) throw ConfigError("noise_sigma must be non-negative");
  const auto seed = cfg.value("seed", std::uint64_t{0});

  if (!cfg.contains("grid") || !cfg["grid"].is_object())
    throw ConfigError("traveling-wave config needs a 'grid' object");
  const auto& grid = cfg["grid"];
  Eigen::VectorXd ys = axis_from_json(grid.at("y"), "y");
  Eigen::VectorXd xs = axis_from_json(grid.at("x"), "x");
  Eigen::VectorXd ts = axis_from_json(grid.at("t"), "t");

  DatasetDescriptor desc;
  desc.name = cfg.value("name", std::string("traveling-wave"));
  desc.observation = "u";
  desc.subspaces = {{"y", {"y"}, false, ys.size()},
                    {"x", {"x"}, false, xs.size()},
                    {"t", {"t"}, false, ts.size()}};

  Rng rng(seed);
  std::vector<std::vector<double>> train;
  std::vector<std::vector<double>> truth;
  train.reserve(static_cast<std::size_t>(ys.size() * xs.size() * ts.size()));
  for (Eigen::Index iy = 0; iy < ys.size(); ++iy)
    for (Eigen::Index ix = 0; ix < xs.size(); ++ix)
      for (Eigen::Index it = 0; it < ts.size(); ++it) {
        double clean = p.eval(ys[iy], xs[ix], ts[it]);
        truth.push_back({ys[iy], xs[ix], ts[it], clean});
        train.push_back({ys[iy], xs[ix], ts[it], clean + noise * rng.normal()});
      }

  SyntheticSummary summary;
  summary.out_dir = dir.string();
  summary.train_rows = static_cast<Eigen::Index>(train.size());
  write_json_file(join(dir, "descriptor.json"), desc.to_json());
  write_csv(join(dir, "train.csv"), {"y", "x", "t", "u"}, train);
  write_csv(join(dir, "train_truth.csv"), {"y", "x", "t", "u"}, truth);
  summary.files = {join(dir, "descriptor.json"), join(dir, "train.csv"),
                   join(dir, "train_truth.csv")};

  if (cfg.contains("test")) {
    if (!cfg["test"].is_object() || !cfg["test"].contains("grid"))
      throw ConfigError("traveling-wave 'test' block needs a 'grid' object");
    const auto& tgrid = cfg["test"]["grid"];
    Eigen::VectorXd tys = axis_from_json(tgrid.at("y"), "test y");
    Eigen::VectorXd txs = axis_from_json(tgrid.at("x"), "test x");
    Eigen::VectorXd tts = axis_from_json(tgrid.at("t"), "test t");
    std::vector<std::vector<double>> points;
    std::vector<std::vector<double>> tt;
    for (Eigen::Index iy = 0; iy < tys.size(); ++iy)
      for (Eigen::Index ix = 0; ix < txs.size(); ++ix)
        for (Eigen::Index it = 0; it < tts.size(); ++it) {
          double clean = p.eval(tys[iy], txs[ix], tts[it]);
          points.push_back({tys[iy], txs[ix], tts[it]});
          tt.push_back({tys[iy], txs[ix], tts[it], clean});
        }
    summary.test_rows = static_cast<Eigen::Index>(points.size());
    write_csv(join(dir, "test_points.csv"), {"y", "x", "t"}, points);
    write_csv(join(dir, "test_truth.csv"), {"y", "x", "t", "u"}, tt);
    summary.files.push_back(join(dir, "test_points.csv"));
    summary.files.push_back(join(dir, "test_truth.csv"));
  }
  return summary;
}

double cavity_field(double x, double y, double wall) {
  double sx = std::sin(kPi * x);
  return wall * sx * sx * std::sin(2.0 * kPi * y);
}

Eigen::MatrixXd cavity_cloud(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd pts(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  return pts;
}

std::vector<double> velocities_from_json(const nlohmann::json& j,
                                         const char* context) {
  if (!j.is_array() || j.empty())
    throw ConfigError(std::string(context) +
                      " needs a non-empty 'velocities' array");
  std::vector<double> out;
  std::set<double> seen;
  for (const auto& v : j) {
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ConfigError(std::string(context) + " velocities must be finite");
    double val = v.get<double>();
    if (!seen.insert(val).second)
      throw ConfigError(std::string(context) + " velocities must be distinct");
    out.push_back(val);
  }
  return out;
}

SyntheticSummary generate_cavity(const nlohmann::json& cfg,
                                 const std::filesystem::path& dir) {
  const double noise = get_number(cfg, "noise_sigma", 0.0);
  if (noise < 0.0) throw ConfigError("noise_sigma must be non-negative");
  const auto seed = cfg.value("seed", std::uint64_t{0});
  if (!cfg.contains("n_spatial") || !cfg["n_spatial"].is_number_integer() ||
      cfg["n_spatial"].get<long long>() < 1)
    throw ConfigError("cavity config needs a positive integer 'n_spatial'");
  const Eigen::Index n_spatial = cfg["n_spatial"].get<Eigen::Index>();
  std::vector<double> walls =
      velocities_from_json(cfg.value("velocities", nlohmann::json::array()),
                           "cavity config");

  DatasetDescriptor desc;
  desc.name = cfg.value("name", std::string("cavity"));
  desc.observation = "u";
  desc.subspaces = {{"space", {"x", "y"}, false, n_spatial},
                    {"u_wall",
                     {"u_wall"},
                     false,
                     static_cast<Eigen::Index>(walls.size())}};

  Rng rng(seed);
  Eigen::MatrixXd pts = cavity_cloud(n_spatial, rng);
  std::vector<std::vector<double>> train;
  std::vector<std::vector<double>> truth;
  train.reserve(static_cast<std::size_t>(n_spatial) * walls.size());
  for (Eigen::Index i = 0; i < n_spatial; ++i)
    for (double wall : walls) {
      double clean = cavity_field(pts(i, 0), pts(i, 1), wall);
      truth.push_back({pts(i, 0), pts(i, 1), wall, clean});
      train.push_back(
          {pts(i, 0), pts(i, 1), wall, clean + noise * rng.normal()});
    }

  SyntheticSummary summary;
  summary.out_dir = dir.string();
  summary.train_rows = static_cast<Eigen::Index>(train.size());
  write_json_file(join(dir, "descriptor.json"), desc.to_json());
  write_csv(join(dir, "train.csv"), {"x", "y", "u_wall", "u"}, train);
  write_csv(join(dir, "train_truth.csv"), {"x", "y", "u_wall", "u"}, truth);
  summary.files = {join(dir, "descriptor.json"), join(dir, "train.csv"),
                   join(dir, "train_truth.csv")};

  if (cfg.contains("test")) {
    const auto& t = cfg["test"];
    if (!t.is_object()) throw ConfigError("cavity 'test' block must be an object");
    if (!t.contains("n_spatial") || !t["n_spatial"].is_number_integer() ||
        t["n_spatial"].get<long long>() < 1)
      throw ConfigError("cavity 'test' block needs a positive 'n_spatial'");
    Eigen::Index n_test = t["n_spatial"].get<Eigen::Index>();
    std::vector<double> test_walls = velocities_from_json(
        t.value("velocities", nlohmann::json::array()), "cavity test block");
    Rng test_rng(t.value("seed", seed + 1));
    Eigen::MatrixXd tpts = cavity_cloud(n_test, test_rng);
    std::vector<std::vector<double>> points;
    std::vector<std::vector<double>> tt;
    for (Eigen::Index i = 0; i < n_test; ++i)
      for (double wall : test_walls) {
        double clean = cavity_field(tpts(i, 0), tpts(i, 1), wall);
        points.push_back({tpts(i, 0), tpts(i, 1), wall});
        tt.push_back({tpts(i, 0), tpts(i, 1), wall, clean});
      }
    summary.test_rows = static_cast<Eigen::Index>(points.size());
    write_csv(join(dir, "test_points.csv"), {"x", "y", "u_wall"}, points);
    write_csv(join(dir, "test_truth.csv"), {"x", "y", "u_wall", "u"}, tt);
    summary.files.push_back(join(dir, "test_points.csv"));
    summary.files.push_back(join(dir, "test_truth.csv"));
  }
  return summary;
}

}  // namespace

SyntheticSummary generate_synthetic(const nlohmann::json& config,
                                    const std::string& out_dir) {
  if (!config.is_object())
    throw ConfigError("synthetic config must be a JSON object");
  if (!config.contains("generator") || !config["generator"].is_string())
    throw ConfigError("synthetic config needs a 'generator' name");
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + out_dir +
                      "': " + ec.message());
  const std::string gen = config["generator"].get<std::string>();
  if (gen == "traveling-wave") return generate_wave(config, dir);
  if (gen == "cavity") return generate_cavity(config, dir);
  throw ConfigError("unknown generator '" + gen +
                    "' (use traveling-wave or cavity)");
}

}  // namespace flowgp
