#include "flowgp/model_io.hpp"

#include <cmath>

#include "flowgp/dataset.hpp"

namespace flowgp {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a, const char* what) {
  if (!a.is_array())
    throw ConfigError(std::string("model field '") + what +
                      "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto& e = a[static_cast<std::size_t>(i)];
    if (!e.is_number())
      throw ConfigError(std::string("model field '") + what +
                        "' must hold numbers");
    v[i] = e.get<double>();
    if (!std::isfinite(v[i]))
      throw ConfigError(std::string("model field '") + what +
                        "' must hold finite numbers");
  }
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const char* what) {
  if (!rows.is_array() || rows.empty())
    throw ConfigError(std::string("model field '") + what +
                      "' must be a non-empty array of rows");
  const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  if (cols == 0)
    throw ConfigError(std::string("model field '") + what +
                      "' rows must be non-empty arrays");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != cols)
      throw ConfigError(std::string("model field '") + what +
                        "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number())
        throw ConfigError(std::string("model field '") + what +
                          "' must hold numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json inducing_to_json(const InducingGrid& grid) {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& sub : grid.subspaces()) {
    if (sub.is_grid()) {
      nlohmann::json axes = nlohmann::json::array();
      for (const auto& axis : sub.axes) axes.push_back(vector_to_json(axis));
      subs.push_back(nlohmann::json{{"axes", std::move(axes)}});
    } else {
      subs.push_back(nlohmann::json{{"points", matrix_to_json(sub.points)}});
    }
  }
  return subs;
}

InducingGrid inducing_from_json(const nlohmann::json& doc) {
  if (!doc.is_array() || doc.empty())
    throw ConfigError("model 'inducing' must be a non-empty array");
  std::vector<InducingGrid::Subspace> subs;
  for (const auto& sj : doc) {
    if (!sj.is_object())
      throw ConfigError("model 'inducing' entries must be objects");
    if (sj.contains("axes")) {
      if (!sj["axes"].is_array() || sj["axes"].empty())
        throw ConfigError("inducing 'axes' must be a non-empty array");
      std::vector<Eigen::VectorXd> axes;
      for (const auto& aj : sj["axes"])
        axes.push_back(vector_from_json(aj, "inducing.axes"));
      subs.push_back(InducingGrid::from_axes(std::move(axes)));
    } else if (sj.contains("points")) {
      subs.push_back(InducingGrid::from_points(
          matrix_from_json(sj["points"], "inducing.points")));
    } else {
      throw ConfigError("inducing entry needs 'axes' or 'points'");
    }
  }
  return InducingGrid(std::move(subs));
}

nlohmann::json ModelFile::to_json() const {
  nlohmann::json sod_json = nlohmann::json::array();
  for (const auto& rows : sod) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index idx : rows) a.push_back(idx);
    sod_json.push_back(std::move(a));
  }
  nlohmann::json doc{
      {"kind", kind},
      {"kernel", spec.to_json()},
      {"log_hyperparameters", vector_to_json(log_hyp)},
      {"objective", objective},
      {"seed", seed},
      {"dataset",
       nlohmann::json{{"descriptor", descriptor_path}, {"data", data_path}}},
      {"sod", std::move(sod_json)},
      {"tool_version", tool_version},
  };
  doc["inducing"] = inducing ? inducing_to_json(*inducing) : nlohmann::json();
  return doc;
}

ModelFile ModelFile::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("model file must be a JSON object");
  std::string kind = doc.value("kind", std::string());
  if (kind != "egp" && kind != "esgp")
    throw ConfigError("model 'kind' must be egp or esgp");
  if (!doc.contains("kernel"))
    throw ConfigError("model file needs a 'kernel' spec");
  KernelSpec spec = KernelSpec::from_json(doc["kernel"]);
  Eigen::VectorXd log_hyp = vector_from_json(
      doc.value("log_hyperparameters", nlohmann::json::array()),
      "log_hyperparameters");
  if (log_hyp.size() != spec.slots())
    throw ConfigError("model stores " + std::to_string(log_hyp.size()) +
                      " hyperparameters, kernel needs " +
                      std::to_string(spec.slots()));
  if (!doc.contains("objective") || !doc["objective"].is_number())
    throw ConfigError("model file needs a numeric 'objective'");
  const double objective = doc["objective"].get<double>();
  if (!doc.contains("seed") || !doc["seed"].is_number_integer())
    throw ConfigError("model file needs an integer 'seed'");
  const auto seed = doc["seed"].get<std::uint64_t>();
  if (!doc.contains("dataset") || !doc["dataset"].is_object())
    throw ConfigError("model file needs a 'dataset' object");
  std::string descriptor_path = doc["dataset"].value("descriptor", std::string());
  std::string data_path = doc["dataset"].value("data", std::string());
  if (descriptor_path.empty() || data_path.empty())
    throw ConfigError("model 'dataset' needs 'descriptor' and 'data' paths");
  std::vector<std::vector<Eigen::Index>> sod;
  if (doc.contains("sod")) {
    if (!doc["sod"].is_array())
      throw ConfigError("model 'sod' must be an array");
    for (const auto& rows : doc["sod"]) {
      if (!rows.is_array()) throw ConfigError("model 'sod' entries must be arrays");
      std::vector<Eigen::Index> keep;
      for (const auto& idx : rows) {
        if (!idx.is_number_integer() || idx.get<long long>() < 0)
          throw ConfigError("model 'sod' indices must be non-negative integers");
        keep.push_back(idx.get<Eigen::Index>());
      }
      sod.push_back(std::move(keep));
    }
  }
  std::optional<InducingGrid> inducing;
  if (doc.contains("inducing") && !doc["inducing"].is_null())
    inducing = inducing_from_json(doc["inducing"]);
  if (kind == "esgp" && !inducing)
    throw ConfigError("esgp model file needs an 'inducing' layout");
  if (kind == "egp" && inducing)
    throw ConfigError("egp model file cannot carry an 'inducing' layout");
  return ModelFile{std::move(kind),
                   std::move(spec),
                   std::move(log_hyp),
                   objective,
                   seed,
                   std::move(descriptor_path),
                   std::move(data_path),
                   std::move(sod),
                   std::move(inducing),
                   doc.value("tool_version", std::string())};
}

void save_model(const ModelFile& m, const std::string& path) {
  write_json_file(path, m.to_json());
}

ModelFile load_model(const std::string& path) {
  return ModelFile::from_json(load_json_file(path));
}

void save_trace_csv(const MhTrace& trace, const std::string& path) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.objective.size() + 1);
  rows.push_back({0.0, trace.initial_objective, 1.0});
  for (std::size_t k = 0; k < trace.objective.size(); ++k)
    rows.push_back({static_cast<double>(k + 1), trace.objective[k],
                    static_cast<double>(trace.accepted[k])});
  write_csv(path, {"sample", "objective", "accepted"}, rows);
}

void save_epochs_csv(const MhTrace& trace, int samples_per_epoch,
                     const std::string& path) {
  std::vector<std::vector<double>> rows;
  for (std::size_t e = 0; e < trace.epoch_seconds.size(); ++e)
    rows.push_back({static_cast<double>(e + 1), trace.epoch_seconds[e],
                    static_cast<double>(samples_per_epoch)});
  write_csv(path, {"epoch", "seconds", "samples"}, rows);
}

}  // namespace flowgp
