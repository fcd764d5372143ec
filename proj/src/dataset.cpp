#include "flowgp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace flowgp {

namespace {

std::string num_str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trimmed(line.substr(start)));
      break;
    }
    out.push_back(trimmed(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string tuple_str(const std::vector<double>& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ", ";
    s += num_str(t[i]);
  }
  return s + ")";
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::require_column(const std::string& name,
                             const std::string& context) const {
  int c = column(name);
  if (c < 0)
    throw ConfigError(context + ": column '" + name + "' not found in header");
  return c;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (table.header.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].empty())
          throw ConfigError(path + ": empty header name in column " +
                            std::to_string(i + 1));
      }
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size())
      throw ConfigError(path + " line " + std::to_string(lineno) + ": got " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(table.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string& cell = cells[i];
      double v = 0.0;
      auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ConfigError(path + " line " + std::to_string(lineno) +
                          ": cannot parse '" + cell + "' in column '" +
                          table.header[i] + "'");
      row[i] = v;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty())
    throw ConfigError(path + ": missing header row");
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write CSV file '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ShapeError("CSV row width " + std::to_string(row.size()) +
                       " does not match header width " +
                       std::to_string(header.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << num_str(row[i]);
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write failed for CSV file '" + path + "'");
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open JSON file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write JSON file '" + path + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw ConfigError("write failed for JSON file '" + path + "'");
}

DatasetDescriptor DatasetDescriptor::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("dataset descriptor must be an object");
  DatasetDescriptor d;
  d.name = doc.value("name", std::string());
  if (!doc.contains("observation") || !doc["observation"].is_string() ||
      doc["observation"].get<std::string>().empty())
    throw ConfigError("dataset descriptor needs a non-empty 'observation' name");
  d.observation = doc["observation"].get<std::string>();
  if (!doc.contains("subspaces") || !doc["subspaces"].is_array() ||
      doc["subspaces"].empty())
    throw ConfigError("dataset descriptor needs a non-empty 'subspaces' array");
  std::set<std::string> seen_dims;
  std::set<std::string> seen_names;
  for (const auto& sj : doc["subspaces"]) {
    if (!sj.is_object())
      throw ConfigError("dataset descriptor subspace entries must be objects");
    SubspaceDescriptor s;
    s.name = sj.value("name", std::string());
    if (s.name.empty())
      throw ConfigError("dataset descriptor subspace needs a 'name'");
    if (!seen_names.insert(s.name).second)
      throw ConfigError("duplicate subspace name '" + s.name + "'");
    if (!sj.contains("dims") || !sj["dims"].is_array() || sj["dims"].empty())
      throw ConfigError("subspace '" + s.name +
                        "' needs a non-empty 'dims' array");
    for (const auto& dj : sj["dims"]) {
      if (!dj.is_string() || dj.get<std::string>().empty())
        throw ConfigError("subspace '" + s.name +
                          "' has a non-string dimension name");
      std::string dim = dj.get<std::string>();
      if (!seen_dims.insert(dim).second)
        throw ConfigError("dimension name '" + dim +
                          "' appears in more than one subspace");
      s.dims.push_back(dim);
    }
    s.grid = sj.value("grid", false);
    if (sj.contains("count")) {
      if (!sj["count"].is_number_integer() || sj["count"].get<long long>() < 1)
        throw ConfigError("subspace '" + s.name +
                          "' has a non-positive 'count'");
      s.count = sj["count"].get<Eigen::Index>();
    }
    d.subspaces.push_back(std::move(s));
  }
  if (seen_dims.count(d.observation))
    throw ConfigError("observation column '" + d.observation +
                      "' collides with a coordinate dimension");
  return d;
}

DatasetDescriptor DatasetDescriptor::from_file(const std::string& path) {
  return from_json(load_json_file(path));
}

nlohmann::json DatasetDescriptor::to_json() const {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : subspaces) {
    nlohmann::json sj{{"name", s.name}, {"dims", s.dims}, {"grid", s.grid}};
    if (s.count) sj["count"] = *s.count;
    subs.push_back(std::move(sj));
  }
  return nlohmann::json{
      {"name", name}, {"observation", observation}, {"subspaces", subs}};
}

std::vector<std::string> DatasetDescriptor::dim_names() const {
  std::vector<std::string> out;
  for (const auto& s : subspaces)
    out.insert(out.end(), s.dims.begin(), s.dims.end());
  return out;
}

int DatasetDescriptor::subspace_index(const std::string& n) const {
  for (std::size_t i = 0; i < subspaces.size(); ++i)
    if (subspaces[i].name == n) return static_cast<int>(i);
  return -1;
}

Dataset load_dataset(const std::string& descriptor_path,
                     const std::string& data_path) {
  DatasetDescriptor desc = DatasetDescriptor::from_file(descriptor_path);
  CsvTable table = read_csv(data_path);

  const std::size_t s = desc.subspaces.size();
  std::vector<std::vector<int>> cols(s);
  for (std::size_t i = 0; i < s; ++i)
    for (const auto& dim : desc.subspaces[i].dims)
      cols[i].push_back(table.require_column(dim, data_path));
  const int obs_col = table.require_column(desc.observation, data_path);

  // First pass: the distinct coordinate tuples of every subspace, ordered
  // lexicographically.  This defines the canonical composite ordering no
  // matter how the file was written.
  std::vector<std::map<std::vector<double>, Eigen::Index>> uniq(s);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (double v : row)
      if (!std::isfinite(v))
        throw ConfigError(data_path + " data row " + std::to_string(r + 1) +
                          ": non-finite value");
    for (std::size_t i = 0; i < s; ++i) {
      std::vector<double> tuple(cols[i].size());
      for (std::size_t j = 0; j < cols[i].size(); ++j)
        tuple[j] = row[cols[i][j]];
      uniq[i].emplace(std::move(tuple), 0);
    }
  }

  std::vector<Eigen::MatrixXd> mats(s);
  std::vector<Eigen::Index> sizes(s);
  for (std::size_t i = 0; i < s; ++i) {
    const auto& su = desc.subspaces[i];
    sizes[i] = static_cast<Eigen::Index>(uniq[i].size());
    if (su.count && *su.count != sizes[i])
      throw ConfigError(data_path + ": subspace '" + su.name + "' has " +
                        std::to_string(sizes[i]) + " distinct points, declared " +
                        std::to_string(*su.count));
    mats[i].resize(sizes[i], static_cast<Eigen::Index>(su.dims.size()));
    Eigen::Index next = 0;
    for (auto& [tuple, idx] : uniq[i]) {
      idx = next;
      for (std::size_t j = 0; j < tuple.size(); ++j) mats[i](next, j) = tuple[j];
      ++next;
    }
    if (su.grid && su.dims.size() > 1) {
      // With distinct tuples, per-dimension unique counts multiplying out to
      // the point count forces a full grid.
      Eigen::Index prod = 1;
      for (std::size_t j = 0; j < su.dims.size(); ++j) {
        std::set<double> vals;
        for (Eigen::Index r = 0; r < sizes[i]; ++r) vals.insert(mats[i](r, j));
        prod *= static_cast<Eigen::Index>(vals.size());
      }
      if (prod != sizes[i])
        throw ConfigError(data_path + ": subspace '" + su.name +
                          "' is declared as a grid but its points do not form "
                          "one");
    }
  }

  Eigen::Index total = 1;
  for (std::size_t i = 0; i < s; ++i) total *= sizes[i];
  std::vector<Eigen::Index> strides(s, 1);
  for (std::size_t i = s; i-- > 1;) strides[i - 1] = strides[i] * sizes[i];

  // Second pass: place every observation at its composite index and demand
  // that each one is hit exactly once.
  Eigen::VectorXd y(total);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(total), 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < s; ++i) {
      std::vector<double> tuple(cols[i].size());
      for (std::size_t j = 0; j < cols[i].size(); ++j)
        tuple[j] = row[cols[i][j]];
      k += uniq[i].at(tuple) * strides[i];
    }
    if (seen[static_cast<std::size_t>(k)])
      throw ConfigError(data_path + " data row " + std::to_string(r + 1) +
                        ": duplicate composite point");
    seen[static_cast<std::size_t>(k)] = 1;
    y[k] = row[obs_col];
  }
  for (Eigen::Index k = 0; k < total; ++k) {
    if (seen[static_cast<std::size_t>(k)]) continue;
    std::string msg = data_path + ": incomplete product, no row for";
    Eigen::Index rem = k;
    for (std::size_t i = 0; i < s; ++i) {
      Eigen::Index idx = rem / strides[i];
      rem -= idx * strides[i];
      std::vector<double> tuple(mats[i].cols());
      for (Eigen::Index j = 0; j < mats[i].cols(); ++j)
        tuple[static_cast<std::size_t>(j)] = mats[i](idx, j);
      msg += std::string(i ? ", " : " ") + desc.subspaces[i].name + "=" +
             tuple_str(tuple);
    }
    throw ConfigError(msg);
  }

  ProductInputs inputs(std::move(mats));
  StructuredObservations obs(std::move(y), inputs);
  return Dataset{std::move(desc), std::move(inputs), std::move(obs)};
}

std::pair<ProductInputs, StructuredObservations> subset_product(
    const ProductInputs& inputs, const StructuredObservations& obs,
    const std::vector<std::vector<Eigen::Index>>& keep) {
  const auto& subs = inputs.subspaces();
  if (keep.size() != subs.size())
    throw ShapeError("subset needs one index list per subspace, got " +
                     std::to_string(keep.size()) + " for " +
                     std::to_string(subs.size()));
  std::vector<Eigen::MatrixXd> mats(subs.size());
  std::vector<std::vector<Eigen::Index>> rows(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const Eigen::Index n = subs[i].rows();
    if (keep[i].empty()) {
      rows[i].resize(static_cast<std::size_t>(n));
      for (Eigen::Index r = 0; r < n; ++r)
        rows[i][static_cast<std::size_t>(r)] = r;
      mats[i] = subs[i];
      continue;
    }
    Eigen::Index prev = -1;
    for (Eigen::Index idx : keep[i]) {
      if (idx < 0 || idx >= n)
        throw ShapeError("subset index " + std::to_string(idx) +
                         " out of range for subspace " + std::to_string(i));
      if (idx <= prev)
        throw ShapeError("subset indices for subspace " + std::to_string(i) +
                         " must be strictly increasing");
      prev = idx;
    }
    rows[i] = keep[i];
    mats[i].resize(static_cast<Eigen::Index>(keep[i].size()), subs[i].cols());
    for (std::size_t r = 0; r < keep[i].size(); ++r)
      mats[i].row(static_cast<Eigen::Index>(r)) = subs[i].row(keep[i][r]);
  }

  ProductInputs out(std::move(mats));
  const std::vector<Eigen::Index> new_strides = out.strides();
  const std::vector<Eigen::Index> old_strides = inputs.strides();
  Eigen::VectorXd y(out.total_points());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    Eigen::Index rem = k;
    Eigen::Index old_k = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Eigen::Index idx = rem / new_strides[i];
      rem -= idx * new_strides[i];
      old_k += rows[i][static_cast<std::size_t>(idx)] * old_strides[i];
    }
    y[k] = obs.y[old_k];
  }
  StructuredObservations sub_obs(std::move(y), out);
  return {std::move(out), std::move(sub_obs)};
}

SodMethod sod_method_from_string(const std::string& s) {
  if (s == "random-permutation" || s == "rp") return SodMethod::kRandomPermutation;
  if (s == "latin-hypercube-nearest" || s == "lhs")
    return SodMethod::kLhsNearest;
  throw ConfigError("unknown subset method '" + s +
                    "' (use random-permutation or latin-hypercube-nearest)");
}

std::string to_string(SodMethod m) {
  return m == SodMethod::kRandomPermutation ? "random-permutation"
                                            : "latin-hypercube-nearest";
}

std::vector<Eigen::Index> select_sod(
    const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index count,
    SodMethod method, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw ShapeError("subset selection needs a non-empty point set");
  if (!points.allFinite())
    throw ShapeError("subset selection needs finite points");
  if (count < 1 || count > n)
    throw ConfigError("subset count " + std::to_string(count) +
                      " out of range [1, " + std::to_string(n) + "]");
  Rng rng(seed);
  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(count));
  if (method == SodMethod::kRandomPermutation) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    chosen.assign(perm.begin(), perm.begin() + count);
  } else {
    const Eigen::MatrixXd bounds = point_bounds(points);
    const Eigen::MatrixXd sample = lhs_sample(bounds, count, rng);
    std::vector<std::uint8_t> claimed(static_cast<std::size_t>(n), 0);
    for (Eigen::Index j = 0; j < count; ++j) {
      Eigen::Index best = -1;
      double best_d2 = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (claimed[static_cast<std::size_t>(r)]) continue;
        double d2 = (points.row(r) - sample.row(j)).squaredNorm();
        if (best < 0 || d2 < best_d2) {
          best = r;
          best_d2 = d2;
        }
      }
      claimed[static_cast<std::size_t>(best)] = 1;
      chosen.push_back(best);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Eigen::MatrixXd lhs_sample(const Eigen::Ref<const Eigen::MatrixXd>& bounds,
                           Eigen::Index count, Rng& rng) {
  if (bounds.cols() != 2 || bounds.rows() < 1)
    throw ShapeError("LHS bounds must be d x 2");
  if (count < 1) throw ConfigError("LHS sample count must be positive");
  for (Eigen::Index d = 0; d < bounds.rows(); ++d)
    if (!std::isfinite(bounds(d, 0)) || !std::isfinite(bounds(d, 1)) ||
        bounds(d, 0) > bounds(d, 1))
      throw ConfigError("LHS bounds for dimension " + std::to_string(d) +
                        " are not a finite interval");
  Eigen::MatrixXd out(count, bounds.rows());
  std::vector<Eigen::Index> bins(static_cast<std::size_t>(count));
  for (Eigen::Index d = 0; d < bounds.rows(); ++d) {
    for (Eigen::Index k = 0; k < count; ++k)
      bins[static_cast<std::size_t>(k)] = k;
    rng.shuffle(bins);
    const double lo = bounds(d, 0);
    const double width = (bounds(d, 1) - lo) / static_cast<double>(count);
    for (Eigen::Index k = 0; k < count; ++k)
      out(k, d) = lo + (static_cast<double>(bins[static_cast<std::size_t>(k)]) +
                        rng.uniform()) *
                           width;
  }
  return out;
}

AxisPlacement placement_from_string(const std::string& s) {
  if (s == "uniform") return AxisPlacement::kUniform;
  if (s == "random") return AxisPlacement::kRandom;
  if (s == "lhs") return AxisPlacement::kLhs;
  throw ConfigError("unknown placement '" + s +
                    "' (use uniform, random, or lhs)");
}

std::string to_string(AxisPlacement p) {
  switch (p) {
    case AxisPlacement::kUniform:
      return "uniform";
    case AxisPlacement::kRandom:
      return "random";
    default:
      return "lhs";
  }
}

Eigen::VectorXd place_axis(double lo, double hi, Eigen::Index count,
                           AxisPlacement placement, Rng& rng) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo >= hi)
    throw ConfigError("axis bounds [" + num_str(lo) + ", " + num_str(hi) +
                      "] are degenerate");
  if (count < 1) throw ConfigError("axis knot count must be positive");
  Eigen::VectorXd axis(count);
  switch (placement) {
    case AxisPlacement::kUniform:
      if (count == 1)
        axis[0] = 0.5 * (lo + hi);
      else
        axis = Eigen::VectorXd::LinSpaced(count, lo, hi);
      break;
    case AxisPlacement::kRandom: {
      // Ties are possible in principle; redraw until the sorted knots are
      // strictly increasing.
      for (int attempt = 0;; ++attempt) {
        for (Eigen::Index k = 0; k < count; ++k)
          axis[k] = lo + (hi - lo) * rng.uniform();
        std::sort(axis.data(), axis.data() + count);
        bool strict = true;
        for (Eigen::Index k = 1; k < count; ++k)
          if (axis[k] <= axis[k - 1]) strict = false;
        if (strict) break;
        if (attempt >= 100)
          throw NumericError("could not draw distinct random axis knots");
      }
      break;
    }
    case AxisPlacement::kLhs: {
      const double width = (hi - lo) / static_cast<double>(count);
      for (Eigen::Index k = 0; k < count; ++k)
        axis[k] = lo + (static_cast<double>(k) + rng.uniform()) * width;
      break;
    }
  }
  return axis;
}

InducingGrid::Subspace build_inducing(
    const Eigen::Ref<const Eigen::MatrixXd>& bounds,
    const std::vector<Eigen::Index>& resolution, AxisPlacement placement,
    std::uint64_t seed) {
  if (bounds.cols() != 2 || bounds.rows() < 1)
    throw ShapeError("inducing bounds must be d x 2");
  if (static_cast<std::size_t>(bounds.rows()) != resolution.size())
    throw ShapeError("inducing resolution lists " +
                     std::to_string(resolution.size()) + " axes for " +
                     std::to_string(bounds.rows()) + " bounded dimensions");
  Rng root(seed);
  std::vector<Eigen::VectorXd> axes;
  for (Eigen::Index d = 0; d < bounds.rows(); ++d) {
    Rng axis_rng = root.stream(static_cast<std::uint64_t>(d));
    axes.push_back(place_axis(bounds(d, 0), bounds(d, 1),
                              resolution[static_cast<std::size_t>(d)],
                              placement, axis_rng));
  }
  return InducingGrid::from_axes(std::move(axes));
}

Eigen::MatrixXd point_bounds(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (points.rows() < 1) throw ShapeError("bounds need a non-empty point set");
  Eigen::MatrixXd bounds(points.cols(), 2);
  bounds.col(0) = points.colwise().minCoeff().transpose();
  bounds.col(1) = points.colwise().maxCoeff().transpose();
  return bounds;
}

}  // namespace flowgp
