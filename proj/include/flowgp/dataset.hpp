#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgp/common.hpp"
#include "flowgp/egp.hpp"
#include "flowgp/esgp.hpp"
#include "flowgp/rng.hpp"

namespace flowgp {

// Minimal CSV support for the long data format: a mandatory header row and
// numeric cells everywhere below it.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Column index for a header name, -1 when absent.
  int column(const std::string& name) const;
  // Same, but throws a ConfigError naming the caller's context when absent.
  int require_column(const std::string& name, const std::string& context) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

// One factor of the input product: a named subspace whose points live in the
// named data columns.  grid marks subspaces whose points must form a full
// per-dimension grid; count, when present, pins the expected point count.
struct SubspaceDescriptor {
  std::string name;
  std::vector<std::string> dims;
  bool grid = false;
  std::optional<Eigen::Index> count;
};

struct DatasetDescriptor {
  std::string name;
  std::string observation;
  std::vector<SubspaceDescriptor> subspaces;

  static DatasetDescriptor from_json(const nlohmann::json& doc);
  static DatasetDescriptor from_file(const std::string& path);
  nlohmann::json to_json() const;

  // All coordinate names, subspace by subspace; this fixes the column order
  // every kernel spec and query matrix uses.
  std::vector<std::string> dim_names() const;
  int subspace_index(const std::string& name) const;
};

struct Dataset {
  DatasetDescriptor descriptor;
  ProductInputs inputs;
  StructuredObservations obs;
};

// Read a long-format CSV against its descriptor.  Row order in the file is
// irrelevant: each subspace's distinct coordinate tuples are collected and
// sorted lexicographically, and every cross-subspace combination must appear
// exactly once.  Missing or duplicated combinations are reported with the
// offending coordinates.
Dataset load_dataset(const std::string& descriptor_path,
                     const std::string& data_path);

// Restrict a product dataset to the given per-subspace row indices (an empty
// index list keeps that subspace whole).  Indices must be strictly
// increasing and in range; observations are re-gathered in the subset's own
// canonical ordering.
std::pair<ProductInputs, StructuredObservations> subset_product(
    const ProductInputs& inputs, const StructuredObservations& obs,
    const std::vector<std::vector<Eigen::Index>>& keep);

enum class SodMethod { kRandomPermutation, kLhsNearest };
SodMethod sod_method_from_string(const std::string& s);
std::string to_string(SodMethod m);

// Pick count of the rows of points, returned as strictly increasing indices.
// Random-permutation draws a uniform subset; LHS-nearest draws a Latin
// hypercube sample over the bounding box and maps each sample to its nearest
// not-yet-claimed row (ties to the lowest index).
std::vector<Eigen::Index> select_sod(
    const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index count,
    SodMethod method, std::uint64_t seed);

// Latin hypercube sample of count points: along every dimension the samples
// occupy count distinct equal-width bins of [bounds(d,0), bounds(d,1)], one
// point per bin, at a uniform position inside it.
Eigen::MatrixXd lhs_sample(const Eigen::Ref<const Eigen::MatrixXd>& bounds,
                           Eigen::Index count, Rng& rng);

enum class AxisPlacement { kUniform, kRandom, kLhs };
AxisPlacement placement_from_string(const std::string& s);
std::string to_string(AxisPlacement p);

// One strictly increasing inducing axis with count knots over [lo, hi].
// Uniform spacing includes both endpoints (a single knot sits at the
// midpoint); random and lhs knots are sampled then sorted.
Eigen::VectorXd place_axis(double lo, double hi, Eigen::Index count,
                           AxisPlacement placement, Rng& rng);

// Inner-grid inducing subspace: one placed axis per input dimension.
// bounds is d x 2 with bounds(j,0) < bounds(j,1); resolution gives the knot
// count per axis.
InducingGrid::Subspace build_inducing(
    const Eigen::Ref<const Eigen::MatrixXd>& bounds,
    const std::vector<Eigen::Index>& resolution, AxisPlacement placement,
    std::uint64_t seed);

// Per-dimension [min, max] over the rows of points, as a d x 2 matrix.
Eigen::MatrixXd point_bounds(const Eigen::Ref<const Eigen::MatrixXd>& points);

}  // namespace flowgp
