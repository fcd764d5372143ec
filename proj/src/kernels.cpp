#include "flowgp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace flowgp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<int> leaf_dims(const nlohmann::json& ld, const std::string& type) {
  std::vector<int> dims;
  if (ld.contains("dims")) {
    if (!ld["dims"].is_array() || ld["dims"].empty()) {
      throw ConfigError("kernel spec: '" + type +
                        "' leaf needs a non-empty dims array");
    }
    for (const auto& d : ld["dims"]) {
      if (!d.is_number_integer() || d.get<int>() < 0) {
        throw ConfigError("kernel spec: dims entries must be non-negative integers");
      }
      dims.push_back(d.get<int>());
    }
  } else if (ld.contains("dim")) {
    if (!ld["dim"].is_number_integer() || ld["dim"].get<int>() < 0) {
      throw ConfigError("kernel spec: dim must be a non-negative integer");
    }
    dims.push_back(ld["dim"].get<int>());
  } else {
    throw ConfigError("kernel spec: '" + type + "' leaf needs dim or dims");
  }
  return dims;
}

}  // namespace

KernelSpec KernelSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("kernel spec: expected a JSON object");
  }
  std::vector<nlohmann::json> leaf_docs;
  const std::string type = doc.value("type", "");
  if (type == "product") {
    if (!doc.contains("factors") || !doc["factors"].is_array() ||
        doc["factors"].empty()) {
      throw ConfigError("kernel spec: product needs a non-empty factors array");
    }
    for (const auto& f : doc["factors"]) leaf_docs.push_back(f);
  } else {
    leaf_docs.push_back(doc);
  }

  KernelSpec spec;
  int slot = 1;  // slot 0 is the signal amplitude
  std::vector<int> claimed;
  for (const auto& ld : leaf_docs) {
    if (!ld.is_object()) {
      throw ConfigError("kernel spec: leaf entries must be JSON objects");
    }
    const std::string t = ld.value("type", "");
    if (t == "se") {
      // A multi-column squared exponential is the product of one-column
      // ones, so it is stored expanded with one length-scale per column.
      for (int d : leaf_dims(ld, t)) {
        spec.leaves_.push_back({LeafKind::kSquaredExponential, d, slot});
        slot += 1;
        claimed.push_back(d);
      }
    } else if (t == "periodic") {
      const std::vector<int> dims = leaf_dims(ld, t);
      if (dims.size() != 1) {
        throw ConfigError("kernel spec: periodic leaf acts on exactly one column");
      }
      spec.leaves_.push_back({LeafKind::kPeriodic, dims[0], slot});
      slot += 2;
      claimed.push_back(dims[0]);
    } else {
      throw ConfigError("kernel spec: unknown leaf type '" + t + "'");
    }
  }

  std::vector<int> sorted = claimed;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i)) {
      throw ConfigError(
          "kernel spec: input columns must be claimed exactly once by the "
          "leaves; column " +
          std::to_string(i) + " is " +
          (sorted[i] > static_cast<int>(i) ? "missing" : "claimed twice"));
    }
  }
  spec.dims_ = static_cast<int>(claimed.size());
  spec.total_slots_ = slot + 1;  // trailing slot is the noise level
  return spec;
}

nlohmann::json KernelSpec::to_json() const {
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& leaf : leaves_) {
    nlohmann::json f;
    f["type"] = leaf.kind == LeafKind::kSquaredExponential ? "se" : "periodic";
    f["dim"] = leaf.col;
    f["slot"] = leaf.slot;
    factors.push_back(f);
  }
  return nlohmann::json{{"type", "product"}, {"factors", factors}};
}

std::vector<KernelSpec> KernelSpec::split(
    const std::vector<int>& group_dims) const {
  if (group_dims.empty()) {
    throw ShapeError("KernelSpec::split: empty grouping");
  }
  int total = 0;
  for (int g : group_dims) {
    if (g < 1) throw ShapeError("KernelSpec::split: group sizes must be >= 1");
    total += g;
  }
  if (total != dims_) {
    throw ShapeError("KernelSpec::split: group sizes sum to " +
                     std::to_string(total) + ", spec has " +
                     std::to_string(dims_) + " columns");
  }
  std::vector<KernelSpec> out;
  out.reserve(group_dims.size());
  for (std::size_t i = 0; i < group_dims.size(); ++i) {
    KernelSpec sub;
    sub.dims_ = group_dims[i];
    sub.total_slots_ = total_slots_;
    sub.owns_amplitude_ = owns_amplitude_ && i == 0;
    out.push_back(std::move(sub));
  }
  for (const auto& leaf : leaves_) {
    int offset = 0;
    std::size_t gi = 0;
    while (leaf.col >= offset + group_dims[gi]) {
      offset += group_dims[gi];
      gi += 1;
    }
    out[gi].leaves_.push_back({leaf.kind, leaf.col - offset, leaf.slot});
  }
  return out;
}

Hyperparameters::Hyperparameters(Eigen::VectorXd log_values)
    : log_(std::move(log_values)) {
  if (log_.size() < 2) {
    throw ShapeError("hyperparameters: need at least amplitude and noise slots");
  }
  if (!log_.allFinite()) {
    throw NumericError("hyperparameters: non-finite log value");
  }
}

Hyperparameters Hyperparameters::unit(const KernelSpec& spec) {
  return Hyperparameters(Eigen::VectorXd::Zero(spec.slots()));
}

double Hyperparameters::signal_variance() const {
  return std::exp(2.0 * log_(0));
}

double Hyperparameters::noise_variance() const {
  return std::max(std::exp(2.0 * log_(log_.size() - 1)), 1e-12);
}

Eigen::VectorXd pack(const Hyperparameters& h) { return h.log_values(); }

Hyperparameters unpack(const Eigen::Ref<const Eigen::VectorXd>& v,
                       const KernelSpec& spec) {
  if (v.size() != spec.slots()) {
    throw ShapeError("unpack: vector has " + std::to_string(v.size()) +
                     " entries, spec expects " + std::to_string(spec.slots()));
  }
  return Hyperparameters(Eigen::VectorXd(v));
}

Eigen::MatrixXd eval_cross(const KernelSpec& spec, const Hyperparameters& h,
                           const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Eigen::Ref<const Eigen::MatrixXd>& xp) {
  if (x.cols() != spec.dims() || xp.cols() != spec.dims()) {
    throw ShapeError("eval_cross: points have " + std::to_string(x.cols()) +
                     " and " + std::to_string(xp.cols()) +
                     " columns, spec expects " + std::to_string(spec.dims()));
  }
  if (h.size() != spec.slots()) {
    throw ShapeError("eval_cross: hyperparameter vector has " +
                     std::to_string(h.size()) + " slots, spec expects " +
                     std::to_string(spec.slots()));
  }
  if (!x.allFinite() || !xp.allFinite()) {
    throw NumericError("eval_cross: non-finite input coordinates");
  }
  const Eigen::Index a = x.rows();
  const Eigen::Index b = xp.rows();
  Eigen::ArrayXXd expo = Eigen::ArrayXXd::Zero(a, b);
  const Eigen::VectorXd& lv = h.log_values();
  for (const auto& leaf : spec.leaves()) {
    const Eigen::ArrayXXd diff =
        x.col(leaf.col).replicate(1, b).array() -
        xp.col(leaf.col).transpose().replicate(a, 1).array();
    if (leaf.kind == LeafKind::kSquaredExponential) {
      const double ls = std::exp(lv(leaf.slot));
      expo -= 0.5 * (diff / ls).square();
    } else {
      const double width = std::exp(lv(leaf.slot));
      const double period = std::exp(lv(leaf.slot + 1));
      expo -= 0.5 * ((diff.abs() * (kPi / period)).sin() / width).square();
    }
  }
  const double amp = spec.owns_amplitude() ? h.signal_variance() : 1.0;
  return (amp * expo.exp()).matrix();
}

Eigen::MatrixXd eval_symmetric(const KernelSpec& spec, const Hyperparameters& h,
                               const Eigen::Ref<const Eigen::MatrixXd>& x) {
  // The pairwise differences are exactly antisymmetric, so the evaluation
  // below is exactly symmetric in floating point; no cleanup pass needed.
  return eval_cross(spec, h, x, x);
}

double diagonal_value(const KernelSpec& spec, const Hyperparameters& h) {
  return spec.owns_amplitude() ? h.signal_variance() : 1.0;
}

}  // namespace flowgp
