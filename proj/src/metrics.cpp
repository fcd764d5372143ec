#include "flowgp/metrics.hpp"

#include <cmath>
#include <string>

namespace flowgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& truth,
                const Eigen::Ref<const Eigen::VectorXd>& mean,
                const char* op) {
  if (truth.size() < 1) {
    throw ShapeError(std::string(op) + ": need at least one point");
  }
  if (truth.size() != mean.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(truth.size()) +
                     " truth values against " + std::to_string(mean.size()) +
                     " predictions");
  }
  if (!truth.allFinite() || !mean.allFinite()) {
    throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

double rmse(const Eigen::Ref<const Eigen::VectorXd>& truth,
            const Eigen::Ref<const Eigen::VectorXd>& mean) {
  check_pair(truth, mean, "rmse");
  return std::sqrt((truth - mean).squaredNorm() /
                   static_cast<double>(truth.size()));
}

double msll(const Eigen::Ref<const Eigen::VectorXd>& truth,
            const Eigen::Ref<const Eigen::VectorXd>& mean,
            const Eigen::Ref<const Eigen::VectorXd>& variance) {
  check_pair(truth, mean, "msll");
  if (variance.size() != truth.size()) {
    throw ShapeError("msll: " + std::to_string(variance.size()) +
                     " variances for " + std::to_string(truth.size()) +
                     " points");
  }
  if (!variance.allFinite()) {
    throw NumericError("msll: non-finite variance");
  }
  if ((variance.array() <= 0.0).any()) {
    throw NumericError("msll: non-positive predictive variance");
  }
  const Eigen::ArrayXd err2 = (truth - mean).array().square();
  const Eigen::ArrayXd v = variance.array();
  return (0.5 * (v * 2.0 * 3.14159265358979323846).log() + err2 / (2.0 * v))
             .mean();
}

nlohmann::json MetricsReport::to_json() const {
  return nlohmann::json{{"rmse", rmse}, {"msll", msll}, {"count", count}};
}

MetricsReport evaluate_predictions(
    const Eigen::Ref<const Eigen::VectorXd>& truth,
    const Eigen::Ref<const Eigen::VectorXd>& mean,
    const Eigen::Ref<const Eigen::VectorXd>& variance) {
  MetricsReport r;
  r.rmse = rmse(truth, mean);
  r.msll = msll(truth, mean, variance);
  r.count = truth.size();
  return r;
}

}  // namespace flowgp
