#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowgp/common.hpp"

namespace flowgp {

// Root mean square error between held-out values and predicted means.
double rmse(const Eigen::Ref<const Eigen::VectorXd>& truth,
            const Eigen::Ref<const Eigen::VectorXd>& mean);

// Mean standardised log loss: the average of
//   0.5 log(2 pi var) + (y - mean)^2 / (2 var)
// per point.  Note no baseline model is subtracted; this is the plain
// average negative log predictive density.
double msll(const Eigen::Ref<const Eigen::VectorXd>& truth,
            const Eigen::Ref<const Eigen::VectorXd>& mean,
            const Eigen::Ref<const Eigen::VectorXd>& variance);

struct MetricsReport {
  double rmse = 0.0;
  double msll = 0.0;
  Eigen::Index count = 0;

  nlohmann::json to_json() const;
};

MetricsReport evaluate_predictions(
    const Eigen::Ref<const Eigen::VectorXd>& truth,
    const Eigen::Ref<const Eigen::VectorXd>& mean,
    const Eigen::Ref<const Eigen::VectorXd>& variance);

}  // namespace flowgp
