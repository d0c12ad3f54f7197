#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

#include "sparse_design/cov_model.hpp"
#include "sparse_design/criteria.hpp"
#include "sparse_design/data_model.hpp"

namespace sparse_design {

/// Noisy measurements taken at the design times.
struct ObservedDesignValues {
  Design design;
  std::vector<double> u;

  ObservedDesignValues(Design d, std::vector<double> values);
};

struct RecoveredTrajectory {
  Grid grid;
  std::vector<double> values;
};

/// mu(t) + gamma(t)^T A^-1 (u - mu(t_design)), A the ridged submatrix.
RecoveredTrajectory recover_trajectory(const ModelFit& model, const ObservedDesignValues& obs);

/// mu_Y + C(t_design)^T A^-1 (u - mu(t_design)).
double predict_response(const ModelFit& model, const ObservedDesignValues& obs);

/// Precomputed linear maps for one model and design, for predicting many
/// subjects. Construction fails with a conditioning error when the ridged
/// submatrix has an eigenvalue below delta0.
class DesignPredictor {
 public:
  DesignPredictor(const ModelFit& model, const Design& design,
                  std::optional<FeasibilityPolicy> policy = std::nullopt);

  void recover_into(std::span<const double> u, std::span<double> out) const;
  RecoveredTrajectory recover(std::span<const double> u) const;
  /// Requires a model fitted with responses.
  double predict(std::span<const double> u) const;

  const Design& design() const noexcept { return design_; }
  bool has_response() const noexcept { return beta_.has_value(); }

 private:
  Eigen::VectorXd centered(std::span<const double> u) const;

  const ModelFit* model_;
  Design design_;
  Eigen::MatrixXd gain_;  ///< G x p, Gamma[:, t] A^-1
  Eigen::VectorXd mu_t_;
  std::optional<Eigen::VectorXd> beta_;
  double mu_y_ = 0.0;
};

}  // namespace sparse_design
