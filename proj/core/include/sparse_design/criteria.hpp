#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "sparse_design/cov_model.hpp"
#include "sparse_design/data_model.hpp"

namespace sparse_design {

/// A design is feasible when the smallest eigenvalue of its ridged
/// covariance submatrix is at least delta0.
struct FeasibilityPolicy {
  double delta0;

  explicit FeasibilityPolicy(double delta0_value);
  /// delta0 = 1e-8 * trace(cov_ridged) / G.
  static FeasibilityPolicy defaults_for(const ModelFit& model);
};

struct Feasibility {
  bool feasible = false;
  double min_eig = 0.0;
};

struct CriterionResult {
  Target target = Target::trajectory;
  double raw = 0.0;         ///< -inf for infeasible designs
  double r2 = 0.0;          ///< raw / normalizer, clamped to 1
  double normalizer = 0.0;  ///< integrated variance of X or var(Y)
  bool feasible = false;
  bool clamped = false;     ///< raw / normalizer exceeded 1
  double min_eig = 0.0;
};

Feasibility feasibility(const ModelFit& model, const Design& design,
                        const FeasibilityPolicy& policy);

CriterionResult criterion_trajectory(const ModelFit& model, const Design& design,
                                     const FeasibilityPolicy& policy);
CriterionResult criterion_response(const ModelFit& model, const Design& design,
                                   const FeasibilityPolicy& policy);
/// Dispatches on design.target().
CriterionResult evaluate_criterion(const ModelFit& model, const Design& design,
                                   const FeasibilityPolicy& policy);

/// Fast repeated evaluation of one criterion over many index sets.
/// The trajectory criterion is tr(A^-1 M[t,t]) with M = Gamma W Gamma
/// precomputed once; the response criterion is C[t]^T A^-1 C[t].
class CriterionEvaluator {
 public:
  CriterionEvaluator(const ModelFit& model, Target target, FeasibilityPolicy policy);

  /// Criterion value for the grid indices, or -inf when infeasible.
  /// Thread safe.
  double raw(std::span<const std::size_t> indices) const;
  /// Full result with exact minimum eigenvalue.
  CriterionResult evaluate(std::span<const std::size_t> indices) const;

  const ModelFit& model() const noexcept { return *model_; }
  Target target() const noexcept { return target_; }
  const FeasibilityPolicy& policy() const noexcept { return policy_; }
  std::size_t grid_size() const noexcept { return n_; }
  double normalizer() const noexcept { return normalizer_; }

 private:
  const ModelFit* model_;
  Target target_;
  FeasibilityPolicy policy_;
  std::size_t n_;
  double normalizer_;
  std::vector<double> ridged_;  // row-major G x G
  std::vector<double> quad_;    // row-major G x G, trajectory only
  std::vector<double> cross_;   // response only
};

double min_eigenvalue(const Eigen::MatrixXd& symmetric);

}  // namespace sparse_design
