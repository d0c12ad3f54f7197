#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sparse_design/data_model.hpp"
#include "sparse_design/search.hpp"
#include "sparse_design/simulation.hpp"

namespace sparse_design {

/// max_j |a_(j) - b_(j)| over the order statistics of two size-p designs.
double design_distance(std::span<const double> a, std::span<const double> b);
double design_distance(const Design& a, const Design& b);

/// Second differences of the criterion at a design, moving one point at a
/// time to its neighbouring grid nodes. Logged, never asserted.
struct CurvatureDiagnostic {
  std::vector<double> second_differences;  ///< one per movable point
  bool locally_concave = true;
};

CurvatureDiagnostic curvature_at(const CriterionEvaluator& evaluator, const Design& design);

struct ConvergenceOptions {
  SearchMethod method = SearchMethod::exhaustive;
};

struct ConvergenceReport {
  ScenarioSpec spec;
  std::vector<std::size_t> n_values;
  std::size_t replicates = 0;
  std::size_t p = 0;
  Target target = Target::trajectory;
  std::vector<double> population_design;
  double population_raw = 0.0;
  CurvatureDiagnostic curvature;
  std::vector<std::vector<double>> distances;  ///< [n index][replicate]
  std::vector<double> medians;
};

/// Compares designs estimated from simulated pilots of each size against
/// the design of the population model. Estimated models use the noise
/// variance estimate as ridge; the population model uses the true noise.
ConvergenceReport convergence_study(const ScenarioSpec& spec, std::span<const std::size_t> n_values,
                                    std::size_t replicates, std::size_t p, Target target,
                                    const ConvergenceOptions& options = {});

/// `n,replicate,distance`.
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);

}  // namespace sparse_design
