#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_design/cov_model.hpp"
#include "sparse_design/data_model.hpp"
#include "sparse_design/predictor.hpp"
#include "sparse_design/search.hpp"

namespace sparse_design {

struct ErrorPair {
  double value = 0.0;
  double relative = 0.0;
};

/// Streaming ARE: mean over subjects of the per-subject RMSE, and the
/// ratio of summed RMSE to summed root mean square of the observations.
class AreAccumulator {
 public:
  void add(std::span<const double> observed, std::span<const double> predicted);
  std::size_t count() const noexcept { return n_; }
  ErrorPair result() const;

 private:
  std::size_t n_ = 0;
  double rmse_sum_ = 0.0;
  double rms_sum_ = 0.0;
};

class ApeAccumulator {
 public:
  void add(double y, double yhat);
  std::size_t count() const noexcept { return n_; }
  ErrorPair result() const;

 private:
  std::size_t n_ = 0;
  double sq_err_ = 0.0;
  double sq_y_ = 0.0;
};

/// ARE over each subject's own observations; the recovered curve is
/// interpolated linearly at the observation times.
ErrorPair are_metric(const SparseSample& sample, std::span<const RecoveredTrajectory> recovered);
ErrorPair ape_metric(std::span<const double> y, std::span<const double> yhat);
ErrorPair ape_metric(const ResponseVector& y, std::span<const double> yhat);

struct MetricReport {
  double are = 0.0;
  double are_rel = 0.0;
  std::optional<double> ape;
  std::optional<double> ape_rel;
  std::size_t n_used = 0;
};

enum class RidgeCvMethod { cv, modified_cv };
std::string to_string(RidgeCvMethod method);
RidgeCvMethod parse_ridge_cv_method(std::string_view text);

struct RidgeCandidate {
  double value = 0.0;
  double score = 0.0;  ///< +inf when the candidate could not be scored
  std::optional<std::size_t> n_b;          ///< matched subjects over all partitions
  std::vector<double> partition_scores;    ///< NaN where a partition had no match
  std::vector<std::size_t> partition_n_b;
};

struct RidgeSelection {
  double sigma2_new = 0.0;
  std::vector<RidgeCandidate> candidates;  ///< given candidates, then boundary extensions
  std::size_t extensions = 0;
  RidgeCvMethod method = RidgeCvMethod::cv;
  Target target = Target::trajectory;
  std::size_t p = 0;
  std::optional<std::size_t> partitions;
  std::optional<double> split;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
};

/// Candidate ridge values from multiples of a base value. A zero base
/// falls back to 1% of the average diagonal of the covariance.
std::vector<double> ridge_candidates(const ModelFit& model, std::span<const double> multiples);

/// True when every subject has an observation at every grid node.
bool is_dense_on(const SparseSample& sample, const Grid& grid);

inline constexpr std::size_t kDefaultRidgeExtensions = 6;

/// Cross-validation for densely observed pilots. The design is chosen once
/// per candidate on the shared model; every subject is then scored with
/// its own readings at the design times.
///
/// Both selectors extend the candidate set while the best score sits at its
/// largest or smallest value: up to `max_extensions` further values, each
/// doubling (halving) the current extreme.
RidgeSelection select_ridge_cv(const ModelFit& base, const SparseSample& sample,
                               const ResponseVector* responses, Target target,
                               std::span<const double> omega, std::size_t p,
                               SearchMethod method = SearchMethod::greedy,
                               std::size_t max_extensions = kDefaultRidgeExtensions);

struct ModifiedCvOptions {
  std::size_t partitions = 10;
  double split = 0.75;
  std::optional<double> tau;  ///< defaults to one grid step
  std::uint64_t seed = 1;
  std::size_t max_subsets_per_subject = 200;
  std::size_t max_extensions = kDefaultRidgeExtensions;
};

/// Modified cross-validation for sparse pilots: fit on a random split,
/// choose the best design among the held-out subjects' own time
/// configurations, and score the held-out subjects that match it.
/// The partition fits do not depend on the ridge, target or p and are
/// computed once per plan.
class ModifiedCvPlan {
 public:
  /// `sample` and `responses` must outlive the plan.
  ModifiedCvPlan(const SparseSample& sample, const ResponseVector* responses, const FitConfig& fit,
                 const ModifiedCvOptions& options = {});

  RidgeSelection select(Target target, std::span<const double> omega, std::size_t p) const;

  std::size_t partitions() const noexcept { return parts_.size(); }
  double tau() const noexcept { return tau_; }

 private:
  struct Partition {
    std::vector<std::size_t> train;
    std::vector<std::size_t> held_out;
    std::optional<ModelFit> model;
  };

  const SparseSample* sample_;
  const ResponseVector* responses_;
  ModifiedCvOptions options_;
  Grid grid_;
  double tau_;
  std::vector<Partition> parts_;
};

RidgeSelection select_ridge_modified_cv(const SparseSample& sample, const ResponseVector* responses,
                                        Target target, std::span<const double> omega,
                                        std::size_t p, const FitConfig& fit,
                                        const ModifiedCvOptions& options = {});

}  // namespace sparse_design
