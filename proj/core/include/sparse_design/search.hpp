#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparse_design/cov_model.hpp"
#include "sparse_design/criteria.hpp"
#include "sparse_design/data_model.hpp"

namespace sparse_design {

enum class SearchMethod { exhaustive, greedy, random };

std::string to_string(SearchMethod method);
SearchMethod parse_search_method(std::string_view text);

struct GreedyStep {
  std::vector<double> added;  ///< times added in this step
  double raw = 0.0;
};

struct SearchResult {
  Design design;
  CriterionResult criterion;
  SearchMethod method;
  std::uint64_t evaluated = 0;
  std::vector<GreedyStep> trace;
};

struct SearchOptions {
  /// Exhaustive search refuses more combinations than this unless
  /// allow_large is set.
  std::uint64_t exhaustive_cap = 5'000'000;
  bool allow_large = false;
};

/// Number of p-subsets of n items; saturates at UINT64_MAX.
std::uint64_t combination_count(std::size_t n, std::size_t p);

/// Maximizer of the criterion over every ascending p-subset of the grid.
/// Ties within 1e-11 relative go to the lexicographically smallest design.
SearchResult exhaustive_search(const ModelFit& model, std::size_t p, Target target,
                               const FeasibilityPolicy& policy, const SearchOptions& options = {});

/// Best pair by exhaustive search, then one point at a time.
SearchResult greedy_search(const ModelFit& model, std::size_t p, Target target,
                           const FeasibilityPolicy& policy, const SearchOptions& options = {});

SearchResult run_search(SearchMethod method, const ModelFit& model, std::size_t p, Target target,
                        const FeasibilityPolicy& policy, const SearchOptions& options = {});

/// Lower-level forms working on an evaluator and a pool of allowed grid
/// indices (ascending).
SearchResult exhaustive_search(const CriterionEvaluator& evaluator, std::span<const std::size_t> pool,
                               std::size_t p, const SearchOptions& options = {});
SearchResult greedy_search(const CriterionEvaluator& evaluator, std::span<const std::size_t> pool,
                           std::size_t p, const SearchOptions& options = {});

/// Best design among explicit candidate index sets (each sorted ascending).
/// Returns nullopt when none is feasible.
std::optional<SearchResult> best_of(const CriterionEvaluator& evaluator,
                                    std::span<const std::vector<std::size_t>> candidates);

/// R uniform p-subsets of the grid drawn without replacement.
std::vector<Design> random_designs(const Grid& grid, std::size_t p, std::size_t count,
                                   std::uint64_t seed, Target target = Target::trajectory);

struct EarliestDesign {
  double t_alpha = 0.0;
  Design design;
  std::vector<std::pair<double, double>> r2_curve;  ///< (t, R^2(t))
  double r2_full = 0.0;
  bool reached = true;
};

/// First grid time t whose best design within [lo, t] reaches
/// (1 - alpha) of the full-domain R^2.
EarliestDesign earliest_design(const ModelFit& model, std::size_t p, Target target, double alpha,
                               const FeasibilityPolicy& policy,
                               SearchMethod method = SearchMethod::greedy,
                               const SearchOptions& options = {});

}  // namespace sparse_design
