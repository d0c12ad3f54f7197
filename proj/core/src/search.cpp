#include "sparse_design/search.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sparse_design/errors.hpp"
#include "sparse_design/parallel.hpp"

namespace sparse_design {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double tie_tolerance(double best) { return 1e-11 * std::max(1.0, std::abs(best)); }

void require_p(std::size_t p, std::size_t available) {
  if (p == 0) throw Error(ErrorKind::invalid_argument, "p must be at least 1");
  if (p > available) {
    throw Error(ErrorKind::invalid_argument, "p = " + std::to_string(p) +
                                                 " exceeds the number of grid points (" +
                                                 std::to_string(available) + ")");
  }
}

// Lexicographic unranking of a p-combination of {0, ..., n-1}.
void unrank(std::uint64_t rank, std::size_t n, std::size_t p, std::vector<std::size_t>& out) {
  out.resize(p);
  std::size_t x = 0;
  for (std::size_t i = 0; i < p; ++i) {
    for (;;) {
      const std::uint64_t c = combination_count(n - x - 1, p - i - 1);
      if (c > rank) break;
      rank -= c;
      ++x;
    }
    out[i] = x++;
  }
}

bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t p = c.size();
  std::size_t i = p;
  while (i-- > 0) {
    if (c[i] < n - p + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < p; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

SearchResult make_result(const CriterionEvaluator& ev, std::vector<std::size_t> indices,
                         SearchMethod method, std::uint64_t evaluated) {
  const Grid& grid = ev.model().grid();
  Design d = Design::from_indices(grid, std::move(indices), ev.target());
  CriterionResult crit = ev.evaluate(d.indices());
  return SearchResult{std::move(d), crit, method, evaluated, {}};
}

std::vector<double> times_of(const Grid& grid, std::span<const std::size_t> idx) {
  std::vector<double> t;
  t.reserve(idx.size());
  for (auto i : idx) t.push_back(grid.points()[i]);
  return t;
}

}  // namespace

std::string to_string(SearchMethod method) {
  switch (method) {
    case SearchMethod::exhaustive: return "exhaustive";
    case SearchMethod::greedy: return "greedy";
    case SearchMethod::random: return "random";
  }
  return "unknown";
}

SearchMethod parse_search_method(std::string_view text) {
  if (text == "exhaustive") return SearchMethod::exhaustive;
  if (text == "greedy") return SearchMethod::greedy;
  if (text == "random") return SearchMethod::random;
  throw Error(ErrorKind::invalid_argument, "unknown search method '" + std::string(text) + "'");
}

std::uint64_t combination_count(std::size_t n, std::size_t p) {
  if (p > n) return 0;
  p = std::min(p, n - p);
  __extension__ using u128 = unsigned __int128;
  u128 r = 1;
  for (std::size_t i = 0; i < p; ++i) {
    r = r * (n - i) / (i + 1);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

SearchResult exhaustive_search(const CriterionEvaluator& ev, std::span<const std::size_t> pool,
                               std::size_t p, const SearchOptions& options) {
  require_p(p, pool.size());
  const std::size_t n = pool.size();
  const std::uint64_t total = combination_count(n, p);
  if (total > options.exhaustive_cap && !options.allow_large) {
    throw Error(ErrorKind::invalid_argument,
                "exhaustive search over " + std::to_string(total) +
                    " designs exceeds the cap of " + std::to_string(options.exhaustive_cap) +
                    "; use greedy search or allow large searches");
  }

  const std::size_t blocks =
      static_cast<std::size_t>(std::min<std::uint64_t>(total, thread_count() * 16));
  std::vector<double> block_best(blocks, kNegInf);
  auto scan = [&](std::size_t begin, std::size_t end, auto&& visit) {
    std::vector<std::size_t> c;
    std::vector<std::size_t> idx(p);
    unrank(begin, n, p, c);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t i = 0; i < p; ++i) idx[i] = pool[c[i]];
      if (!visit(idx, ev.raw(idx))) return;
      next_combination(c, n);
    }
  };

  parallel_for_blocks(total, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    double best = kNegInf;
    scan(begin, end, [&](const std::vector<std::size_t>&, double v) {
      best = std::max(best, v);
      return true;
    });
    block_best[b] = best;
  });

  const double best = *std::max_element(block_best.begin(), block_best.end());
  if (best == kNegInf) {
    throw Error(ErrorKind::infeasible, "no feasible design of size " + std::to_string(p) +
                                           " (every covariance submatrix is below delta0)");
  }
  const double floor = best - tie_tolerance(best);
  std::vector<std::size_t> chosen;
  for (std::size_t b = 0; b < blocks && chosen.empty(); ++b) {
    if (block_best[b] < floor) continue;
    const std::size_t begin = total * b / blocks;
    const std::size_t end = total * (b + 1) / blocks;
    scan(begin, end, [&](const std::vector<std::size_t>& idx, double v) {
      if (v >= floor) {
        chosen = idx;
        return false;
      }
      return true;
    });
  }
  SearchResult res = make_result(ev, std::move(chosen), SearchMethod::exhaustive, total);
  return res;
}

SearchResult greedy_search(const CriterionEvaluator& ev, std::span<const std::size_t> pool,
                           std::size_t p, const SearchOptions& options) {
  require_p(p, pool.size());
  const Grid& grid = ev.model().grid();
  const std::size_t first = std::min<std::size_t>(p, 2);
  SearchResult start = exhaustive_search(ev, pool, first, options);
  std::vector<std::size_t> current(start.design.indices().begin(), start.design.indices().end());
  std::uint64_t evaluated = start.evaluated;
  std::vector<GreedyStep> trace{{times_of(grid, current), start.criterion.raw}};

  std::vector<double> scores;
  std::vector<std::size_t> candidates;
  while (current.size() < p) {
    candidates.clear();
    for (auto s : pool) {
      if (!std::binary_search(current.begin(), current.end(), s)) candidates.push_back(s);
    }
    scores.assign(candidates.size(), kNegInf);
    parallel_for(candidates.size(), [&](std::size_t k) {
      std::vector<std::size_t> trial = current;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), candidates[k]), candidates[k]);
      scores[k] = ev.raw(trial);
    });
    evaluated += candidates.size();
    const double best = *std::max_element(scores.begin(), scores.end());
    if (best == kNegInf) {
      throw Error(ErrorKind::infeasible, "no feasible extension of the greedy design at size " +
                                             std::to_string(current.size() + 1));
    }
    const double floor = best - tie_tolerance(best);
    std::size_t pick = 0;
    while (scores[pick] < floor) ++pick;
    const std::size_t s = candidates[pick];
    current.insert(std::upper_bound(current.begin(), current.end(), s), s);
    trace.push_back({{grid.points()[s]}, scores[pick]});
  }
  SearchResult res = make_result(ev, std::move(current), SearchMethod::greedy, evaluated);
  res.trace = std::move(trace);
  return res;
}

std::optional<SearchResult> best_of(const CriterionEvaluator& ev,
                                    std::span<const std::vector<std::size_t>> candidates) {
  if (candidates.empty()) return std::nullopt;
  std::vector<double> scores(candidates.size(), kNegInf);
  parallel_for(candidates.size(), [&](std::size_t k) { scores[k] = ev.raw(candidates[k]); });
  const double best = *std::max_element(scores.begin(), scores.end());
  if (best == kNegInf) return std::nullopt;
  const double floor = best - tie_tolerance(best);
  std::size_t pick = candidates.size();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (scores[k] < floor) continue;
    if (pick == candidates.size() || candidates[k] < candidates[pick]) pick = k;
  }
  return make_result(ev, candidates[pick], SearchMethod::exhaustive, candidates.size());
}

SearchResult exhaustive_search(const ModelFit& model, std::size_t p, Target target,
                               const FeasibilityPolicy& policy, const SearchOptions& options) {
  require_p(p, model.grid().size());
  const CriterionEvaluator ev(model, target, policy);
  const auto pool = all_indices(model.grid().size());
  return exhaustive_search(ev, pool, p, options);
}

SearchResult greedy_search(const ModelFit& model, std::size_t p, Target target,
                           const FeasibilityPolicy& policy, const SearchOptions& options) {
  require_p(p, model.grid().size());
  const CriterionEvaluator ev(model, target, policy);
  const auto pool = all_indices(model.grid().size());
  return greedy_search(ev, pool, p, options);
}

SearchResult run_search(SearchMethod method, const ModelFit& model, std::size_t p, Target target,
                        const FeasibilityPolicy& policy, const SearchOptions& options) {
  switch (method) {
    case SearchMethod::exhaustive: return exhaustive_search(model, p, target, policy, options);
    case SearchMethod::greedy: return greedy_search(model, p, target, policy, options);
    case SearchMethod::random: break;
  }
  throw Error(ErrorKind::invalid_argument, "random designs are not an optimizing search");
}

std::vector<Design> random_designs(const Grid& grid, std::size_t p, std::size_t count,
                                   std::uint64_t seed, Target target) {
  require_p(p, grid.size());
  if (count == 0) throw Error(ErrorKind::invalid_argument, "random design count must be >= 1");
  std::mt19937_64 rng(seed);
  const std::size_t n = grid.size();
  std::vector<Design> out;
  out.reserve(count);
  std::vector<std::size_t> perm(n);
  for (std::size_t r = 0; r < count; ++r) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < p; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    std::vector<std::size_t> idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(p));
    std::sort(idx.begin(), idx.end());
    out.push_back(Design::from_indices(grid, std::move(idx), target));
  }
  return out;
}

EarliestDesign earliest_design(const ModelFit& model, std::size_t p, Target target, double alpha,
                               const FeasibilityPolicy& policy, SearchMethod method,
                               const SearchOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  }
  if (method == SearchMethod::random) {
    throw Error(ErrorKind::invalid_argument, "earliest design needs greedy or exhaustive search");
  }
  const Grid& grid = model.grid();
  require_p(p, grid.size());
  const CriterionEvaluator ev(model, target, policy);
  auto search = [&](std::span<const std::size_t> pool) {
    return method == SearchMethod::exhaustive ? exhaustive_search(ev, pool, p, options)
                                              : greedy_search(ev, pool, p, options);
  };
  const auto full_pool = all_indices(grid.size());
  const SearchResult full = search(full_pool);
  const double norm = ev.normalizer();
  auto to_r2 = [&](double raw) { return norm > 0.0 ? raw / norm : 0.0; };
  const double threshold = (1.0 - alpha) * full.criterion.raw;

  EarliestDesign out{grid.points().back(), full.design, {}, to_r2(full.criterion.raw), false};
  double best_raw = kNegInf;
  std::optional<Design> best_design;
  for (std::size_t g = p - 1; g < grid.size(); ++g) {
    const std::span<const std::size_t> pool(full_pool.data(), g + 1);
    try {
      SearchResult r = search(pool);
      if (r.criterion.raw > best_raw) {
        best_raw = r.criterion.raw;
        best_design = r.design;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible) throw;
    }
    if (!best_design) continue;
    const double t = grid.points()[g];
    out.r2_curve.emplace_back(t, to_r2(best_raw));
    if (!out.reached && best_raw >= threshold) {
      out.reached = true;
      out.t_alpha = t;
      out.design = *best_design;
    }
  }
  if (!out.reached) {
    spdlog::warn("R^2 threshold not reached within the domain; reporting t = {}", grid.points().back());
  }
  return out;
}

}  // namespace sparse_design
