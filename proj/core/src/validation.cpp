#include "sparse_design/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "sparse_design/errors.hpp"
#include "sparse_design/numeric.hpp"
#include "sparse_design/parallel.hpp"

namespace sparse_design {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? kInf : 0.0;
}

void check_omega(std::span<const double> omega) {
  if (omega.empty()) throw Error(ErrorKind::invalid_argument, "ridge candidate set is empty");
  for (double v : omega) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::invalid_argument, "ridge candidates must be finite and >= 0");
    }
  }
}

void check_target(Target target, const ResponseVector* responses, const SparseSample& sample) {
  if (target == Target::response && !responses) {
    throw Error(ErrorKind::invalid_argument, "response-target cross-validation requires responses");
  }
  if (responses && responses->size() != sample.size()) {
    throw Error(ErrorKind::invalid_argument, "responses are not paired with the sample");
  }
}

// Picks, for each design time in order, the nearest unused observation
// within tol. Returns false when some design time has none.
bool match_design(const SubjectRecord& s, std::span<const double> design_times, double tol,
                  std::vector<double>& u) {
  u.clear();
  std::vector<bool> used(s.count(), false);
  for (double d : design_times) {
    std::size_t best = s.count();
    double best_dist = kInf;
    for (std::size_t j = 0; j < s.count(); ++j) {
      if (used[j]) continue;
      const double dist = std::abs(s.times[j] - d);
      if (dist <= tol && dist < best_dist) {
        best = j;
        best_dist = dist;
      }
    }
    if (best == s.count()) return false;
    used[best] = true;
    u.push_back(s.values[best]);
  }
  return true;
}

struct ScoreOutcome {
  double score = kInf;
  std::size_t n_used = 0;
};

// Scores the subjects (by index) matching the design on the model.
ScoreOutcome score_subjects(const ModelFit& model, const Design& design, Target target,
                            const SparseSample& sample, const ResponseVector* responses,
                            std::span<const std::size_t> subjects, double tol) {
  const DesignPredictor predictor(model, design);
  const auto grid_pts = model.grid().points();
  std::vector<double> u;
  std::vector<double> curve(grid_pts.size());
  std::vector<double> fitted;
  AreAccumulator are;
  ApeAccumulator ape;
  for (std::size_t i : subjects) {
    const SubjectRecord& s = sample[i];
    if (!match_design(s, design.times(), tol, u)) continue;
    if (target == Target::trajectory) {
      predictor.recover_into(u, curve);
      fitted.resize(s.count());
      for (std::size_t j = 0; j < s.count(); ++j) {
        fitted[j] = interpolate_linear(grid_pts, curve, s.times[j]);
      }
      are.add(s.values, fitted);
    } else {
      ape.add((*responses)[i], predictor.predict(u));
    }
  }
  ScoreOutcome out;
  out.n_used = target == Target::trajectory ? are.count() : ape.count();
  if (out.n_used > 0) {
    out.score = target == Target::trajectory ? are.result().value : ape.result().value;
  }
  return out;
}

std::size_t argmin_score(const std::vector<RidgeCandidate>& candidates) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    if (candidates[k].score < candidates[best].score) best = k;
  }
  return best;
}

// While the best finite score sits at the largest (smallest) candidate,
// appends that value times (divided by) kExtensionFactor and rescores.
// A single candidate has no boundary and is never extended.
constexpr double kExtensionFactor = 2.0;

template <typename ScoreOne>
std::size_t extend_at_boundary(std::vector<RidgeCandidate>& candidates, std::size_t max_steps,
                               ScoreOne&& score_one) {
  std::size_t steps = 0;
  if (candidates.size() < 2) return steps;
  while (steps < max_steps) {
    const std::size_t best = argmin_score(candidates);
    if (!std::isfinite(candidates[best].score)) break;
    double lo = kInf, hi = 0.0;
    for (const auto& c : candidates) {
      lo = std::min(lo, c.value);
      hi = std::max(hi, c.value);
    }
    double next;
    if (candidates[best].value == hi) {
      next = hi * kExtensionFactor;
    } else if (candidates[best].value == lo && lo > 0.0) {
      next = lo / kExtensionFactor;
    } else {
      break;
    }
    candidates.push_back(score_one(next));
    ++steps;
  }
  return steps;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics

void AreAccumulator::add(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size() || observed.empty()) {
    throw Error(ErrorKind::invalid_argument, "ARE needs paired, non-empty observations");
  }
  double se = 0.0;
  double sy = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    const double e = observed[j] - predicted[j];
    se += e * e;
    sy += observed[j] * observed[j];
  }
  const double m = static_cast<double>(observed.size());
  rmse_sum_ += std::sqrt(se / m);
  rms_sum_ += std::sqrt(sy / m);
  ++n_;
}

ErrorPair AreAccumulator::result() const {
  if (n_ == 0) throw Error(ErrorKind::invalid_argument, "ARE over an empty sample");
  return {rmse_sum_ / static_cast<double>(n_), ratio(rmse_sum_, rms_sum_)};
}

void ApeAccumulator::add(double y, double yhat) {
  const double e = y - yhat;
  sq_err_ += e * e;
  sq_y_ += y * y;
  ++n_;
}

ErrorPair ApeAccumulator::result() const {
  if (n_ == 0) throw Error(ErrorKind::invalid_argument, "APE over an empty pairing");
  return {std::sqrt(sq_err_ / static_cast<double>(n_)),
          ratio(std::sqrt(sq_err_), std::sqrt(sq_y_))};
}

ErrorPair are_metric(const SparseSample& sample, std::span<const RecoveredTrajectory> recovered) {
  if (sample.size() == 0) throw Error(ErrorKind::invalid_argument, "ARE over an empty sample");
  if (recovered.size() != sample.size()) {
    throw Error(ErrorKind::invalid_argument, "one recovered trajectory per subject is required");
  }
  AreAccumulator acc;
  std::vector<double> fitted;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const SubjectRecord& s = sample[i];
    fitted.resize(s.count());
    for (std::size_t j = 0; j < s.count(); ++j) {
      fitted[j] = interpolate_linear(recovered[i].grid.points(), recovered[i].values, s.times[j]);
    }
    acc.add(s.values, fitted);
  }
  return acc.result();
}

ErrorPair ape_metric(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) {
    throw Error(ErrorKind::invalid_argument, "APE needs one prediction per response");
  }
  ApeAccumulator acc;
  for (std::size_t i = 0; i < y.size(); ++i) acc.add(y[i], yhat[i]);
  return acc.result();
}

ErrorPair ape_metric(const ResponseVector& y, std::span<const double> yhat) {
  return ape_metric(y.values(), yhat);
}

// ---------------------------------------------------------------------------
// Ridge selection

std::string to_string(RidgeCvMethod method) {
  return method == RidgeCvMethod::cv ? "cv" : "modified-cv";
}

RidgeCvMethod parse_ridge_cv_method(std::string_view text) {
  if (text == "cv") return RidgeCvMethod::cv;
  if (text == "modified-cv" || text == "modified_cv") return RidgeCvMethod::modified_cv;
  throw Error(ErrorKind::invalid_argument, "unknown ridge selection method '" + std::string(text) + "'");
}

std::vector<double> ridge_candidates(const ModelFit& model, std::span<const double> multiples) {
  double base = model.sigma2();
  if (!(base > 0.0)) base = 0.01 * model.cov_psd().trace() / static_cast<double>(model.grid().size());
  if (!(base > 0.0)) throw Error(ErrorKind::numerical, "cannot scale ridge candidates: zero covariance");
  std::vector<double> out;
  out.reserve(multiples.size());
  for (double m : multiples) out.push_back(m * base);
  check_omega(out);
  return out;
}

bool is_dense_on(const SparseSample& sample, const Grid& grid) {
  const auto pts = grid.points();
  const double tol = 1e-9 * (pts.back() - pts.front());
  for (const auto& s : sample.subjects()) {
    if (s.count() < grid.size()) return false;
    for (double t : pts) {
      const auto it = std::lower_bound(s.times.begin(), s.times.end(), t - tol);
      if (it == s.times.end() || std::abs(*it - t) > tol) return false;
    }
  }
  return true;
}

RidgeSelection select_ridge_cv(const ModelFit& base, const SparseSample& sample,
                               const ResponseVector* responses, Target target,
                               std::span<const double> omega, std::size_t p, SearchMethod method,
                               std::size_t max_extensions) {
  check_omega(omega);
  check_target(target, responses, sample);
  if (sample.size() == 0) throw Error(ErrorKind::invalid_argument, "cross-validation needs subjects");

  const auto& pts = base.grid().points();
  const double tol = 0.5 * (pts.back() - pts.front()) / static_cast<double>(pts.size() - 1);
  std::vector<std::size_t> all(sample.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  RidgeSelection sel;
  sel.method = RidgeCvMethod::cv;
  sel.target = target;
  sel.p = p;
  auto score_one = [&](double value) {
    RidgeCandidate c;
    c.value = value;
    c.score = kInf;
    const ModelFit model = base.with_ridge(value);
    const auto policy = FeasibilityPolicy::defaults_for(model);
    try {
      const SearchResult found = run_search(method, model, p, target, policy);
      const auto outcome = score_subjects(model, found.design, target, sample, responses, all, tol);
      c.score = outcome.score;
      c.n_b = outcome.n_used;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible && e.kind() != ErrorKind::conditioning) throw;
    }
    return c;
  };
  sel.candidates.resize(omega.size());
  parallel_for(omega.size(), [&](std::size_t k) { sel.candidates[k] = score_one(omega[k]); });
  sel.extensions = extend_at_boundary(sel.candidates, max_extensions, score_one);
  const std::size_t best = argmin_score(sel.candidates);
  if (!std::isfinite(sel.candidates[best].score)) {
    throw Error(ErrorKind::infeasible, "no ridge candidate produced a feasible scored design");
  }
  sel.sigma2_new = sel.candidates[best].value;
  return sel;
}

ModifiedCvPlan::ModifiedCvPlan(const SparseSample& sample, const ResponseVector* responses,
                               const FitConfig& fit, const ModifiedCvOptions& options)
    : sample_(&sample),
      responses_(responses),
      options_(options),
      grid_(make_grid(sample.domain(), fit.grid_size)),
      tau_(0.0) {
  if (options.partitions == 0) throw Error(ErrorKind::invalid_argument, "partitions must be >= 1");
  if (!(options.split > 0.0 && options.split < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "split must lie in (0, 1)");
  }
  if (responses && responses->size() != sample.size()) {
    throw Error(ErrorKind::invalid_argument, "responses are not paired with the sample");
  }
  const std::size_t n = sample.size();
  if (n < 2) throw Error(ErrorKind::invalid_argument, "modified cross-validation needs >= 2 subjects");
  const auto pts = grid_.points();
  tau_ = options.tau.value_or((pts.back() - pts.front()) / static_cast<double>(pts.size() - 1));
  if (!(tau_ >= 0.0)) throw Error(ErrorKind::invalid_argument, "tau must be >= 0");

  const std::size_t n_a = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(options.split * static_cast<double>(n))), 1, n - 1);
  parts_.resize(options.partitions);
  for (std::size_t l = 0; l < parts_.size(); ++l) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(options.seed, l));
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    Partition& part = parts_[l];
    part.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_a));
    part.held_out.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_a), perm.end());
    std::sort(part.train.begin(), part.train.end());
    std::sort(part.held_out.begin(), part.held_out.end());
  }

  FitConfig train_config = fit;
  train_config.ridge = RidgeSetting::noise();
  parallel_for(parts_.size(), [&](std::size_t l) {
    Partition& part = parts_[l];
    const SparseSample train = sample.subset(part.train);
    std::optional<ResponseVector> train_y;
    if (responses) train_y = responses->subset(part.train);
    part.model = fit_components(train, train_y ? &*train_y : nullptr, train_config);
  });
}

RidgeSelection ModifiedCvPlan::select(Target target, std::span<const double> omega,
                                      std::size_t p) const {
  check_omega(omega);
  check_target(target, responses_, *sample_);
  if (p == 0) throw Error(ErrorKind::invalid_argument, "p must be at least 1");
  const SparseSample& sample = *sample_;

  // Candidate designs: p-subsets of each held-out subject's snapped times.
  std::vector<std::vector<std::vector<std::size_t>>> designs(parts_.size());
  for (std::size_t l = 0; l < parts_.size(); ++l) {
    std::set<std::vector<std::size_t>> unique;
    for (std::size_t i : parts_[l].held_out) {
      std::vector<std::size_t> nodes;
      for (double t : sample[i].times) nodes.push_back(grid_.nearest_index(t));
      std::sort(nodes.begin(), nodes.end());
      nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
      if (nodes.size() < p) continue;
      std::vector<std::size_t> c(p);
      std::iota(c.begin(), c.end(), std::size_t{0});
      for (std::size_t count = 0; count < options_.max_subsets_per_subject; ++count) {
        std::vector<std::size_t> d(p);
        for (std::size_t j = 0; j < p; ++j) d[j] = nodes[c[j]];
        unique.insert(std::move(d));
        std::size_t j = p;
        bool advanced = false;
        while (j-- > 0) {
          if (c[j] < nodes.size() - p + j) {
            ++c[j];
            for (std::size_t k = j + 1; k < p; ++k) c[k] = c[k - 1] + 1;
            advanced = true;
            break;
          }
        }
        if (!advanced) break;
      }
    }
    designs[l].assign(unique.begin(), unique.end());
  }

  RidgeSelection sel;
  sel.method = RidgeCvMethod::modified_cv;
  sel.target = target;
  sel.p = p;
  sel.partitions = parts_.size();
  sel.split = options_.split;
  sel.tau = tau_;
  sel.seed = options_.seed;
  // Scores one ridge value on every partition; cells run concurrently.
  auto score_many = [&](std::span<const double> values) {
    std::vector<RidgeCandidate> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      out[k].value = values[k];
      out[k].partition_scores.assign(parts_.size(), std::numeric_limits<double>::quiet_NaN());
      out[k].partition_n_b.assign(parts_.size(), 0);
    }
    parallel_for(values.size() * parts_.size(), [&](std::size_t cell) {
      const std::size_t k = cell / parts_.size();
      const std::size_t l = cell % parts_.size();
      const Partition& part = parts_[l];
      const ModelFit model = part.model->with_ridge(values[k]);
      const CriterionEvaluator ev(model, target, FeasibilityPolicy::defaults_for(model));
      const auto found = best_of(ev, designs[l]);
      if (!found) return;
      ScoreOutcome outcome;
      try {
        outcome = score_subjects(model, found->design, target, sample, responses_, part.held_out, tau_);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::conditioning) throw;
        return;
      }
      if (outcome.n_used > 0) {
        out[k].partition_scores[l] = outcome.score;
        out[k].partition_n_b[l] = outcome.n_used;
      }
    });
    for (auto& c : out) {
      double sum = 0.0;
      std::size_t used = 0;
      std::size_t matched = 0;
      for (std::size_t l = 0; l < parts_.size(); ++l) {
        matched += c.partition_n_b[l];
        if (c.partition_n_b[l] == 0) continue;
        sum += c.partition_scores[l];
        ++used;
      }
      c.n_b = matched;
      c.score = used > 0 ? sum / static_cast<double>(used) : kInf;
    }
    return out;
  };
  sel.candidates = score_many(omega);
  sel.extensions = extend_at_boundary(sel.candidates, options_.max_extensions, [&](double value) {
    return score_many(std::span<const double>(&value, 1)).front();
  });
  const std::size_t best = argmin_score(sel.candidates);
  if (!std::isfinite(sel.candidates[best].score)) {
    throw Error(ErrorKind::data,
                "no held-out subject matched a selected design in any partition; "
                "increase tau or rescan the ridge candidates");
  }
  sel.sigma2_new = sel.candidates[best].value;
  return sel;
}

RidgeSelection select_ridge_modified_cv(const SparseSample& sample, const ResponseVector* responses,
                                        Target target, std::span<const double> omega,
                                        std::size_t p, const FitConfig& fit,
                                        const ModifiedCvOptions& options) {
  check_omega(omega);
  check_target(target, responses, sample);
  return ModifiedCvPlan(sample, responses, fit, options).select(target, omega, p);
}

}  // namespace sparse_design
