#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sparse_design;

namespace {

SparseSample on_grid_sample(const Grid& g, std::size_t n) {
  std::vector<SubjectRecord> subjects;
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord r{"s" + std::to_string(i), {}, {}};
    for (std::size_t j = i % 3; j < g.size(); j += 3) {
      r.times.push_back(g[j]);
      r.values.push_back(std::sin(g[j]) + 0.1 * static_cast<double>(i) + 2.0);
    }
    subjects.push_back(std::move(r));
  }
  return SparseSample(g.domain(), std::move(subjects));
}

RecoveredTrajectory curve_of(const SubjectRecord& s, const Grid& g) {
  RecoveredTrajectory r{g, std::vector<double>(g.size(), 0.0)};
  for (std::size_t j = 0; j < s.count(); ++j) r.values[*g.index_of(s.times[j])] = s.values[j];
  return r;
}

}  // namespace

TEST(Validation, AreZeroWhenObservationsInterpolated) {
  const Grid g = oracle::grid(31);
  const SparseSample s = on_grid_sample(g, 6);
  std::vector<RecoveredTrajectory> rec;
  for (const auto& subj : s.subjects()) rec.push_back(curve_of(subj, g));
  EXPECT_NEAR(are_metric(s, rec).value, 0.0, 1e-14);
}

TEST(Validation, AreRelativeOneForZeroCurve) {
  const Grid g = oracle::grid(31);
  const SparseSample s = on_grid_sample(g, 6);
  std::vector<RecoveredTrajectory> rec(s.size(), RecoveredTrajectory{g, std::vector<double>(g.size(), 0.0)});
  EXPECT_NEAR(are_metric(s, rec).relative, 1.0, 1e-14);
}

TEST(Validation, ApeLimits) {
  const std::vector<double> y{1.0, -2.0, 3.5};
  EXPECT_EQ(ape_metric(y, y).value, 0.0);
  const std::vector<double> zero(3, 0.0);
  EXPECT_NEAR(ape_metric(y, zero).relative, 1.0, 1e-14);
}

TEST(Validation, ParseMethod) {
  EXPECT_EQ(parse_ridge_cv_method("cv"), RidgeCvMethod::cv);
  EXPECT_EQ(parse_ridge_cv_method("modified-cv"), RidgeCvMethod::modified_cv);
  EXPECT_THROW(parse_ridge_cv_method("loo"), Error);
}

TEST(Validation, CandidatesScaleNoise) {
  const ModelFit pop = oracle::reference_population();
  const std::vector<double> mult{0.5, 2.0};
  EXPECT_EQ(ridge_candidates(pop, mult), (std::vector<double>{0.125, 0.5}));
}

TEST(Validation, SingletonCandidate) {
  const auto data = generate_dataset(ScenarioSpec::sparse(), 60, 4);
  FitConfig fit;
  fit.ridge = RidgeSetting::noise();
  ModifiedCvOptions opts;
  opts.partitions = 3;
  const std::vector<double> omega{0.4};
  const auto sel = select_ridge_modified_cv(data.sample, nullptr, Target::trajectory, omega, 2, fit, opts);
  EXPECT_EQ(sel.sigma2_new, 0.4);
  ASSERT_EQ(sel.candidates.size(), 1u);
  EXPECT_TRUE(std::isfinite(sel.candidates[0].score));
  EXPECT_EQ(sel.extensions, 0u);
}

TEST(Validation, InfiniteToleranceMatchesEveryone) {
  const auto data = generate_dataset(ScenarioSpec::sparse(), 60, 9);
  FitConfig fit;
  fit.ridge = RidgeSetting::noise();
  ModifiedCvOptions opts;
  opts.partitions = 4;
  opts.tau = std::numeric_limits<double>::infinity();
  opts.max_extensions = 0;
  const std::vector<double> omega{0.2, 1.0};
  const auto sel = select_ridge_modified_cv(data.sample, nullptr, Target::trajectory, omega, 1, fit, opts);
  for (const auto& c : sel.candidates) {
    for (std::size_t n_b : c.partition_n_b) EXPECT_EQ(n_b, 15u);
  }
}

TEST(Validation, NoMatchesIsAnError) {
  std::vector<SubjectRecord> subjects;
  for (int i = 0; i < 40; ++i) {
    SubjectRecord r{"s" + std::to_string(i), {}, {}};
    for (int j = 0; j < 6; ++j) {
      const double t = 0.1 + 0.2 * ((i * 7 + j * 9) % 50) ;
      if (std::find(r.times.begin(), r.times.end(), t) != r.times.end()) continue;
      r.times.push_back(t);
      r.values.push_back(std::cos(t) + 0.05 * i);
    }
    subjects.push_back(std::move(r));
  }
  const SparseSample s(Domain(0.0, 10.0), std::move(subjects));
  FitConfig fit;
  fit.ridge = RidgeSetting::noise();
  fit.bandwidths = {2.0, std::nullopt, 2.5, 2.0};
  ModifiedCvOptions opts;
  opts.partitions = 2;
  opts.tau = 1e-6;
  const std::vector<double> omega{0.5};
  EXPECT_THROW(select_ridge_modified_cv(s, nullptr, Target::trajectory, omega, 2, fit, opts), Error);
}

TEST(Validation, DenseCvNearFineGridOptimum) {
  const auto data = generate_dataset(ScenarioSpec::dense(), 100, 15);
  FitConfig fit;
  fit.ridge = RidgeSetting::noise();
  const ModelFit base = fit_components(data.sample, nullptr, fit);
  ASSERT_TRUE(is_dense_on(data.sample, base.grid()));
  const std::vector<double> mult{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  const auto omega = ridge_candidates(base, mult);
  const auto sel = select_ridge_cv(base, data.sample, nullptr, Target::trajectory, omega, 3,
                                   SearchMethod::greedy, 0);
  EXPECT_GE(sel.sigma2_new, omega.front());
  EXPECT_LE(sel.sigma2_new, omega.back());

  std::vector<double> fine;
  for (std::size_t i = 0; i <= 70; ++i) fine.push_back(omega.front() * std::pow(80.0, i / 70.0));
  const auto fine_sel = select_ridge_cv(base, data.sample, nullptr, Target::trajectory, fine, 3,
                                        SearchMethod::greedy, 0);
  double best = std::numeric_limits<double>::infinity(), chosen = 0.0;
  for (const auto& c : fine_sel.candidates) best = std::min(best, c.score);
  for (const auto& c : sel.candidates) {
    if (c.value == sel.sigma2_new) chosen = c.score;
  }
  EXPECT_LE(chosen, 1.1 * best);
}

TEST(Validation, BoundaryExtension) {
  const auto data = generate_dataset(ScenarioSpec::dense(), 60, 15);
  FitConfig fit;
  fit.ridge = RidgeSetting::noise();
  const ModelFit base = fit_components(data.sample, nullptr, fit);
  const std::vector<double> tiny{1e-6, 2e-6};
  const auto sel = select_ridge_cv(base, data.sample, nullptr, Target::trajectory, tiny, 2,
                                   SearchMethod::greedy, 3);
  EXPECT_LE(sel.extensions, 3u);
  EXPECT_EQ(sel.candidates.size(), 2u + sel.extensions);
  const auto fixed = select_ridge_cv(base, data.sample, nullptr, Target::trajectory, tiny, 2,
                                     SearchMethod::greedy, 0);
  EXPECT_EQ(fixed.candidates.size(), 2u);
}
