#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace sparse_design;

namespace {

Design at(const ModelFit& m, std::vector<std::size_t> idx, Target t = Target::trajectory) {
  return Design::from_indices(m.grid(), std::move(idx), t);
}

// Random PD covariance on a small grid, with a random cross-covariance.
ModelFit random_model(std::mt19937_64& rng, std::size_t g) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::MatrixXd b(g, g);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = z(rng);
  const Eigen::MatrixXd cov = b * b.transpose() / static_cast<double>(g);
  ModelResponseParts r;
  for (std::size_t i = 0; i < g; ++i) r.cross_cov.push_back(z(rng));
  r.var_y = 50.0;
  const Grid grid = make_grid(Domain(0.0, 1.0), g);
  return ModelFit::from_covariance(grid, std::vector<double>(g, 0.0), cov, 0.0, u(rng), r);
}

}  // namespace

TEST(Criteria, RankOneTrajectory) {
  const ModelFit m = oracle::rank_one(0.25);
  const auto r = criterion_trajectory(m, at(m, {0}), FeasibilityPolicy::defaults_for(m));
  EXPECT_NEAR(r.raw, 28.8, 1e-6);
  EXPECT_NEAR(r.r2, 0.96, 1e-6);
  EXPECT_TRUE(r.feasible);
}

TEST(Criteria, RankOneResponse) {
  const ModelFit m = oracle::rank_one(0.25, 0.25);
  const auto r = criterion_response(m, at(m, {0}, Target::response), FeasibilityPolicy::defaults_for(m));
  EXPECT_NEAR(r.raw, 28.8, 1e-6);
  EXPECT_NEAR(r.r2, 28.8 / 30.25, 1e-6);
}

TEST(Criteria, ZeroModel) {
  const Grid g = oracle::grid(11);
  ModelResponseParts resp{std::vector<double>(11, 0.0), 0.0, 1.0};
  const ModelFit m = ModelFit::from_covariance(g, std::vector<double>(11, 0.0), Eigen::MatrixXd::Zero(11, 11),
                                               0.0, 0.25, resp);
  const FeasibilityPolicy pol(1e-8);
  for (std::vector<std::size_t> idx : {std::vector<std::size_t>{0}, {2, 5}, {1, 3, 9}}) {
    const auto t = criterion_trajectory(m, at(m, idx), pol);
    EXPECT_EQ(t.raw, 0.0);
    EXPECT_EQ(t.r2, 0.0);
    EXPECT_EQ(criterion_response(m, at(m, idx, Target::response), pol).raw, 0.0);
  }
}

TEST(Criteria, Feasibility) {
  const ModelFit noiseless = oracle::rank_one(0.0);
  const auto f = feasibility(noiseless, at(noiseless, {10, 11}), FeasibilityPolicy(1e-8));
  EXPECT_FALSE(f.feasible);
  EXPECT_NEAR(f.min_eig, 0.0, 1e-8);
  EXPECT_EQ(criterion_trajectory(noiseless, at(noiseless, {10, 11}), FeasibilityPolicy(1e-8)).raw,
            -std::numeric_limits<double>::infinity());

  const ModelFit pop = oracle::reference_population();
  const auto ok = feasibility(pop, at(pop, {3, 17, 18, 40}), FeasibilityPolicy(1e-8));
  EXPECT_TRUE(ok.feasible);
  EXPECT_GE(ok.min_eig, 0.25 - 1e-12);

  const auto one = feasibility(pop, at(pop, {7}), FeasibilityPolicy(1e-8));
  EXPECT_NEAR(one.min_eig, pop.cov_psd()(7, 7) + 0.25, 1e-10);
}

TEST(Criteria, MatchesBruteForce) {
  const ModelFit pop = oracle::reference_population();
  const FeasibilityPolicy pol = FeasibilityPolicy::defaults_for(pop);
  const CriterionEvaluator traj(pop, Target::trajectory, pol);
  const CriterionEvaluator resp(pop, Target::response, pol);
  for (std::vector<std::size_t> idx : {std::vector<std::size_t>{0}, {4, 25}, {1, 9, 33, 50}}) {
    EXPECT_NEAR(traj.raw(idx), oracle::trajectory_brute(pop, idx), 1e-9 * (1.0 + traj.raw(idx)));
    EXPECT_NEAR(resp.raw(idx), oracle::response_brute(pop, idx), 1e-9 * (1.0 + resp.raw(idx)));
  }
}

TEST(Criteria, MonotoneUnderAugmentation) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelFit m = random_model(rng, 12);
    const FeasibilityPolicy pol(1e-12);
    const CriterionEvaluator traj(m, Target::trajectory, pol);
    const CriterionEvaluator resp(m, Target::response, pol);
    std::vector<std::size_t> order(12);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> design;
    double prev_t = 0.0, prev_r = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      design.push_back(order[k]);
      std::vector<std::size_t> sorted = design;
      std::sort(sorted.begin(), sorted.end());
      const double t = traj.raw(sorted), r = resp.raw(sorted);
      EXPECT_GE(t, prev_t - 1e-10);
      EXPECT_GE(r, prev_r - 1e-10);
      EXPECT_NEAR(t, oracle::trajectory_brute(m, sorted), 1e-8 * (1.0 + t));
      EXPECT_NEAR(r, oracle::response_brute(m, sorted), 1e-8 * (1.0 + r));
      prev_t = t;
      prev_r = r;
    }
  }
}

TEST(Criteria, EvaluatorAgreesWithFreeFunctions) {
  const ModelFit pop = oracle::reference_population();
  const FeasibilityPolicy pol = FeasibilityPolicy::defaults_for(pop);
  const Design d = at(pop, {2, 20, 44});
  const auto a = criterion_trajectory(pop, d, pol);
  const auto b = CriterionEvaluator(pop, Target::trajectory, pol).evaluate(d.indices());
  EXPECT_NEAR(a.raw, b.raw, 1e-10 * a.raw);
  EXPECT_NEAR(a.min_eig, b.min_eig, 1e-10);
  EXPECT_DOUBLE_EQ(a.normalizer, oracle::reference_population().var_x_integral());
}
