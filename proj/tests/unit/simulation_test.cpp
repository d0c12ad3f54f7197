#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

using namespace sparse_design;

TEST(Simulation, DatasetIsDeterministic) {
  const auto spec = ScenarioSpec::sparse();
  const auto a = generate_dataset(spec, 30, 5);
  const auto b = generate_dataset(spec, 30, 5);
  std::ostringstream sa, sb;
  write_longitudinal(sa, a.sample);
  write_longitudinal(sb, b.sample);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(std::vector<double>(a.responses.values().begin(), a.responses.values().end()),
            std::vector<double>(b.responses.values().begin(), b.responses.values().end()));
}

TEST(Simulation, SparseDesignShape) {
  const auto spec = ScenarioSpec::sparse();
  const auto data = generate_dataset(spec, 200, 2);
  for (const auto& s : data.sample.subjects()) {
    EXPECT_GE(s.count(), 4u);
    EXPECT_LE(s.count(), 8u);
  }
}

TEST(Simulation, ScoreAndResponseMoments) {
  const auto data = generate_dataset(ScenarioSpec::dense(), 5000, 41);
  std::vector<double> z1(5000);
  for (Eigen::Index i = 0; i < 5000; ++i) z1[i] = data.truth.scores(i, 0);
  EXPECT_NEAR(sample_variance(z1), 30.0, 0.05 * 30.0);
  EXPECT_NEAR(data.responses.variance(), 154.25, 0.05 * 154.25);
}

TEST(Simulation, TrajectoriesFollowExpansion) {
  const auto spec = ScenarioSpec::dense();
  const auto data = generate_dataset(spec, 3, 8);
  const Grid g = oracle::grid();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < g.size(); j += 10) {
      double x = oracle::mu(g[j]);
      for (std::size_t k = 0; k < 10; ++k) x += data.truth.scores(i, k) * oracle::psi(k + 1, g[j]);
      EXPECT_NEAR(data.truth.trajectories(i, j), x, 1e-9);
    }
  }
}

TEST(Simulation, PopulationModelTotals) {
  const auto spec = ScenarioSpec::dense();
  const ModelFit pop = population_model(spec, 0.25);
  EXPECT_NEAR(pop.var_x_integral(), 73.785, 1e-3);
  EXPECT_NEAR(pop.var_y(), 154.25, 1e-9);
  EXPECT_NEAR(spec.integrated_variance(), 73.785, 1e-3);
}

TEST(Simulation, OptimalBeatsRandomMostly) {
  BenchmarkOptions opts;
  opts.runs = 10;
  opts.p_list = {2};
  opts.ridge = RidgeSetting::noise();
  opts.seed = 3;
  const auto report = run_benchmark(ScenarioSpec::dense(), opts);
  std::size_t wins = 0;
  for (std::size_t run = 1; run <= 10; ++run) {
    double opt = 0.0, rnd = 0.0;
    for (const auto& row : report.rows) {
      if (row.run != run) continue;
      (row.method == BenchmarkMethod::optimal_exhaustive ? opt : rnd) = row.are;
    }
    wins += opt <= rnd ? 1 : 0;
  }
  EXPECT_GT(wins, 5u);
}

TEST(Simulation, ParseNames) {
  EXPECT_EQ(parse_scenario("dense"), ScenarioKind::dense);
  EXPECT_EQ(parse_benchmark_method("random"), BenchmarkMethod::random_median);
  EXPECT_THROW(parse_scenario("medium"), Error);
}
