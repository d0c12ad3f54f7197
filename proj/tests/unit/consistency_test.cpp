#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sparse_design;

TEST(Consistency, DesignDistance) {
  const std::vector<double> a{1.0, 5.0}, b{5.0, 1.0}, c{2.0, 7.0};
  EXPECT_EQ(design_distance(a, a), 0.0);
  EXPECT_EQ(design_distance(a, b), 0.0);
  EXPECT_EQ(design_distance(a, c), 2.0);
  const std::vector<double> d{1.0};
  EXPECT_THROW(design_distance(a, d), Error);
}

TEST(Consistency, PopulationAgainstItself) {
  const ModelFit pop = population_model(ScenarioSpec::sparse(), 0.25);
  const auto pol = FeasibilityPolicy::defaults_for(pop);
  const auto a = exhaustive_search(pop, 2, Target::trajectory, pol);
  const auto b = exhaustive_search(population_model(ScenarioSpec::sparse(), 0.25), 2, Target::trajectory, pol);
  EXPECT_EQ(design_distance(a.design, b.design), 0.0);
}

TEST(Consistency, CurvatureAtPopulationOptimum) {
  const ModelFit pop = population_model(ScenarioSpec::sparse(), 0.25);
  const auto pol = FeasibilityPolicy::defaults_for(pop);
  const auto best = exhaustive_search(pop, 2, Target::trajectory, pol);
  const auto diag = curvature_at(CriterionEvaluator(pop, Target::trajectory, pol), best.design);
  for (double v : diag.second_differences) EXPECT_LE(v, 0.0);
}

TEST(Consistency, SmallStudyShape) {
  auto spec = ScenarioSpec::sparse();
  spec.seed = 4;
  const std::vector<std::size_t> n{40, 80};
  const auto report = convergence_study(spec, n, 2, 2, Target::trajectory);
  ASSERT_EQ(report.distances.size(), 2u);
  ASSERT_EQ(report.medians.size(), 2u);
  for (const auto& row : report.distances) {
    ASSERT_EQ(row.size(), 2u);
    for (double d : row) {
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 10.0);
    }
  }
  EXPECT_EQ(report.population_design.size(), 2u);
}
