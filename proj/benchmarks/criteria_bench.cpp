#include <benchmark/benchmark.h>

#include <numeric>

#include "sparse_design/sparse_design.hpp"

using namespace sparse_design;

namespace {

const ModelFit& population() {
  static const ModelFit model = population_model(ScenarioSpec::dense(), 0.25);
  return model;
}

void BM_CriterionEvaluator(benchmark::State& state, Target target) {
  const ModelFit& m = population();
  const CriterionEvaluator ev(m, target, FeasibilityPolicy::defaults_for(m));
  const auto p = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> idx(p);
  for (std::size_t j = 0; j < p; ++j) idx[j] = j * (m.grid().size() - 1) / (p == 1 ? 1 : p - 1);
  for (auto _ : state) benchmark::DoNotOptimize(ev.raw(idx));
}

void BM_CriterionFree(benchmark::State& state) {
  const ModelFit& m = population();
  const auto pol = FeasibilityPolicy::defaults_for(m);
  const Design d = Design::from_times(m.grid(), std::vector<double>{1.0, 4.0, 6.0, 9.0}, Target::trajectory);
  for (auto _ : state) benchmark::DoNotOptimize(criterion_trajectory(m, d, pol).raw);
}

}  // namespace

BENCHMARK_CAPTURE(BM_CriterionEvaluator, trajectory, Target::trajectory)->DenseRange(2, 6, 2);
BENCHMARK_CAPTURE(BM_CriterionEvaluator, response, Target::response)->DenseRange(2, 6, 2);
BENCHMARK(BM_CriterionFree);
