#include <benchmark/benchmark.h>

#include "sparse_design/sparse_design.hpp"

using namespace sparse_design;

namespace {

const ModelFit& population() {
  static const ModelFit model = population_model(ScenarioSpec::dense(), 0.25);
  return model;
}

void BM_Search(benchmark::State& state, SearchMethod method, Target target) {
  const ModelFit& m = population();
  const auto pol = FeasibilityPolicy::defaults_for(m);
  const auto p = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_search(method, m, p, target, pol).criterion.raw);
}

}  // namespace

BENCHMARK_CAPTURE(BM_Search, exhaustive_trajectory, SearchMethod::exhaustive, Target::trajectory)
    ->DenseRange(2, 4)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Search, exhaustive_response, SearchMethod::exhaustive, Target::response)
    ->DenseRange(2, 4)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Search, greedy_trajectory, SearchMethod::greedy, Target::trajectory)
    ->DenseRange(2, 6, 2)
    ->Unit(benchmark::kMillisecond);
