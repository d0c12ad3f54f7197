#include "sparse_design/consistency.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sparse_design/errors.hpp"
#include "sparse_design/numeric.hpp"
#include "sparse_design/parallel.hpp"

namespace sparse_design {

double design_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::invalid_argument, "design distance needs designs of equal size");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double d = 0.0;
  for (std::size_t j = 0; j < sa.size(); ++j) d = std::max(d, std::abs(sa[j] - sb[j]));
  return d;
}

double design_distance(const Design& a, const Design& b) {
  return design_distance(a.times(), b.times());
}

CurvatureDiagnostic curvature_at(const CriterionEvaluator& ev, const Design& design) {
  CurvatureDiagnostic out;
  const std::vector<std::size_t> base(design.indices().begin(), design.indices().end());
  const double centre = ev.raw(base);
  const std::size_t n = ev.grid_size();
  for (std::size_t j = 0; j < base.size(); ++j) {
    const std::size_t g = base[j];
    if (g == 0 || g + 1 >= n) continue;
    auto moved = [&](std::size_t to) {
      std::vector<std::size_t> d = base;
      d[j] = to;
      std::sort(d.begin(), d.end());
      if (std::adjacent_find(d.begin(), d.end()) != d.end()) return std::nan("");
      return ev.raw(d);
    };
    const double lo = moved(g - 1);
    const double hi = moved(g + 1);
    if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
    const double second = lo - 2.0 * centre + hi;
    out.second_differences.push_back(second);
    if (second > 0.0) out.locally_concave = false;
  }
  return out;
}

ConvergenceReport convergence_study(const ScenarioSpec& spec, std::span<const std::size_t> n_values,
                                    std::size_t replicates, std::size_t p, Target target,
                                    const ConvergenceOptions& options) {
  spec.validate();
  if (n_values.empty()) throw Error(ErrorKind::invalid_argument, "at least one sample size is required");
  if (replicates == 0) throw Error(ErrorKind::invalid_argument, "replicates must be >= 1");
  for (std::size_t n : n_values) {
    if (n < 2) throw Error(ErrorKind::invalid_argument, "sample sizes must be >= 2");
  }

  const ModelFit population = population_model(spec, spec.noise_var);
  const auto pop_policy = FeasibilityPolicy::defaults_for(population);
  const SearchResult pop = run_search(options.method, population, p, target, pop_policy);
  const CriterionEvaluator pop_ev(population, target, pop_policy);

  ConvergenceReport report;
  report.spec = spec;
  report.n_values.assign(n_values.begin(), n_values.end());
  report.replicates = replicates;
  report.p = p;
  report.target = target;
  report.population_design.assign(pop.design.times().begin(), pop.design.times().end());
  report.population_raw = pop.criterion.raw;
  report.curvature = curvature_at(pop_ev, pop.design);
  if (!report.curvature.locally_concave) {
    spdlog::info("criterion is not locally concave at the population design");
  }

  report.distances.assign(n_values.size(), std::vector<double>(replicates, 0.0));
  FitConfig fit;
  fit.grid_size = spec.grid_size;
  fit.ridge = RidgeSetting::noise();
  parallel_for(n_values.size() * replicates, [&](std::size_t cell) {
    const std::size_t a = cell / replicates;
    const std::size_t r = cell % replicates;
    const std::uint64_t seed = derive_seed(spec.seed, n_values[a], r);
    const SyntheticDataset data = generate_dataset(spec, n_values[a], seed);
    const ModelFit model = fit_components(
        data.sample, target == Target::response ? &data.responses : nullptr, fit);
    const SearchResult found =
        run_search(options.method, model, p, target, FeasibilityPolicy::defaults_for(model));
    report.distances[a][r] = design_distance(found.design, pop.design);
  });
  for (const auto& d : report.distances) report.medians.push_back(median(d));
  return report;
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "n,replicate,distance\n";
  for (std::size_t a = 0; a < report.n_values.size(); ++a) {
    for (std::size_t r = 0; r < report.replicates; ++r) {
      out << report.n_values[a] << ',' << r + 1 << ',' << format_double(report.distances[a][r]) << '\n';
    }
  }
}

}  // namespace sparse_design
