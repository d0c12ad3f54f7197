#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sparse_design/io.hpp"

using namespace sparse_design;

namespace {

// Tolerances and sizes, one block per criterion.
constexpr std::size_t kDenseRuns = 100;
constexpr double kDenseAre[3] = {1.74, 1.37, 1.02};
constexpr double kDenseAreTol = 0.20;

constexpr std::size_t kSparseRuns = 100;
constexpr double kSparseApe[3] = {9.41, 7.63, 6.87};
constexpr double kSparseRandomApe[3] = {10.79, 9.80, 7.65};
constexpr double kSparseApeTol = 0.25;

constexpr std::size_t kIdentityTrajectories = 2000;
constexpr std::size_t kIdentityP = 4;
constexpr double kIntegratedVariance = 73.785;
constexpr double kResponseVariance = 154.25;
constexpr double kIdentityTol = 0.02;

constexpr std::size_t kMonotoneModels = 200;
constexpr std::size_t kMonotoneMaxP = 8;
constexpr double kMonotoneSlack = 1e-10;

constexpr std::size_t kAffineInstances = 50;
constexpr double kAffineTol = 1e-9;

constexpr double kEigenValueTol = 0.02;
constexpr double kEigenFunctionTol = 0.05;

constexpr double kRankOneRaw = 28.8;
constexpr double kRankOneResponseR2 = 28.8 / 30.25;
constexpr double kRankOneTol = 1e-6;

constexpr std::size_t kTrendReplicates = 20;

constexpr double kGreedyRatio = 0.9;

constexpr double kRidgeFlatness = 1.5;
constexpr double kRidgeMultiples[7] = {0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string list(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + ")";
}

// 1. Dense benchmark.
Outcome dense_table() {
  ScenarioSpec spec = ScenarioSpec::dense();
  BenchmarkOptions opt;
  opt.runs = kDenseRuns;
  opt.seed = 7;
  const BenchmarkReport report = run_benchmark(spec, opt);
  Outcome out;
  std::vector<double> opt_are, rnd_are;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t p = i + 2;
    const double a = report.cell(p, BenchmarkMethod::optimal_exhaustive)->are_mean;
    const double r = report.cell(p, BenchmarkMethod::random_median)->are_mean;
    opt_are.push_back(a);
    rnd_are.push_back(r);
    if (std::abs(a - kDenseAre[i]) > kDenseAreTol * kDenseAre[i]) out.pass = false;
    if (!(a < r)) out.pass = false;
  }
  out.detail = "optimal ARE " + list(opt_are) + ", random " + list(rnd_are);
  return out;
}

// 2. Sparse benchmark.
Outcome sparse_table() {
  ScenarioSpec spec = ScenarioSpec::sparse();
  BenchmarkOptions opt;
  opt.runs = kSparseRuns;
  opt.seed = 7;
  const BenchmarkReport report = run_benchmark(spec, opt);
  Outcome out;
  std::vector<double> opt_ape, rnd_ape, opt_rel, rnd_rel;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t p = i + 2;
    const auto o = *report.cell(p, BenchmarkMethod::optimal_exhaustive);
    const auto r = *report.cell(p, BenchmarkMethod::random_median);
    opt_ape.push_back(o.ape_mean);
    rnd_ape.push_back(r.ape_mean);
    opt_rel.push_back(o.ape_rel_mean);
    rnd_rel.push_back(r.ape_rel_mean);
    if (std::abs(o.ape_mean - kSparseApe[i]) > kSparseApeTol * kSparseApe[i]) out.pass = false;
    if (!(o.ape_mean < kSparseRandomApe[i])) out.pass = false;
    if (!(o.ape_mean < r.ape_mean)) out.pass = false;
    if (!(o.ape_rel_mean < r.ape_rel_mean)) out.pass = false;
  }
  out.detail = "optimal APE " + list(opt_ape) + ", random " + list(rnd_ape) + "; APE* " +
               list(opt_rel) + " vs " + list(rnd_rel);
  return out;
}

// 3. Explained plus residual variance equals total variance.
Outcome identity() {
  const ModelFit pop = oracle::reference_population();
  const auto pol = FeasibilityPolicy::defaults_for(pop);
  const SearchResult dt = exhaustive_search(pop, kIdentityP, Target::trajectory, pol);
  const SearchResult dy = exhaustive_search(pop, kIdentityP, Target::response, pol);
  const DesignPredictor traj(pop, dt.design, pol);
  const DesignPredictor resp(pop, dy.design, pol);

  const SyntheticDataset data = generate_dataset(ScenarioSpec::dense(), kIdentityTrajectories, 2024);
  const auto w = pop.grid().weights();
  const std::size_t g = pop.grid().size();
  double traj_err = 0.0, resp_err = 0.0;
  std::vector<double> u(kIdentityP), rec(g);
  for (std::size_t i = 0; i < data.sample.size(); ++i) {
    const SubjectRecord& s = data.sample[i];
    for (std::size_t j = 0; j < kIdentityP; ++j) u[j] = s.values[dt.design.indices()[j]];
    traj.recover_into(u, rec);
    for (std::size_t k = 0; k < g; ++k) {
      const double e = data.truth.trajectories(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - rec[k];
      traj_err += w[k] * e * e;
    }
    for (std::size_t j = 0; j < kIdentityP; ++j) u[j] = s.values[dy.design.indices()[j]];
    const double e = data.responses.values()[i] - resp.predict(u);
    resp_err += e * e;
  }
  const double n = static_cast<double>(data.sample.size());
  const double total_x = traj_err / n + dt.criterion.raw;
  const double total_y = resp_err / n + dy.criterion.raw;
  Outcome out;
  out.pass = std::abs(total_x - kIntegratedVariance) <= kIdentityTol * kIntegratedVariance &&
             std::abs(total_y - kResponseVariance) <= kIdentityTol * kResponseVariance;
  out.detail = "trajectory " + num(total_x) + " vs " + num(kIntegratedVariance) + ", response " +
               num(total_y) + " vs " + num(kResponseVariance);
  return out;
}

// 4. Monotone criteria on random positive definite models.
Outcome monotonicity() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> noise(0.01, 1.0);
  std::uniform_int_distribution<std::size_t> size(kMonotoneMaxP, 16);
  double worst_drop = 0.0, worst_gap = 0.0;
  for (std::size_t trial = 0; trial < kMonotoneModels; ++trial) {
    const std::size_t g = size(rng);
    Eigen::MatrixXd b(g, g);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = z(rng);
    const Eigen::MatrixXd cov = b * b.transpose() / static_cast<double>(g);
    ModelResponseParts r;
    for (std::size_t i = 0; i < g; ++i) r.cross_cov.push_back(z(rng));
    r.var_y = 100.0;
    const ModelFit m = ModelFit::from_covariance(make_grid(Domain(0.0, 1.0), g), std::vector<double>(g, 0.0),
                                                 cov, 0.0, noise(rng), r);
    const FeasibilityPolicy pol(1e-12);
    const CriterionEvaluator traj(m, Target::trajectory, pol);
    const CriterionEvaluator resp(m, Target::response, pol);
    std::vector<std::size_t> order(g);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> design;
    double prev_t = 0.0, prev_r = 0.0;
    for (std::size_t k = 0; k < kMonotoneMaxP; ++k) {
      design.push_back(order[k]);
      std::vector<std::size_t> sorted = design;
      std::sort(sorted.begin(), sorted.end());
      const double t = traj.raw(sorted), y = resp.raw(sorted);
      worst_drop = std::max({worst_drop, prev_t - t, prev_r - y});
      worst_gap = std::max({worst_gap, std::abs(t - oracle::trajectory_brute(m, sorted)) / (1.0 + t),
                            std::abs(y - oracle::response_brute(m, sorted)) / (1.0 + y)});
      prev_t = t;
      prev_r = y;
    }
  }
  Outcome out;
  out.pass = worst_drop <= kMonotoneSlack && worst_gap <= 1e-8;
  out.detail = "largest decrease " + num(worst_drop) + ", largest brute-force gap " + num(worst_gap);
  return out;
}

// 5. Affine scatter is reproduced exactly.
Outcome affine() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> at(0.0, 10.0);
  std::uniform_real_distribution<double> weight(0.2, 2.0);
  std::uniform_real_distribution<double> band(1.0, 3.0);
  const Grid g = oracle::grid(26);
  double worst = 0.0;
  for (std::size_t inst = 0; inst < kAffineInstances; ++inst) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    std::vector<ScatterPoint1D> s1;
    for (int i = 0; i < 400; ++i) {
      const double q = at(rng);
      s1.push_back({q, a + b * q, weight(rng)});
    }
    const auto curve = local_linear_1d(s1, band(rng), g);
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(curve.values[i] - (a + b * g[i])));

    std::vector<ScatterPoint2D> s2, sym;
    for (int i = 0; i < 2500; ++i) {
      const double q1 = at(rng), q2 = at(rng), w = weight(rng);
      s2.push_back({q1, q2, a + b * q1 + c * q2, w});
      sym.push_back({q1, q2, a + b * (q1 + q2), w});
    }
    const double h = band(rng);
    const Eigen::MatrixXd plane = local_linear_2d_unsymmetrized(s2, h, g);
    const SurfaceEstimate symmetric = local_linear_2d(sym, h, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        worst = std::max(worst, std::abs(plane(ii, jj) - (a + b * g[i] + c * g[j])));
        worst = std::max(worst, std::abs(symmetric.values(ii, jj) - (a + b * (g[i] + g[j]))));
      }
    }
  }
  Outcome out;
  out.pass = worst <= kAffineTol;
  out.detail = "largest error " + num(worst);
  return out;
}

// 6. Spectrum of the analytic covariance at G = 101.
Outcome eigen_recovery() {
  const Grid g = oracle::grid(101);
  const auto eig = eigendecompose(oracle::covariance(g), g);
  const double expect[4] = {30.0, 20.0, 12.0, 8.0};
  double worst_value = 0.0, worst_function = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    worst_value = std::max(worst_value, std::abs(eig.values[k] - expect[k]) / expect[k]);
    Eigen::VectorXd truth(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) truth(static_cast<Eigen::Index>(i)) = oracle::psi(k + 1, g[i]);
    Eigen::VectorXd est = eig.functions.col(static_cast<Eigen::Index>(k));
    if (est.dot(truth) < 0.0) est = -est;
    worst_function = std::max(worst_function, (est - truth).cwiseAbs().maxCoeff());
  }
  Outcome out;
  out.pass = worst_value < kEigenValueTol && worst_function < kEigenFunctionTol;
  out.detail = "eigenvalue relative error " + num(worst_value) + ", eigenfunction sup error " + num(worst_function);
  return out;
}

// 7. Rank-one closed forms.
Outcome rank_one() {
  const ModelFit traj = oracle::rank_one(0.25);
  const ModelFit resp = oracle::rank_one(0.25, 0.25);
  const auto pol = FeasibilityPolicy::defaults_for(traj);
  const auto t = criterion_trajectory(traj, Design::from_indices(traj.grid(), std::vector<std::size_t>{0}, Target::trajectory), pol);
  const auto y = criterion_response(resp, Design::from_indices(resp.grid(), std::vector<std::size_t>{0}, Target::response), pol);
  const auto best = exhaustive_search(traj, 1, Target::trajectory, pol);
  Outcome out;
  out.pass = std::abs(t.raw - kRankOneRaw) <= kRankOneTol && std::abs(y.raw - kRankOneRaw) <= kRankOneTol &&
             std::abs(y.r2 - kRankOneResponseR2) <= kRankOneTol && best.design.times()[0] == 0.0;
  out.detail = "trajectory " + num(t.raw) + ", response " + num(y.raw) + " (r2 " +
               std::to_string(y.r2) + "), p=1 optimum at " + num(best.design.times()[0]);
  return out;
}

// 8. Distance to the population design shrinks with n.
Outcome trend() {
  ScenarioSpec spec = ScenarioSpec::sparse();
  spec.seed = 8;
  const std::vector<std::size_t> ns{100, 400};
  const ConvergenceReport report = convergence_study(spec, ns, kTrendReplicates, 2, Target::trajectory, {});
  Outcome out;
  out.pass = report.medians[1] <= report.medians[0];
  out.detail = "median distance " + num(report.medians[0]) + " at n=100, " + num(report.medians[1]) + " at n=400";
  return out;
}

// 9. Greedy close to exhaustive, and nested.
Outcome greedy() {
  const ModelFit pop = oracle::reference_population();
  const auto pol = FeasibilityPolicy::defaults_for(pop);
  Outcome out;
  double worst = 1.0;
  bool nested = true;
  for (Target target : {Target::trajectory, Target::response}) {
    std::vector<double> prev;
    for (std::size_t p = 1; p <= 4; ++p) {
      const auto g = greedy_search(pop, p, target, pol);
      const auto e = exhaustive_search(pop, p, target, pol);
      worst = std::min(worst, g.criterion.raw / e.criterion.raw);
      const auto times = g.design.times();
      if (p >= 3) {
        for (double t : prev) {
          if (std::find(times.begin(), times.end(), t) == times.end()) nested = false;
        }
      }
      prev.assign(times.begin(), times.end());
    }
  }
  out.pass = worst >= kGreedyRatio && nested;
  out.detail = "smallest greedy/exhaustive ratio " + num(worst) + (nested ? ", nested" : ", not nested");
  return out;
}

double flatness(const RidgeSelection& sel) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& c : sel.candidates) {
    lo = std::min(lo, c.score);
    hi = std::max(hi, c.score);
  }
  return hi / lo;
}

// 10. Ridge score curves are flat.
Outcome ridge_flatness() {
  FitConfig fit;
  fit.ridge = RidgeSetting::noise();
  const SyntheticDataset dense = generate_dataset(ScenarioSpec::dense(), 100, 10);
  const ModelFit base = fit_components(dense.sample, &dense.responses, fit);
  const auto omega_dense = ridge_candidates(base, kRidgeMultiples);
  const SyntheticDataset sparse = generate_dataset(ScenarioSpec::sparse(), 100, 10);
  ModifiedCvOptions opts;
  opts.max_extensions = 0;
  const ModifiedCvPlan plan(sparse.sample, &sparse.responses, fit, opts);
  const ModelFit sparse_base = fit_components(sparse.sample, &sparse.responses, fit);
  const auto omega_sparse = ridge_candidates(sparse_base, kRidgeMultiples);

  Outcome out;
  std::string detail;
  for (Target target : {Target::trajectory, Target::response}) {
    const double cv = flatness(select_ridge_cv(base, dense.sample, &dense.responses, target, omega_dense, 3,
                                               SearchMethod::greedy, 0));
    const double mcv = flatness(plan.select(target, omega_sparse, 3));
    if (!(cv < kRidgeFlatness) || !(mcv < kRidgeFlatness)) out.pass = false;
    detail += std::string(to_string(target)) + ": cv " + num(cv) + ", modified-cv " + num(mcv) + "; ";
  }
  out.detail = "max/min score " + detail.substr(0, detail.size() - 2);
  return out;
}

// 11. Seeded pipelines do not depend on the thread count.
Outcome determinism() {
  auto simulate = [] {
    BenchmarkOptions opt;
    opt.runs = 3;
    opt.seed = 11;
    opt.random_count = 20;
    std::ostringstream csv;
    for (ScenarioSpec spec : {ScenarioSpec::dense(), ScenarioSpec::sparse()}) {
      const BenchmarkReport report = run_benchmark(spec, opt);
      write_benchmark_csv(csv, report);
      csv << benchmark_summary_to_json(report);
    }
    return csv.str();
  };
  auto ridge = [] {
    FitConfig fit;
    fit.ridge = RidgeSetting::noise();
    const SyntheticDataset data = generate_dataset(ScenarioSpec::sparse(), 80, 11);
    const ModelFit base = fit_components(data.sample, &data.responses, fit);
    ModifiedCvOptions opts;
    opts.seed = 11;
    return ridge_to_json(select_ridge_modified_cv(data.sample, &data.responses, Target::response,
                                                  ridge_candidates(base, kRidgeMultiples), 3, fit, opts));
  };
  auto random = [] {
    std::string s;
    for (const auto& d : random_designs(oracle::grid(), 4, 200, 11)) {
      for (double t : d.times()) s += format_double(t) + ',';
      s += '\n';
    }
    return s;
  };
  std::vector<std::string> runs;
  for (std::size_t threads : {1u, 8u, 1u, 8u}) {
    set_thread_count(threads);
    runs.push_back(simulate() + ridge() + random());
  }
  set_thread_count(0);
  Outcome out;
  out.pass = std::all_of(runs.begin(), runs.end(), [&](const std::string& r) { return r == runs[0]; });
  out.detail = out.pass ? "identical across 2 runs x threads {1, 8}" : "outputs differ";
  return out;
}

}  // namespace

// Arguments: criterion numbers to run (default all), and
// `--documented a,b,...` naming failures recorded as unattainable; those are
// still reported as FAIL but do not set the exit code.
int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::function<Outcome()>> criteria{
      dense_table, sparse_table, identity, monotonicity, affine, eigen_recovery,
      rank_one,    trend,        greedy,   ridge_flatness, determinism};
  std::set<std::size_t> selected, documented;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--documented" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) documented.insert(std::stoul(item));
    } else {
      selected.insert(std::stoul(arg));
    }
  }

  int unexpected = 0;
  std::vector<std::size_t> failed;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected.empty() && !selected.count(k + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << k + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
              << num(secs) << " s]" << std::endl;
    if (!o.pass) {
      failed.push_back(k + 1);
      if (!documented.count(k + 1)) ++unexpected;
    }
  }
  std::cout << "failed:";
  for (std::size_t k : failed) std::cout << ' ' << k << (documented.count(k) ? " (documented)" : "");
  std::cout << (failed.empty() ? " none" : "") << std::endl;
  return unexpected == 0 ? 0 : 1;
}
