#include "sparse_design/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "sparse_design/errors.hpp"
#include "sparse_design/numeric.hpp"
#include "sparse_design/parallel.hpp"
#include "sparse_design/predictor.hpp"

namespace sparse_design {

namespace {

enum Stream : std::uint64_t { train_stream, test_stream, random_stream, noise_stream, cv_stream };

std::vector<double> grid_values(const Grid& grid, auto&& f) {
  std::vector<double> v(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) v[g] = f(grid[g]);
  return v;
}

}  // namespace

std::string to_string(ScenarioKind kind) { return kind == ScenarioKind::dense ? "dense" : "sparse"; }

ScenarioKind parse_scenario(std::string_view text) {
  if (text == "dense") return ScenarioKind::dense;
  if (text == "sparse") return ScenarioKind::sparse;
  throw Error(ErrorKind::invalid_argument, "unknown scenario '" + std::string(text) + "'");
}

std::string to_string(BenchmarkMethod method) {
  switch (method) {
    case BenchmarkMethod::optimal_exhaustive: return "exhaustive";
    case BenchmarkMethod::optimal_greedy: return "greedy";
    case BenchmarkMethod::random_median: return "random";
  }
  return "unknown";
}

BenchmarkMethod parse_benchmark_method(std::string_view text) {
  if (text == "exhaustive") return BenchmarkMethod::optimal_exhaustive;
  if (text == "greedy") return BenchmarkMethod::optimal_greedy;
  if (text == "random") return BenchmarkMethod::random_median;
  throw Error(ErrorKind::invalid_argument, "unknown benchmark method '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// ScenarioSpec

ScenarioSpec ScenarioSpec::dense() { return ScenarioSpec{}; }

ScenarioSpec ScenarioSpec::sparse() {
  ScenarioSpec s;
  s.kind = ScenarioKind::sparse;
  return s;
}

void ScenarioSpec::validate() const {
  if (n_train == 0 || n_test == 0) throw Error(ErrorKind::invalid_argument, "sample sizes must be >= 1");
  if (grid_size < 2) throw Error(ErrorKind::invalid_argument, "grid size must be >= 2");
  if (eigenvalues.empty()) throw Error(ErrorKind::invalid_argument, "at least one eigenvalue is required");
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    if (!(eigenvalues[k] > 0.0)) throw Error(ErrorKind::invalid_argument, "eigenvalues must be positive");
    if (k > 0 && eigenvalues[k] > eigenvalues[k - 1]) {
      throw Error(ErrorKind::invalid_argument, "eigenvalues must be descending");
    }
  }
  if (!(noise_var >= 0.0) || !(response_noise_var >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "noise variances must be >= 0");
  }
  if (kind == ScenarioKind::sparse && (m_min < 1 || m_min > m_max || m_max > grid_size)) {
    throw Error(ErrorKind::invalid_argument, "measurement count range must lie within [1, grid size]");
  }
}

Grid ScenarioSpec::grid() const { return make_grid(domain, grid_size); }

double ScenarioSpec::mean_at(double t) const {
  return 0.5 * t * t + 2.0 * std::sin(t) + 3.0 * std::cos(2.0 * t);
}

double ScenarioSpec::eigenfunction(std::size_t index, double t) const {
  const double w = domain.width();
  const double k = static_cast<double>(index + 1);
  return std::sqrt(2.0 / w) * std::cos(k * std::numbers::pi * (t - domain.lo()) / w);
}

double ScenarioSpec::response_coef(std::size_t index) const {
  return index < response_coefs.size() ? response_coefs[index] : 0.0;
}

double ScenarioSpec::integrated_variance() const {
  double s = 0.0;
  for (double r : eigenvalues) s += r;
  return s;
}

double ScenarioSpec::response_variance() const {
  double s = response_noise_var;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    s += response_coef(k) * response_coef(k) * eigenvalues[k];
  }
  return s;
}

// ---------------------------------------------------------------------------

SyntheticDataset generate_dataset(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed,
                                  const std::string& id_prefix) {
  spec.validate();
  if (n == 0) throw Error(ErrorKind::invalid_argument, "sample size must be >= 1");
  const Grid grid = spec.grid();
  const std::size_t g_count = grid.size();
  const std::size_t k_count = spec.eigenvalues.size();

  Eigen::MatrixXd psi(static_cast<Eigen::Index>(g_count), static_cast<Eigen::Index>(k_count));
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t g = 0; g < g_count; ++g) {
      psi(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k)) = spec.eigenfunction(k, grid[g]);
    }
  }
  const auto mu = grid_values(grid, [&](double t) { return spec.mean_at(t); });

  SyntheticTruth truth{grid, Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_count)),
                       Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g_count)),
                       std::vector<double>(n)};
  std::vector<SubjectRecord> subjects(n);
  std::vector<double> y(n);
  const double noise_sd = std::sqrt(spec.noise_var);
  const double y_sd = std::sqrt(spec.response_noise_var);

  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto ii = static_cast<Eigen::Index>(i);
    double ey = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double z = std::sqrt(spec.eigenvalues[k]) * normal(rng);
      truth.scores(ii, static_cast<Eigen::Index>(k)) = z;
      ey += spec.response_coef(k) * z;
    }
    truth.trajectories.row(ii) = (psi * truth.scores.row(ii).transpose()).transpose();
    for (std::size_t g = 0; g < g_count; ++g) truth.trajectories(ii, static_cast<Eigen::Index>(g)) += mu[g];
    truth.response_mean[i] = ey;

    std::vector<std::size_t> nodes;
    if (spec.kind == ScenarioKind::dense) {
      nodes.resize(g_count);
      for (std::size_t g = 0; g < g_count; ++g) nodes[g] = g;
    } else {
      std::uniform_int_distribution<std::size_t> count(spec.m_min, spec.m_max);
      const std::size_t m = count(rng);
      std::vector<std::size_t> perm(g_count);
      for (std::size_t g = 0; g < g_count; ++g) perm[g] = g;
      for (std::size_t j = 0; j < m; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, g_count - 1);
        std::swap(perm[j], perm[pick(rng)]);
      }
      nodes.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(nodes.begin(), nodes.end());
    }
    SubjectRecord& rec = subjects[i];
    rec.id = id_prefix + std::to_string(i + 1);
    for (std::size_t g : nodes) {
      rec.times.push_back(grid[g]);
      rec.values.push_back(truth.trajectories(ii, static_cast<Eigen::Index>(g)) + noise_sd * normal(rng));
    }
    y[i] = ey + y_sd * normal(rng);
  }

  SparseSample sample(spec.domain, std::move(subjects));
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& s : sample.subjects()) ids.push_back(s.id);
  ResponseVector responses(std::move(ids), std::move(y));
  return {std::move(sample), std::move(responses), std::move(truth)};
}

SyntheticDataset generate_dataset(const ScenarioSpec& spec) {
  return generate_dataset(spec, spec.n_train, spec.seed);
}

ModelFit population_model(const ScenarioSpec& spec, double sigma2_new) {
  spec.validate();
  const Grid grid = spec.grid();
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> cross(grid.size(), 0.0);
  for (std::size_t k = 0; k < spec.eigenvalues.size(); ++k) {
    Eigen::VectorXd psi(n);
    for (Eigen::Index g = 0; g < n; ++g) psi(g) = spec.eigenfunction(k, grid[static_cast<std::size_t>(g)]);
    cov += spec.eigenvalues[k] * psi * psi.transpose();
    const double c = spec.response_coef(k) * spec.eigenvalues[k];
    for (Eigen::Index g = 0; g < n; ++g) cross[static_cast<std::size_t>(g)] += c * psi(g);
  }
  auto mean = grid_values(grid, [&](double t) { return spec.mean_at(t); });
  ModelResponseParts response{std::move(cross), 0.0, spec.response_variance()};
  return ModelFit::from_covariance(grid, std::move(mean), std::move(cov), spec.noise_var, sigma2_new,
                                   std::move(response));
}

// ---------------------------------------------------------------------------
// Benchmark

namespace {

struct TestBed {
  const SyntheticDataset* data;
  Eigen::MatrixXd design_noise;  // n_test x G, sparse scenario only
  bool dense;

  // Reading of subject i at grid node g.
  double reading(std::size_t i, std::size_t g) const {
    if (dense) return data->sample[i].values[g];
    return data->truth.trajectories(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) +
           design_noise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g));
  }
};

struct TrajectoryScore {
  double are = 0.0;
  double are_rel = 0.0;
  double latent = 0.0;
};

TrajectoryScore score_trajectory(const ModelFit& model, const Design& design, const TestBed& bed) {
  const DesignPredictor predictor(model, design);
  const Grid& grid = model.grid();
  const auto pts = grid.points();
  const auto w = grid.weights();
  const double width = pts.back() - pts.front();
  const SparseSample& sample = bed.data->sample;
  std::vector<double> u(design.size());
  std::vector<double> curve(grid.size());
  std::vector<double> fitted;
  AreAccumulator acc;
  double latent = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = 0; j < design.size(); ++j) u[j] = bed.reading(i, design.indices()[j]);
    predictor.recover_into(u, curve);
    const SubjectRecord& s = sample[i];
    fitted.resize(s.count());
    for (std::size_t j = 0; j < s.count(); ++j) fitted[j] = interpolate_linear(pts, curve, s.times[j]);
    acc.add(s.values, fitted);
    double ise = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double e = bed.data->truth.trajectories(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) - curve[g];
      ise += w[g] * e * e;
    }
    latent += std::sqrt(ise / width);
  }
  const auto r = acc.result();
  return {r.value, r.relative, latent / static_cast<double>(sample.size())};
}

ErrorPair score_response(const ModelFit& model, const Design& design, const TestBed& bed) {
  const DesignPredictor predictor(model, design);
  const SparseSample& sample = bed.data->sample;
  std::vector<double> u(design.size());
  ApeAccumulator acc;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = 0; j < design.size(); ++j) u[j] = bed.reading(i, design.indices()[j]);
    acc.add(bed.data->responses[i], predictor.predict(u));
  }
  return acc.result();
}

std::vector<BenchmarkRow> run_once(const ScenarioSpec& spec, const BenchmarkOptions& options,
                                   std::size_t run) {
  const std::uint64_t base = derive_seed(options.seed, run);
  const SyntheticDataset train = generate_dataset(spec, spec.n_train, derive_seed(base, train_stream), "train");
  const SyntheticDataset test = generate_dataset(spec, spec.n_test, derive_seed(base, test_stream), "test");

  FitConfig fit;
  fit.grid_size = spec.grid_size;
  fit.ridge = RidgeSetting::noise();
  const ModelFit base_model = fit_components(train.sample, &train.responses, fit);
  const Grid& grid = base_model.grid();

  TestBed bed{&test, {}, spec.kind == ScenarioKind::dense};
  if (!bed.dense) {
    std::mt19937_64 rng(derive_seed(base, noise_stream));
    std::normal_distribution<double> normal(0.0, std::sqrt(spec.noise_var));
    bed.design_noise.resize(static_cast<Eigen::Index>(test.sample.size()), static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index i = 0; i < bed.design_noise.rows(); ++i) {
      for (Eigen::Index g = 0; g < bed.design_noise.cols(); ++g) bed.design_noise(i, g) = normal(rng);
    }
  }

  std::optional<ModifiedCvPlan> plan;
  std::vector<double> omega;
  if (options.ridge.mode == RidgeMode::automatic) {
    omega = ridge_candidates(base_model, options.omega_multiples);
    if (!is_dense_on(train.sample, grid)) {
      ModifiedCvOptions cv = options.modified_cv;
      cv.seed = derive_seed(base, cv_stream);
      plan.emplace(train.sample, &train.responses, fit, cv);
    }
  }
  auto model_for = [&](Target target, std::size_t p) {
    switch (options.ridge.mode) {
      case RidgeMode::fixed: return base_model.with_ridge(options.ridge.value);
      case RidgeMode::noise: return base_model;
      case RidgeMode::automatic: break;
    }
    const RidgeSelection sel =
        plan ? plan->select(target, omega, p)
             : select_ridge_cv(base_model, train.sample, &train.responses, target, omega, p,
                               SearchMethod::greedy, options.modified_cv.max_extensions);
    return base_model.with_ridge(sel.sigma2_new);
  };

  std::vector<BenchmarkRow> rows;
  for (std::size_t p : options.p_list) {
    const ModelFit traj_model = model_for(Target::trajectory, p);
    const ModelFit resp_model = model_for(Target::response, p);
    const auto traj_policy = FeasibilityPolicy::defaults_for(traj_model);
    const auto resp_policy = FeasibilityPolicy::defaults_for(resp_model);

    for (BenchmarkMethod method : options.methods) {
      BenchmarkRow row;
      row.run = run;
      row.scenario = spec.kind;
      row.p = p;
      row.method = method;
      row.ridge_trajectory = traj_model.sigma2_new();
      row.ridge_response = resp_model.sigma2_new();
      if (method == BenchmarkMethod::random_median) {
        const auto designs = random_designs(grid, p, options.random_count, derive_seed(base, random_stream, p));
        std::vector<std::pair<TrajectoryScore, std::size_t>> traj;
        std::vector<std::pair<ErrorPair, std::size_t>> resp;
        for (std::size_t r = 0; r < designs.size(); ++r) {
          traj.emplace_back(score_trajectory(traj_model, designs[r], bed), r);
          resp.emplace_back(score_response(resp_model, designs[r], bed), r);
        }
        const std::size_t mid = (designs.size() - 1) / 2;
        std::nth_element(traj.begin(), traj.begin() + static_cast<std::ptrdiff_t>(mid), traj.end(),
                         [](const auto& a, const auto& b) {
                           return a.first.are < b.first.are || (a.first.are == b.first.are && a.second < b.second);
                         });
        std::nth_element(resp.begin(), resp.begin() + static_cast<std::ptrdiff_t>(mid), resp.end(),
                         [](const auto& a, const auto& b) {
                           return a.first.value < b.first.value ||
                                  (a.first.value == b.first.value && a.second < b.second);
                         });
        const auto& t = traj[mid];
        const auto& y = resp[mid];
        row.are = t.first.are;
        row.are_rel = t.first.are_rel;
        row.latent_rmse = t.first.latent;
        row.ape = y.first.value;
        row.ape_rel = y.first.relative;
        const auto dt = designs[t.second].times();
        const auto dy = designs[y.second].times();
        row.design_trajectory.assign(dt.begin(), dt.end());
        row.design_response.assign(dy.begin(), dy.end());
      } else {
        const SearchMethod sm = method == BenchmarkMethod::optimal_exhaustive ? SearchMethod::exhaustive
                                                                              : SearchMethod::greedy;
        const SearchResult dt = run_search(sm, traj_model, p, Target::trajectory, traj_policy);
        const SearchResult dy = run_search(sm, resp_model, p, Target::response, resp_policy);
        const TrajectoryScore ts = score_trajectory(traj_model, dt.design, bed);
        const ErrorPair ys = score_response(resp_model, dy.design, bed);
        row.are = ts.are;
        row.are_rel = ts.are_rel;
        row.latent_rmse = ts.latent;
        row.ape = ys.value;
        row.ape_rel = ys.relative;
        row.design_trajectory.assign(dt.design.times().begin(), dt.design.times().end());
        row.design_response.assign(dy.design.times().begin(), dy.design.times().end());
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

BenchmarkReport run_benchmark(const ScenarioSpec& spec, const BenchmarkOptions& options) {
  spec.validate();
  if (options.runs == 0) throw Error(ErrorKind::invalid_argument, "runs must be >= 1");
  if (options.p_list.empty() || options.methods.empty()) {
    throw Error(ErrorKind::invalid_argument, "benchmark needs at least one p and one method");
  }
  for (std::size_t p : options.p_list) {
    if (p == 0 || p > spec.grid_size) {
      throw Error(ErrorKind::invalid_argument, "p = " + std::to_string(p) + " must lie in [1, grid size]");
    }
  }
  std::vector<std::vector<BenchmarkRow>> per_run(options.runs);
  parallel_for(options.runs, [&](std::size_t r) { per_run[r] = run_once(spec, options, r); });

  BenchmarkReport report{spec, options, {}};
  for (auto& rows : per_run) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<BenchmarkCell> BenchmarkReport::summary() const {
  std::vector<BenchmarkCell> cells;
  for (std::size_t p : options.p_list) {
    for (BenchmarkMethod m : options.methods) {
      std::vector<double> are, are_rel, ape, ape_rel, latent;
      for (const auto& row : rows) {
        if (row.p != p || row.method != m) continue;
        are.push_back(row.are);
        are_rel.push_back(row.are_rel);
        ape.push_back(row.ape);
        ape_rel.push_back(row.ape_rel);
        latent.push_back(row.latent_rmse);
      }
      if (are.empty()) continue;
      BenchmarkCell c;
      c.p = p;
      c.method = m;
      c.runs = are.size();
      c.are_mean = mean(are);
      c.are_median = median(are);
      c.are_rel_mean = mean(are_rel);
      c.ape_mean = mean(ape);
      c.ape_median = median(ape);
      c.ape_rel_mean = mean(ape_rel);
      c.latent_rmse_mean = mean(latent);
      cells.push_back(c);
    }
  }
  return cells;
}

std::optional<BenchmarkCell> BenchmarkReport::cell(std::size_t p, BenchmarkMethod method) const {
  for (const auto& c : summary()) {
    if (c.p == p && c.method == method) return c;
  }
  return std::nullopt;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "run,scenario,p,method,are,are_rel,ape,ape_rel,latent_rmse\n";
  for (const auto& r : report.rows) {
    out << r.run + 1 << ',' << to_string(r.scenario) << ',' << r.p << ',' << to_string(r.method) << ','
        << format_double(r.are) << ',' << format_double(r.are_rel) << ',' << format_double(r.ape) << ','
        << format_double(r.ape_rel) << ',' << format_double(r.latent_rmse) << '\n';
  }
}

}  // namespace sparse_design
