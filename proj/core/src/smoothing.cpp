#include "sparse_design/smoothing.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparse_design/errors.hpp"
#include "sparse_design/numeric.hpp"
#include "sparse_design/parallel.hpp"

namespace sparse_design {

// ---------------------------------------------------------------------------
// Kernel

Kernel Kernel::epanechnikov() { return Kernel("epanechnikov"); }

Kernel Kernel::from_name(std::string_view name) {
  if (name == "epanechnikov") return epanechnikov();
  throw Error(ErrorKind::invalid_argument, "unknown kernel '" + std::string(name) + "'");
}

double Kernel::operator()(double u) const noexcept {
  const double a = std::abs(u);
  return a < 1.0 ? 0.75 * (1.0 - a * a) : 0.0;
}

namespace {

constexpr double kEscalation = 1.5;
constexpr int kMaxEscalations = 3;
// Bandwidth of the rotated diagonal fit relative to the surface bandwidth.
constexpr double kDiagonalFitFactor = 0.5;
constexpr double kRankTolerance = 1e-10;

// Scatter points sharing an exact location are pooled; the local normal
// equations and the GCV terms only depend on these per-location sums.
struct Pooled1D {
  std::vector<double> q, sw, swv, swvv;
  std::size_t raw_count = 0;
  double total_swvv = 0.0;
};

struct Pooled2D {
  std::vector<double> q1, q2, sw, swv, swvv;
  std::size_t raw_count = 0;
  double total_swvv = 0.0;
};

Pooled1D pool(std::span<const ScatterPoint1D> scatter) {
  std::vector<std::size_t> order(scatter.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scatter[a].q < scatter[b].q; });
  Pooled1D out;
  out.raw_count = scatter.size();
  for (std::size_t idx : order) {
    const auto& p = scatter[idx];
    if (!std::isfinite(p.q) || !std::isfinite(p.v) || !(p.weight > 0.0)) {
      throw Error(ErrorKind::data, "scatter needs finite locations/values and positive weights");
    }
    if (out.q.empty() || out.q.back() != p.q) {
      out.q.push_back(p.q);
      out.sw.push_back(0.0);
      out.swv.push_back(0.0);
      out.swvv.push_back(0.0);
    }
    out.sw.back() += p.weight;
    out.swv.back() += p.weight * p.v;
    out.swvv.back() += p.weight * p.v * p.v;
    out.total_swvv += p.weight * p.v * p.v;
  }
  return out;
}

Pooled2D pool(std::span<const ScatterPoint2D> scatter) {
  std::vector<std::size_t> order(scatter.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scatter[a].q1 != scatter[b].q1) return scatter[a].q1 < scatter[b].q1;
    return scatter[a].q2 < scatter[b].q2;
  });
  Pooled2D out;
  out.raw_count = scatter.size();
  for (std::size_t idx : order) {
    const auto& p = scatter[idx];
    if (!std::isfinite(p.q1) || !std::isfinite(p.q2) || !std::isfinite(p.v) ||
        !(p.weight > 0.0)) {
      throw Error(ErrorKind::data, "scatter needs finite locations/values and positive weights");
    }
    if (out.q1.empty() || out.q1.back() != p.q1 || out.q2.back() != p.q2) {
      out.q1.push_back(p.q1);
      out.q2.push_back(p.q2);
      out.sw.push_back(0.0);
      out.swv.push_back(0.0);
      out.swvv.push_back(0.0);
    }
    out.sw.back() += p.weight;
    out.swv.back() += p.weight * p.v;
    out.swvv.back() += p.weight * p.v * p.v;
    out.total_swvv += p.weight * p.v * p.v;
  }
  return out;
}

struct LocalFit {
  double value = 0.0;
  double inverse00 = 0.0;  // (X^T W X)^{-1}[0,0], for the hat diagonal
};

struct Sums1D {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;

  void add(double d, double k, double w, double wv) {
    const double kw = k * w;
    s0 += kw;
    s1 += kw * d;
    s2 += kw * d * d;
    t0 += k * wv;
    t1 += k * wv * d;
  }
  std::optional<LocalFit> solve() const {
    const double det = s0 * s2 - s1 * s1;
    if (!(s0 > 0.0) || !(s2 > 0.0) || !(det > kRankTolerance * s0 * s2)) return std::nullopt;
    return LocalFit{(s2 * t0 - s1 * t1) / det, s2 / det};
  }
};

Sums1D sums_1d(const Pooled1D& data, double x, double h, const Kernel& kernel) {
  Sums1D sums;
  auto it = std::upper_bound(data.q.begin(), data.q.end(), x - h);
  for (std::size_t i = static_cast<std::size_t>(it - data.q.begin()); i < data.q.size(); ++i) {
    const double d = data.q[i] - x;
    if (d >= h) break;
    const double k = kernel.scaled(d, h);
    if (k <= 0.0) continue;
    sums.add(d, k, data.sw[i], data.swv[i]);
  }
  return sums;
}

std::optional<LocalFit> fit_1d(const Pooled1D& data, double x, double h, const Kernel& kernel) {
  return sums_1d(data, x, h, kernel).solve();
}

// Solves the 3x3 symmetric system after unit-diagonal scaling; rejects
// pivots below kRankTolerance.
std::optional<LocalFit> solve3(const double (&s)[3][3], const double (&t)[3]) {
  double scale[3];
  for (int i = 0; i < 3; ++i) {
    if (!(s[i][i] > 0.0)) return std::nullopt;
    scale[i] = 1.0 / std::sqrt(s[i][i]);
  }
  double a[9];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a[i * 3 + j] = s[i][j] * scale[i] * scale[j];
  }
  // Cholesky with a relative pivot floor.
  for (int j = 0; j < 3; ++j) {
    double d = a[j * 3 + j];
    for (int k = 0; k < j; ++k) d -= a[j * 3 + k] * a[j * 3 + k];
    if (!(d > kRankTolerance)) return std::nullopt;
    const double l = std::sqrt(d);
    a[j * 3 + j] = l;
    for (int i = j + 1; i < 3; ++i) {
      double v = a[i * 3 + j];
      for (int k = 0; k < j; ++k) v -= a[i * 3 + k] * a[j * 3 + k];
      a[i * 3 + j] = v / l;
    }
  }
  double b[3] = {t[0] * scale[0], t[1] * scale[1], t[2] * scale[2]};
  detail::forward_substitute(a, 3, b);
  detail::backward_substitute(a, 3, b);
  double e[3] = {1.0, 0.0, 0.0};
  detail::forward_substitute(a, 3, e);
  const double inv00 = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
  return LocalFit{b[0] * scale[0], inv00 * scale[0] * scale[0]};
}

std::optional<LocalFit> fit_2d(const Pooled2D& data, double x1, double x2, double h,
                               const Kernel& kernel) {
  double s[3][3] = {};
  double t[3] = {};
  auto it = std::upper_bound(data.q1.begin(), data.q1.end(), x1 - h);
  for (std::size_t i = static_cast<std::size_t>(it - data.q1.begin()); i < data.q1.size(); ++i) {
    const double d1 = data.q1[i] - x1;
    if (d1 >= h) break;
    const double d2 = data.q2[i] - x2;
    if (std::abs(d2) >= h) continue;
    const double k = kernel.scaled(d1, h) * kernel.scaled(d2, h);
    if (k <= 0.0) continue;
    const double kw = k * data.sw[i];
    const double kv = k * data.swv[i];
    s[0][0] += kw;
    s[0][1] += kw * d1;
    s[0][2] += kw * d2;
    s[1][1] += kw * d1 * d1;
    s[1][2] += kw * d1 * d2;
    s[2][2] += kw * d2 * d2;
    t[0] += kv;
    t[1] += kv * d1;
    t[2] += kv * d2;
  }
  s[1][0] = s[0][1];
  s[2][0] = s[0][2];
  s[2][1] = s[1][2];
  return solve3(s, t);
}

// Rotated fit at (x, x): linear along the diagonal, quadratic across it.
std::optional<LocalFit> fit_diagonal(const Pooled2D& data, double x, double h,
                                     const Kernel& kernel) {
  double s[3][3] = {};
  double t[3] = {};
  auto it = std::upper_bound(data.q1.begin(), data.q1.end(), x - h);
  for (std::size_t i = static_cast<std::size_t>(it - data.q1.begin()); i < data.q1.size(); ++i) {
    const double d1 = data.q1[i] - x;
    if (d1 >= h) break;
    const double d2 = data.q2[i] - x;
    if (std::abs(d2) >= h) continue;
    const double k = kernel.scaled(d1, h) * kernel.scaled(d2, h);
    if (k <= 0.0) continue;
    const double u = (d1 + d2) / std::sqrt(2.0);
    const double v2 = 0.5 * (d1 - d2) * (d1 - d2);
    const double kw = k * data.sw[i];
    const double kv = k * data.swv[i];
    s[0][0] += kw;
    s[0][1] += kw * u;
    s[0][2] += kw * v2;
    s[1][1] += kw * u * u;
    s[1][2] += kw * u * v2;
    s[2][2] += kw * v2 * v2;
    t[0] += kv;
    t[1] += kv * u;
    t[2] += kv * v2;
  }
  s[1][0] = s[0][1];
  s[2][0] = s[0][2];
  s[2][1] = s[1][2];
  return solve3(s, t);
}

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorKind::invalid_argument, "bandwidth must be positive and finite");
  }
}

std::vector<double> geometric_candidates(double h_min, double h_max) {
  if (!(h_min < h_max)) return {h_min};
  std::vector<double> out(10);
  const double ratio = std::pow(h_max / h_min, 1.0 / 9.0);
  for (int k = 0; k < 10; ++k) out[k] = h_min * std::pow(ratio, k);
  out.back() = h_max;
  return out;
}

double third_smallest(std::vector<double>& d) {
  std::nth_element(d.begin(), d.begin() + 2, d.end());
  return d[2];
}

template <typename Score>
double pick_bandwidth(std::span<const double> candidates, double tolerance, Score&& score) {
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::optional<double>> scores(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    check_bandwidth(sorted[i]);
    scores[i] = score(sorted[i]);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : scores) {
    if (s) best = std::min(best, *s);
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorKind::infeasible, "no feasible bandwidth candidate");
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (scores[i] && *scores[i] <= best + tolerance) return sorted[i];
  }
  return sorted.front();  // unreachable
}

}  // namespace

// ---------------------------------------------------------------------------
// Local-linear smoothers

CurveEstimate local_linear_1d(std::span<const ScatterPoint1D> scatter, double h, const Grid& grid,
                              const Kernel& kernel) {
  check_bandwidth(h);
  const Pooled1D data = pool(scatter);
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    double hh = h;
    for (int attempt = 0; attempt <= kMaxEscalations; ++attempt, hh *= kEscalation) {
      if (const auto fit = fit_1d(data, grid[g], hh, kernel)) {
        values[g] = fit->value;
        return;
      }
    }
    throw Error(ErrorKind::numerical, "local-linear fit is rank deficient at grid point t=" +
                                          format_double(grid[g]));
  });
  return CurveEstimate{grid, std::move(values), h};
}

Eigen::MatrixXd local_linear_2d_unsymmetrized(std::span<const ScatterPoint2D> scatter, double h,
                                              const Grid& grid, const Kernel& kernel) {
  check_bandwidth(h);
  const Pooled2D data = pool(scatter);
  const std::size_t n = grid.size();
  Eigen::MatrixXd out(n, n);
  parallel_for(n * n, [&](std::size_t cell) {
    const std::size_t i = cell / n;
    const std::size_t j = cell % n;
    double hh = h;
    for (int attempt = 0; attempt <= kMaxEscalations; ++attempt, hh *= kEscalation) {
      if (const auto fit = fit_2d(data, grid[i], grid[j], hh, kernel)) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fit->value;
        return;
      }
    }
    throw Error(ErrorKind::numerical, "local-linear surface fit is rank deficient at (" +
                                          format_double(grid[i]) + ", " + format_double(grid[j]) +
                                          ")");
  });
  return out;
}

SurfaceEstimate local_linear_2d(std::span<const ScatterPoint2D> scatter, double h, const Grid& grid,
                                const Kernel& kernel) {
  Eigen::MatrixXd m = local_linear_2d_unsymmetrized(scatter, h, grid, kernel);
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return SurfaceEstimate{grid, std::move(sym), h};
}

// ---------------------------------------------------------------------------
// Scatter builders

std::vector<ScatterPoint1D> mean_scatter(const SparseSample& sample) {
  std::vector<ScatterPoint1D> out;
  out.reserve(sample.observation_count());
  for (const auto& s : sample.subjects()) {
    const double w = 1.0 / static_cast<double>(s.count());
    for (std::size_t j = 0; j < s.count(); ++j) out.push_back({s.times[j], s.values[j], w});
  }
  return out;
}

namespace {

std::vector<double> residuals(const SubjectRecord& s, const CurveEstimate& mean) {
  std::vector<double> r(s.count());
  for (std::size_t j = 0; j < s.count(); ++j) {
    r[j] = s.values[j] - interpolate_linear(mean.grid.points(), mean.values, s.times[j]);
  }
  return r;
}

}  // namespace

std::vector<ScatterPoint1D> crosscov_scatter(const SparseSample& sample,
                                             const ResponseVector& responses,
                                             const CurveEstimate& mean) {
  if (responses.size() != sample.size()) {
    throw Error(ErrorKind::invalid_argument, "responses are not paired with the sample");
  }
  const double y_bar = responses.mean();
  std::vector<ScatterPoint1D> out;
  out.reserve(sample.observation_count());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& s = sample[i];
    const double w = 1.0 / static_cast<double>(s.count());
    const auto r = residuals(s, mean);
    for (std::size_t j = 0; j < s.count(); ++j) {
      out.push_back({s.times[j], r[j] * (responses[i] - y_bar), w});
    }
  }
  return out;
}

std::vector<ScatterPoint1D> diag_scatter(const SparseSample& sample, const CurveEstimate& mean) {
  std::vector<ScatterPoint1D> out;
  out.reserve(sample.observation_count());
  for (const auto& s : sample.subjects()) {
    const double w = 1.0 / static_cast<double>(s.count());
    const auto r = residuals(s, mean);
    for (std::size_t j = 0; j < s.count(); ++j) out.push_back({s.times[j], r[j] * r[j], w});
  }
  return out;
}

std::vector<ScatterPoint2D> autocov_scatter(const SparseSample& sample, const CurveEstimate& mean) {
  std::vector<ScatterPoint2D> out;
  for (const auto& s : sample.subjects()) {
    const std::size_t m = s.count();
    if (m < 2) continue;
    const double w = 1.0 / static_cast<double>(m * (m - 1));
    const auto r = residuals(s, mean);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        if (j == k) continue;
        out.push_back({s.times[j], s.times[k], r[j] * r[k], w});
      }
    }
  }
  if (out.empty()) {
    throw Error(ErrorKind::data,
                "auto-covariance needs at least one subject with two or more observations");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bandwidth selection

std::vector<double> auto_bandwidth_candidates_1d(std::span<const ScatterPoint1D> scatter,
                                                 const Grid& grid) {
  const Pooled1D data = pool(scatter);
  if (data.q.size() < 3) {
    throw Error(ErrorKind::data, "bandwidth selection needs at least 3 distinct scatter locations");
  }
  double h_min = 0.0;
  std::vector<double> d(data.q.size());
  for (double x : grid.points()) {
    for (std::size_t i = 0; i < data.q.size(); ++i) d[i] = std::abs(data.q[i] - x);
    h_min = std::max(h_min, third_smallest(d));
  }
  return geometric_candidates(h_min * 1.01, 0.5 * grid.domain().width());
}

std::vector<double> auto_bandwidth_candidates_2d(std::span<const ScatterPoint2D> scatter,
                                                 const Grid& grid) {
  const Pooled2D data = pool(scatter);
  if (data.q1.size() < 3) {
    throw Error(ErrorKind::data, "bandwidth selection needs at least 3 distinct scatter locations");
  }
  const std::size_t n = grid.size();
  std::vector<double> per_node(n * n);
  parallel_for(n * n, [&](std::size_t cell) {
    const double x1 = grid[cell / n];
    const double x2 = grid[cell % n];
    std::vector<double> d(data.q1.size());
    for (std::size_t i = 0; i < data.q1.size(); ++i) {
      d[i] = std::max(std::abs(data.q1[i] - x1), std::abs(data.q2[i] - x2));
    }
    per_node[cell] = third_smallest(d);
  });
  const double h_min = *std::max_element(per_node.begin(), per_node.end());
  return geometric_candidates(h_min * 1.01, 0.5 * grid.domain().width());
}

namespace {

std::optional<double> gcv_pooled(const Pooled1D& data, double h, const Grid& grid,
                                 const Kernel& kernel) {
  check_bandwidth(h);
  for (double x : grid.points()) {
    if (!fit_1d(data, x, h, kernel)) return std::nullopt;
  }
  const std::size_t n = data.q.size();
  std::vector<double> rss(n), trace(n);
  std::vector<char> ok(n, 1);
  const double k0 = kernel.scaled(0.0, h);
  parallel_for(n, [&](std::size_t i) {
    const auto fit = fit_1d(data, data.q[i], h, kernel);
    if (!fit) {
      ok[i] = 0;
      return;
    }
    const double f = fit->value;
    rss[i] = data.swvv[i] - 2.0 * f * data.swv[i] + f * f * data.sw[i];
    trace[i] = k0 * data.sw[i] * fit->inverse00;
  });
  if (std::find(ok.begin(), ok.end(), 0) != ok.end()) return std::nullopt;
  const double total_rss = std::max(0.0, std::accumulate(rss.begin(), rss.end(), 0.0));
  const double tr = std::accumulate(trace.begin(), trace.end(), 0.0);
  const double ratio = tr / static_cast<double>(data.raw_count);
  if (!(ratio < 1.0)) return std::nullopt;
  return total_rss / ((1.0 - ratio) * (1.0 - ratio));
}

std::optional<double> gcv_pooled(const Pooled2D& data, double h, const Grid& grid,
                                 const Kernel& kernel) {
  check_bandwidth(h);
  const std::size_t g = grid.size();
  std::vector<char> grid_ok(g * g, 1);
  parallel_for(g * g, [&](std::size_t cell) {
    if (!fit_2d(data, grid[cell / g], grid[cell % g], h, kernel)) grid_ok[cell] = 0;
  });
  if (std::find(grid_ok.begin(), grid_ok.end(), 0) != grid_ok.end()) return std::nullopt;

  const std::size_t n = data.q1.size();
  std::vector<double> rss(n), trace(n);
  std::vector<char> ok(n, 1);
  const double k0 = kernel.scaled(0.0, h) * kernel.scaled(0.0, h);
  parallel_for(n, [&](std::size_t i) {
    const auto fit = fit_2d(data, data.q1[i], data.q2[i], h, kernel);
    if (!fit) {
      ok[i] = 0;
      return;
    }
    const double f = fit->value;
    rss[i] = data.swvv[i] - 2.0 * f * data.swv[i] + f * f * data.sw[i];
    trace[i] = k0 * data.sw[i] * fit->inverse00;
  });
  if (std::find(ok.begin(), ok.end(), 0) != ok.end()) return std::nullopt;
  const double total_rss = std::max(0.0, std::accumulate(rss.begin(), rss.end(), 0.0));
  const double tr = std::accumulate(trace.begin(), trace.end(), 0.0);
  const double ratio = tr / static_cast<double>(data.raw_count);
  if (!(ratio < 1.0)) return std::nullopt;
  return total_rss / ((1.0 - ratio) * (1.0 - ratio));
}

}  // namespace

std::optional<double> gcv_score_1d(std::span<const ScatterPoint1D> scatter, double h,
                                   const Grid& grid, const Kernel& kernel) {
  return gcv_pooled(pool(scatter), h, grid, kernel);
}

std::optional<double> gcv_score_2d(std::span<const ScatterPoint2D> scatter, double h,
                                   const Grid& grid, const Kernel& kernel) {
  return gcv_pooled(pool(scatter), h, grid, kernel);
}

double select_bandwidth_1d(std::span<const ScatterPoint1D> scatter, const Grid& grid,
                           std::span<const double> candidates, const Kernel& kernel) {
  std::vector<double> autos;
  if (candidates.empty()) {
    autos = auto_bandwidth_candidates_1d(scatter, grid);
    candidates = autos;
  }
  const Pooled1D data = pool(scatter);
  return pick_bandwidth(candidates, 1e-12 * data.total_swvv,
                        [&](double h) { return gcv_pooled(data, h, grid, kernel); });
}

double select_bandwidth_2d(std::span<const ScatterPoint2D> scatter, const Grid& grid,
                           std::span<const double> candidates, const Kernel& kernel) {
  std::vector<double> autos;
  if (candidates.empty()) {
    autos = auto_bandwidth_candidates_2d(scatter, grid);
    candidates = autos;
  }
  const Pooled2D data = pool(scatter);
  return pick_bandwidth(candidates, 1e-12 * data.total_swvv,
                        [&](double h) { return gcv_pooled(data, h, grid, kernel); });
}

std::optional<double> curve_cv_score(const SparseSample& sample, double h, const Kernel& kernel) {
  check_bandwidth(h);
  const Pooled1D data = pool(mean_scatter(sample));
  std::vector<double> loss(sample.size(), 0.0);
  std::vector<char> ok(sample.size(), 1);
  parallel_for(sample.size(), [&](std::size_t i) {
    const SubjectRecord& s = sample[i];
    const double w = 1.0 / static_cast<double>(s.count());
    for (std::size_t j = 0; j < s.count(); ++j) {
      const double x = s.times[j];
      Sums1D sums = sums_1d(data, x, h, kernel);
      for (std::size_t k = 0; k < s.count(); ++k) {
        const double d = s.times[k] - x;
        const double kv = kernel.scaled(d, h);
        if (kv > 0.0) sums.add(d, -kv, w, w * s.values[k]);
      }
      const auto fit = sums.solve();
      if (!fit) {
        ok[i] = 0;
        return;
      }
      const double r = s.values[j] - fit->value;
      loss[i] += w * r * r;
    }
  });
  if (std::find(ok.begin(), ok.end(), 0) != ok.end()) return std::nullopt;
  return std::accumulate(loss.begin(), loss.end(), 0.0);
}

double select_bandwidth_curve_cv(const SparseSample& sample, const Grid& grid,
                                 std::span<const double> candidates, const Kernel& kernel) {
  const auto scatter = mean_scatter(sample);
  std::vector<double> autos;
  if (candidates.empty()) {
    autos = auto_bandwidth_candidates_1d(scatter, grid);
    candidates = autos;
  }
  const Pooled1D data = pool(scatter);
  return pick_bandwidth(candidates, 1e-12 * data.total_swvv,
                        [&](double h) { return curve_cv_score(sample, h, kernel); });
}

double select_bandwidth(SmoothingProblem problem, const SparseSample& sample,
                        const ResponseVector* responses, const Grid& grid,
                        std::span<const double> candidates) {
  if (!candidates.empty() && candidates.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "bandwidth selection needs at least 2 candidates");
  }
  switch (problem) {
    case SmoothingProblem::mean:
      return select_bandwidth_1d(mean_scatter(sample), grid, candidates);
    case SmoothingProblem::diag:
      return select_bandwidth_1d(diag_scatter(sample, estimate_mean(sample, std::nullopt, grid)),
                                 grid, candidates);
    case SmoothingProblem::crosscov:
      if (!responses) {
        throw Error(ErrorKind::invalid_argument, "cross-covariance smoothing needs responses");
      }
      return select_bandwidth_1d(
          crosscov_scatter(sample, *responses, estimate_mean(sample, std::nullopt, grid)), grid,
          candidates);
    case SmoothingProblem::autocov:
      return select_bandwidth_2d(
          autocov_scatter(sample, estimate_mean(sample, std::nullopt, grid)), grid, candidates);
  }
  throw Error(ErrorKind::invalid_argument, "unknown smoothing problem");
}

// ---------------------------------------------------------------------------
// Model components

CurveEstimate estimate_mean(const SparseSample& sample, std::optional<double> h_mu,
                            const Grid& grid, MeanBandwidthMethod method) {
  const auto scatter = mean_scatter(sample);
  double h = 0.0;
  if (h_mu) {
    h = *h_mu;
  } else if (method == MeanBandwidthMethod::curve_cv) {
    h = select_bandwidth_curve_cv(sample, grid);
  } else {
    h = select_bandwidth_1d(scatter, grid);
  }
  return local_linear_1d(scatter, h, grid);
}

CurveEstimate estimate_cross_cov(const SparseSample& sample, const ResponseVector& responses,
                                 const CurveEstimate& mean, std::optional<double> h_s,
                                 const Grid& grid) {
  const auto scatter = crosscov_scatter(sample, responses, mean);
  const double h = h_s ? *h_s : select_bandwidth_1d(scatter, grid);
  return local_linear_1d(scatter, h, grid);
}

SurfaceEstimate estimate_auto_cov_raw(const SparseSample& sample, const CurveEstimate& mean,
                                      std::optional<double> h_r, const Grid& grid) {
  const auto scatter = autocov_scatter(sample, mean);
  const double h = h_r ? *h_r : select_bandwidth_2d(scatter, grid);
  SurfaceEstimate r = local_linear_2d(scatter, h, grid);
  r.values = 0.5 * (r.values + r.values.transpose()).eval();
  return r;
}

NoiseEstimate estimate_noise_variance(const SparseSample& sample, const CurveEstimate& mean,
                                      const SurfaceEstimate& surface_raw, std::optional<double> h_v,
                                      const Grid& grid, double boundary_cut) {
  if (!(boundary_cut >= 0.0 && boundary_cut < 0.5)) {
    throw Error(ErrorKind::invalid_argument, "boundary cut must lie in [0, 0.5)");
  }
  const auto scatter = diag_scatter(sample, mean);
  const double h = h_v ? *h_v : select_bandwidth_1d(scatter, grid);
  CurveEstimate v = local_linear_1d(scatter, h, grid);

  const double lo = grid.domain().lo() + boundary_cut * grid.domain().width();
  const double hi = grid.domain().hi() - boundary_cut * grid.domain().width();
  const Pooled2D pairs = pool(autocov_scatter(sample, mean));
  const double h_r = kDiagonalFitFactor * (surface_raw.bandwidth > 0.0 ? surface_raw.bandwidth : h);
  std::vector<double> ts, diff;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < lo - 1e-12 || grid[g] > hi + 1e-12) continue;
    std::optional<LocalFit> r_tt;
    double hh = h_r;
    for (int attempt = 0; attempt <= kMaxEscalations && !r_tt; ++attempt, hh *= kEscalation) {
      r_tt = fit_diagonal(pairs, grid[g], hh, Kernel::epanechnikov());
    }
    if (!r_tt) {
      const auto gi = static_cast<Eigen::Index>(g);
      r_tt = LocalFit{surface_raw.values(gi, gi), 0.0};
    }
    ts.push_back(grid[g]);
    diff.push_back(v.values[g] - r_tt->value);
  }
  double avg = 0.0;
  if (ts.size() >= 2) {
    avg = trapezoid(ts, diff) / (ts.back() - ts.front());
  } else if (!ts.empty()) {
    avg = diff.front();
  }
  return NoiseEstimate{std::max(0.0, avg), std::move(v)};
}

}  // namespace sparse_design
