#include "sparse_design/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparse_design/errors.hpp"

namespace sparse_design {

std::vector<double> trapezoid_weights(std::span<const double> points) {
  const std::size_t n = points.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double half = 0.5 * (points[i + 1] - points[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

double trapezoid(std::span<const double> points, std::span<const double> values) {
  if (points.size() != values.size()) {
    throw Error(ErrorKind::invalid_argument, "trapezoid: size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    total += 0.5 * (points[i + 1] - points[i]) * (values[i] + values[i + 1]);
  }
  return total;
}

double interpolate_linear(std::span<const double> points, std::span<const double> values,
                          double at) {
  if (points.empty()) throw Error(ErrorKind::invalid_argument, "interpolate: empty abscissa");
  if (at <= points.front()) return values.front();
  if (at >= points.back()) return values.back();
  const auto it = std::upper_bound(points.begin(), points.end(), at);
  const std::size_t hi = static_cast<std::size_t>(it - points.begin());
  const std::size_t lo = hi - 1;
  const double span = points[hi] - points[lo];
  const double frac = (at - points[lo]) / span;
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ (stream * 0xd1342543de82ef95ULL + 1));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t sub) {
  return derive_seed(derive_seed(base, stream), sub);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::invalid_argument, "median of empty sequence");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace detail {

bool cholesky_in_place(double* a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  return true;
}

void forward_substitute(const double* l, std::size_t n, double* b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

void backward_substitute(const double* l, std::size_t n, double* y) {
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * y[k];
    y[ii] = s / l[ii * n + ii];
  }
}

}  // namespace detail

}  // namespace sparse_design
