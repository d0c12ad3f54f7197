#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sparse_design {

/// Trapezoid quadrature weights for an ascending abscissa.
std::vector<double> trapezoid_weights(std::span<const double> points);

double trapezoid(std::span<const double> points, std::span<const double> values);

/// Piecewise-linear interpolation; constant extrapolation outside the range.
double interpolate_linear(std::span<const double> points, std::span<const double> values,
                          double at);

/// Deterministic seed stream splitting (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t sub);

double mean(std::span<const double> values);
/// Sample variance with n - 1 denominator (0 for a single value).
double sample_variance(std::span<const double> values);
double median(std::vector<double> values);

namespace detail {

/// In-place Cholesky factorization of a dense row-major n x n SPD matrix.
/// Returns false when a pivot is not strictly positive. Only the lower
/// triangle is referenced and overwritten.
bool cholesky_in_place(double* a, std::size_t n);

/// Solves L y = b in place (L from cholesky_in_place).
void forward_substitute(const double* l, std::size_t n, double* b);
/// Solves L^T x = y in place.
void backward_substitute(const double* l, std::size_t n, double* y);

}  // namespace detail

}  // namespace sparse_design
