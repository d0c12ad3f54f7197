#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_design/data_model.hpp"

namespace sparse_design {

/// Symmetric density supported on [-1, 1].
class Kernel {
 public:
  static Kernel epanechnikov();
  static Kernel from_name(std::string_view name);

  double operator()(double u) const noexcept;
  /// K_h(u) = K(u / h) / h.
  double scaled(double u, double h) const noexcept { return (*this)(u / h) / h; }
  const std::string& name() const noexcept { return name_; }

 private:
  explicit Kernel(std::string name) : name_(std::move(name)) {}
  std::string name_;
};

struct ScatterPoint1D {
  double q;
  double v;
  double weight;
};

struct ScatterPoint2D {
  double q1;
  double q2;
  double v;
  double weight;
};

struct CurveEstimate {
  Grid grid;
  std::vector<double> values;
  double bandwidth = 0.0;
};

struct SurfaceEstimate {
  Grid grid;
  Eigen::MatrixXd values;
  double bandwidth = 0.0;
};

/// Optional bandwidth per smoothing step; nullopt selects by GCV.
struct Bandwidths {
  std::optional<double> mu;
  std::optional<double> cross;
  std::optional<double> autocov;
  std::optional<double> diag;
};

enum class SmoothingProblem { mean, crosscov, autocov, diag };

/// Selector for the mean bandwidth when none is given.
enum class MeanBandwidthMethod { gcv, curve_cv };

/// Local-linear fit at every grid node: intercept of the kernel-weighted
/// least-squares line through the scatter, weights K_h(q - t) * weight.
/// A rank-deficient node retries with h * 1.5 up to three times.
CurveEstimate local_linear_1d(std::span<const ScatterPoint1D> scatter, double h, const Grid& grid,
                              const Kernel& kernel = Kernel::epanechnikov());

/// Bilinear local fit at every (s, t) node with the product kernel,
/// symmetrized as (M + M^T) / 2.
SurfaceEstimate local_linear_2d(std::span<const ScatterPoint2D> scatter, double h, const Grid& grid,
                                const Kernel& kernel = Kernel::epanechnikov());

/// Same 2-D fit without the final symmetrization.
Eigen::MatrixXd local_linear_2d_unsymmetrized(std::span<const ScatterPoint2D> scatter, double h,
                                              const Grid& grid,
                                              const Kernel& kernel = Kernel::epanechnikov());

// Scatter builders matching the pooled objectives: subject weight 1/m_i for
// curves and 1/(m_i (m_i - 1)) for off-diagonal pairs. All but the mean
// scatter use residuals from the mean curve (interpolated linearly at each
// observation time) and, for responses, from the response mean.
std::vector<ScatterPoint1D> mean_scatter(const SparseSample& sample);
std::vector<ScatterPoint1D> crosscov_scatter(const SparseSample& sample,
                                             const ResponseVector& responses,
                                             const CurveEstimate& mean);
std::vector<ScatterPoint1D> diag_scatter(const SparseSample& sample, const CurveEstimate& mean);
std::vector<ScatterPoint2D> autocov_scatter(const SparseSample& sample, const CurveEstimate& mean);

/// Default candidate set: 10 geometric steps from the smallest bandwidth that
/// puts three distinct scatter locations in every grid window, up to half
/// the domain width.
std::vector<double> auto_bandwidth_candidates_1d(std::span<const ScatterPoint1D> scatter,
                                                 const Grid& grid);
std::vector<double> auto_bandwidth_candidates_2d(std::span<const ScatterPoint2D> scatter,
                                                 const Grid& grid);

/// GCV score RSS / (1 - tr(H)/N)^2 for one bandwidth; nullopt when some
/// local system is rank deficient or tr(H) >= N.
std::optional<double> gcv_score_1d(std::span<const ScatterPoint1D> scatter, double h,
                                   const Grid& grid, const Kernel& kernel = Kernel::epanechnikov());
std::optional<double> gcv_score_2d(std::span<const ScatterPoint2D> scatter, double h,
                                   const Grid& grid, const Kernel& kernel = Kernel::epanechnikov());

/// Minimizer of the GCV score over the candidates (empty span = automatic
/// candidates). Near-ties go to the smallest bandwidth.
double select_bandwidth_1d(std::span<const ScatterPoint1D> scatter, const Grid& grid,
                           std::span<const double> candidates = {},
                           const Kernel& kernel = Kernel::epanechnikov());
double select_bandwidth_2d(std::span<const ScatterPoint2D> scatter, const Grid& grid,
                           std::span<const double> candidates = {},
                           const Kernel& kernel = Kernel::epanechnikov());

/// Leave-one-curve-out prediction error of the mean smoother: each
/// subject's observations are predicted from the pooled fit without that
/// subject, weighted by 1/m_i. nullopt when a held-out fit is rank deficient.
std::optional<double> curve_cv_score(const SparseSample& sample, double h,
                                     const Kernel& kernel = Kernel::epanechnikov());
double select_bandwidth_curve_cv(const SparseSample& sample, const Grid& grid,
                                 std::span<const double> candidates = {},
                                 const Kernel& kernel = Kernel::epanechnikov());

double select_bandwidth(SmoothingProblem problem, const SparseSample& sample,
                        const ResponseVector* responses, const Grid& grid,
                        std::span<const double> candidates = {});

CurveEstimate estimate_mean(const SparseSample& sample, std::optional<double> h_mu,
                            const Grid& grid,
                            MeanBandwidthMethod method = MeanBandwidthMethod::gcv);

/// C(t) from the products (U_ij - mu(t_ij)) * (Y_i - mean(Y)).
CurveEstimate estimate_cross_cov(const SparseSample& sample, const ResponseVector& responses,
                                 const CurveEstimate& mean, std::optional<double> h_s,
                                 const Grid& grid);

/// Raw auto-covariance from off-diagonal residual products.
/// Symmetric but not yet positive semidefinite.
SurfaceEstimate estimate_auto_cov_raw(const SparseSample& sample, const CurveEstimate& mean,
                                      std::optional<double> h_r, const Grid& grid);

struct NoiseEstimate {
  double sigma2 = 0.0;
  CurveEstimate diag;  ///< V(t) = Gamma(t,t) + sigma^2, from squared residuals
};

/// sigma^2 = max(0, average over the interior of V(t) - Gamma(t,t)); the
/// interior trims `boundary_cut` of the domain width from each end.
/// Gamma(t,t) comes from a rotated local fit at bandwidth h_R / 2 (linear along
/// the diagonal, quadratic across it), falling back to the surface diagonal
/// where that fit is rank deficient.
NoiseEstimate estimate_noise_variance(const SparseSample& sample, const CurveEstimate& mean,
                                      const SurfaceEstimate& surface_raw, std::optional<double> h_v,
                                      const Grid& grid, double boundary_cut = 0.25);

}  // namespace sparse_design
