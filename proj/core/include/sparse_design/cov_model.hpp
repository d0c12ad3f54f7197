#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_design/data_model.hpp"
#include "sparse_design/smoothing.hpp"

namespace sparse_design {

/// Eigenpairs of a covariance surface under the trapezoid inner product.
/// Columns of `functions` are L2-orthonormal curves on the grid; values are
/// descending. Each function's first grid value with |psi| > 1e-6 is positive.
struct EigenSystem {
  std::vector<double> values;
  Eigen::MatrixXd functions;  ///< grid.size() x values.size()

  std::size_t size() const noexcept { return values.size(); }
  /// Number of eigenvalues above 1e-10 * largest eigenvalue.
  std::size_t positive_count() const noexcept;
  /// The leading `positive_count()` pairs.
  EigenSystem positive_part() const;
};

EigenSystem eigendecompose(const Eigen::MatrixXd& surface, const Grid& grid);
inline EigenSystem eigendecompose(const SurfaceEstimate& surface) {
  return eigendecompose(surface.values, surface.grid);
}

/// Sum over the positive eigenpairs of rho_k psi_k(s) psi_k(t).
Eigen::MatrixXd reconstruct(const EigenSystem& eigen, bool positive_only = true);

SurfaceEstimate project_psd(const SurfaceEstimate& surface, const EigenSystem& eigen);

/// Gamma + sigma2_new * I on the grid nodes.
Eigen::MatrixXd apply_ridge(const Eigen::MatrixXd& psd, double sigma2_new);

struct BetaCurve {
  std::vector<double> values;
  std::size_t components = 0;  ///< K used in the truncated expansion
  double fve = 0.0;            ///< fraction of variance explained by those K
};

/// beta(t) = sum_{k <= K} (sigma_k / rho_k) psi_k(t), sigma_k the trapezoid
/// projection of the cross-covariance on psi_k, K the smallest count whose
/// eigenvalues explain at least `fve_threshold` of the positive spectrum.
BetaCurve estimate_beta(const EigenSystem& eigen, const Grid& grid,
                        std::span<const double> cross_cov, double fve_threshold = 0.95);

struct ModelResponseParts {
  std::vector<double> cross_cov;
  double mu_y = 0.0;
  double var_y = 0.0;
};

/// Provenance that does not affect any computation.
struct ModelMeta {
  Bandwidths bandwidths;
  std::string kernel = "epanechnikov";
  std::string created;
};

/// Everything the design criteria and predictors need, on one grid.
class ModelFit {
 public:
  using ResponseParts = ModelResponseParts;
  using Meta = ModelMeta;

  /// `eigen` must hold the positive eigenpairs of `cov_psd`.
  ModelFit(Grid grid, std::vector<double> mean, Eigen::MatrixXd cov_psd, EigenSystem eigen,
           double sigma2, double sigma2_new, std::optional<ResponseParts> response,
           double fve_threshold = 0.95, Meta meta = {});

  /// Builds the eigen system from cov_psd (which must be PSD).
  static ModelFit from_covariance(Grid grid, std::vector<double> mean, Eigen::MatrixXd cov_psd,
                                  double sigma2, double sigma2_new,
                                  std::optional<ResponseParts> response,
                                  double fve_threshold = 0.95);

  ModelFit with_ridge(double sigma2_new) const;

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov_psd() const noexcept { return cov_psd_; }
  const Eigen::MatrixXd& cov_ridged() const noexcept { return cov_ridged_; }
  const EigenSystem& eigen() const noexcept { return eigen_; }
  double sigma2() const noexcept { return sigma2_; }
  double sigma2_new() const noexcept { return sigma2_new_; }
  double var_x_integral() const noexcept { return var_x_integral_; }
  double fve_threshold() const noexcept { return fve_threshold_; }

  bool has_response() const noexcept { return response_.has_value(); }
  /// Throws when the model was fitted without responses.
  const ResponseParts& response() const;
  std::span<const double> cross_cov() const { return response().cross_cov; }
  double mu_y() const { return response().mu_y; }
  double var_y() const { return response().var_y; }
  const std::optional<BetaCurve>& beta() const noexcept { return beta_; }

  const Meta& meta() const noexcept { return meta_; }
  Meta& meta() noexcept { return meta_; }

 private:
  Grid grid_;
  std::vector<double> mean_;
  Eigen::MatrixXd cov_psd_;
  Eigen::MatrixXd cov_ridged_;
  EigenSystem eigen_;
  double sigma2_;
  double sigma2_new_;
  double var_x_integral_;
  double fve_threshold_;
  std::optional<ResponseParts> response_;
  std::optional<BetaCurve> beta_;
  Meta meta_;
};

enum class RidgeMode {
  fixed,   ///< use RidgeSetting::value
  noise,   ///< use the estimated noise variance
  automatic,  ///< cross-validation (dense pilots) or modified CV (sparse pilots)
};

struct RidgeSetting {
  RidgeMode mode = RidgeMode::automatic;
  double value = 0.0;

  static RidgeSetting fixed(double v) { return {RidgeMode::fixed, v}; }
  static RidgeSetting noise() { return {RidgeMode::noise, 0.0}; }
  static RidgeSetting automatic() { return {RidgeMode::automatic, 0.0}; }
};

struct RidgeSearchConfig {
  Target target = Target::trajectory;
  std::size_t p = 3;
  std::vector<double> omega_multiples{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::size_t partitions = 10;
  double split = 0.75;
  std::optional<double> tau;  ///< defaults to one grid step
  std::uint64_t seed = 1;
  std::size_t max_extensions = 6;  ///< boundary extensions of the candidate set
};

struct FitConfig {
  std::size_t grid_size = 51;
  Bandwidths bandwidths;
  MeanBandwidthMethod mean_bandwidth_method = MeanBandwidthMethod::gcv;
  RidgeSetting ridge;
  double fve_threshold = 0.95;
  double boundary_cut = 0.25;
  RidgeSearchConfig ridge_search;
};

/// Smoothing, eigen analysis, PSD projection, noise variance and (with
/// responses) cross-covariance, mu_Y, var_Y and beta. The ridge is set to
/// the fixed value or the noise estimate; automatic mode is resolved by
/// fit_model and leaves the ridge at the noise estimate here.
ModelFit fit_components(const SparseSample& sample, const ResponseVector* responses,
                        const FitConfig& config);

/// fit_components followed by ridge selection when requested.
ModelFit fit_model(const SparseSample& sample, const ResponseVector* responses,
                   const FitConfig& config);

}  // namespace sparse_design
