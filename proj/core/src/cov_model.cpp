#include "sparse_design/cov_model.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "sparse_design/errors.hpp"

namespace sparse_design {

namespace {

constexpr double kPositiveCutoff = 1e-10;
constexpr double kSignThreshold = 1e-6;

Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::size_t EigenSystem::positive_count() const noexcept {
  if (values.empty() || !(values.front() > 0.0)) return 0;
  const double cutoff = kPositiveCutoff * values.front();
  std::size_t k = 0;
  while (k < values.size() && values[k] > cutoff) ++k;
  return k;
}

EigenSystem EigenSystem::positive_part() const {
  const std::size_t k = positive_count();
  EigenSystem out;
  out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
  out.functions = functions.leftCols(static_cast<Eigen::Index>(k));
  return out;
}

EigenSystem eigendecompose(const Eigen::MatrixXd& surface, const Grid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (surface.rows() != n || surface.cols() != n) {
    throw Error(ErrorKind::invalid_argument, "surface does not match the grid");
  }
  const double scale = std::max(1.0, surface.cwiseAbs().maxCoeff());
  if ((surface - surface.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::invalid_argument, "eigendecomposition needs a symmetric surface");
  }
  const Eigen::VectorXd sqrt_w = as_vector(grid.weights()).cwiseSqrt();
  Eigen::MatrixXd weighted = sqrt_w.asDiagonal() * surface * sqrt_w.asDiagonal();
  weighted = 0.5 * (weighted + weighted.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, "symmetric eigensolver did not converge");
  }
  EigenSystem out;
  out.values.resize(static_cast<std::size_t>(n));
  out.functions.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;  // solver returns ascending order
    out.values[static_cast<std::size_t>(k)] = solver.eigenvalues()(src);
    Eigen::VectorXd psi = solver.eigenvectors().col(src).cwiseQuotient(sqrt_w);
    for (Eigen::Index g = 0; g < n; ++g) {
      if (std::abs(psi(g)) > kSignThreshold) {
        if (psi(g) < 0.0) psi = -psi;
        break;
      }
    }
    out.functions.col(k) = psi;
  }
  return out;
}

Eigen::MatrixXd reconstruct(const EigenSystem& eigen, bool positive_only) {
  const std::size_t k = positive_only ? eigen.positive_count() : eigen.size();
  const auto rows = eigen.functions.rows();
  if (k == 0) return Eigen::MatrixXd::Zero(rows, rows);
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd f = eigen.functions.leftCols(kk);
  const Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(eigen.values.data(), kk);
  Eigen::MatrixXd out = f * rho.asDiagonal() * f.transpose();
  return 0.5 * (out + out.transpose());
}

SurfaceEstimate project_psd(const SurfaceEstimate& surface, const EigenSystem& eigen) {
  if (eigen.functions.rows() != static_cast<Eigen::Index>(surface.grid.size())) {
    throw Error(ErrorKind::invalid_argument, "eigen system does not match the surface grid");
  }
  return SurfaceEstimate{surface.grid, reconstruct(eigen, true), surface.bandwidth};
}

Eigen::MatrixXd apply_ridge(const Eigen::MatrixXd& psd, double sigma2_new) {
  if (!(sigma2_new >= 0.0) || !std::isfinite(sigma2_new)) {
    throw Error(ErrorKind::invalid_argument, "ridge parameter must be finite and >= 0");
  }
  Eigen::MatrixXd out = psd;
  out.diagonal().array() += sigma2_new;
  return out;
}

BetaCurve estimate_beta(const EigenSystem& eigen, const Grid& grid,
                        std::span<const double> cross_cov, double fve_threshold) {
  if (!(fve_threshold > 0.0 && fve_threshold <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "fve threshold must lie in (0, 1]");
  }
  if (cross_cov.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "cross-covariance does not match the grid");
  }
  const std::size_t positive = eigen.positive_count();
  if (positive == 0) {
    throw Error(ErrorKind::numerical, "beta estimation needs positive eigenvalues");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < positive; ++k) total += eigen.values[k];

  std::size_t used = positive;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < positive; ++k) {
    cumulative += eigen.values[k];
    if (cumulative >= fve_threshold * total - 1e-12 * total) {
      used = k + 1;
      break;
    }
  }
  double explained = 0.0;
  for (std::size_t k = 0; k < used; ++k) explained += eigen.values[k];

  const auto w = grid.weights();
  BetaCurve beta;
  beta.values.assign(grid.size(), 0.0);
  beta.components = used;
  beta.fve = explained / total;
  for (std::size_t k = 0; k < used; ++k) {
    const auto col = eigen.functions.col(static_cast<Eigen::Index>(k));
    double sigma_k = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      sigma_k += w[g] * cross_cov[g] * col(static_cast<Eigen::Index>(g));
    }
    const double coef = sigma_k / eigen.values[k];
    for (std::size_t g = 0; g < grid.size(); ++g) {
      beta.values[g] += coef * col(static_cast<Eigen::Index>(g));
    }
  }
  return beta;
}

// ---------------------------------------------------------------------------
// ModelFit

ModelFit::ModelFit(Grid grid, std::vector<double> mean, Eigen::MatrixXd cov_psd,
                   EigenSystem eigen, double sigma2, double sigma2_new,
                   std::optional<ResponseParts> response, double fve_threshold, Meta meta)
    : grid_(std::move(grid)),
      mean_(std::move(mean)),
      cov_psd_(std::move(cov_psd)),
      eigen_(std::move(eigen)),
      sigma2_(sigma2),
      sigma2_new_(sigma2_new),
      var_x_integral_(0.0),
      fve_threshold_(fve_threshold),
      response_(std::move(response)),
      meta_(std::move(meta)) {
  const auto n = static_cast<Eigen::Index>(grid_.size());
  if (mean_.size() != grid_.size() || cov_psd_.rows() != n || cov_psd_.cols() != n) {
    throw Error(ErrorKind::invalid_argument, "model components do not share the grid");
  }
  if (eigen_.size() > 0 && eigen_.functions.rows() != n) {
    throw Error(ErrorKind::invalid_argument, "eigenfunctions do not match the grid");
  }
  if (!(sigma2_ >= 0.0)) throw Error(ErrorKind::invalid_argument, "noise variance must be >= 0");
  cov_ridged_ = apply_ridge(cov_psd_, sigma2_new_);
  const auto w = grid_.weights();
  for (Eigen::Index g = 0; g < n; ++g) {
    var_x_integral_ += w[static_cast<std::size_t>(g)] * cov_psd_(g, g);
  }
  if (response_) {
    if (response_->cross_cov.size() != grid_.size()) {
      throw Error(ErrorKind::invalid_argument, "cross-covariance does not match the grid");
    }
    if (eigen_.positive_count() > 0) {
      beta_ = estimate_beta(eigen_, grid_, response_->cross_cov, fve_threshold_);
    }
  }
}

ModelFit ModelFit::from_covariance(Grid grid, std::vector<double> mean, Eigen::MatrixXd cov_psd,
                                   double sigma2, double sigma2_new,
                                   std::optional<ResponseParts> response, double fve_threshold) {
  EigenSystem eig = eigendecompose(cov_psd, grid).positive_part();
  return ModelFit(std::move(grid), std::move(mean), std::move(cov_psd), std::move(eig), sigma2,
                  sigma2_new, std::move(response), fve_threshold);
}

ModelFit ModelFit::with_ridge(double sigma2_new) const {
  ModelFit copy = *this;
  copy.sigma2_new_ = sigma2_new;
  copy.cov_ridged_ = apply_ridge(cov_psd_, sigma2_new);
  return copy;
}

const ModelFit::ResponseParts& ModelFit::response() const {
  if (!response_) {
    throw Error(ErrorKind::invalid_argument,
                "model has no cross-covariance; fit it with responses for the response target");
  }
  return *response_;
}

// ---------------------------------------------------------------------------

ModelFit fit_components(const SparseSample& sample, const ResponseVector* responses,
                        const FitConfig& config) {
  if (responses && responses->size() != sample.size()) {
    throw Error(ErrorKind::invalid_argument, "responses are not paired with the sample");
  }
  const Grid grid = make_grid(sample.domain(), config.grid_size);
  const Bandwidths& bw = config.bandwidths;

  const CurveEstimate mu = estimate_mean(sample, bw.mu, grid, config.mean_bandwidth_method);
  const SurfaceEstimate raw = estimate_auto_cov_raw(sample, mu, bw.autocov, grid);
  const EigenSystem eig = eigendecompose(raw);
  const SurfaceEstimate psd = project_psd(raw, eig);
  const NoiseEstimate noise =
      estimate_noise_variance(sample, mu, raw, bw.diag, grid, config.boundary_cut);

  ModelFit::Meta meta;
  meta.bandwidths.mu = mu.bandwidth;
  meta.bandwidths.autocov = raw.bandwidth;
  meta.bandwidths.diag = noise.diag.bandwidth;

  const double h_mu = mu.bandwidth;
  const double h_r = raw.bandwidth;
  if (h_mu > h_r || h_mu < h_r * h_r) {
    spdlog::warn("bandwidth ordering h_R^2 <= h_mu <= h_R violated (h_mu={}, h_R={})", h_mu, h_r);
  }

  std::optional<ModelFit::ResponseParts> response;
  if (responses) {
    const CurveEstimate cross = estimate_cross_cov(sample, *responses, mu, bw.cross, grid);
    meta.bandwidths.cross = cross.bandwidth;
    response = ModelFit::ResponseParts{cross.values, responses->mean(), responses->variance()};
  }

  double ridge = noise.sigma2;
  if (config.ridge.mode == RidgeMode::fixed) ridge = config.ridge.value;

  return ModelFit(grid, mu.values, psd.values, eig.positive_part(), noise.sigma2, ridge,
                  std::move(response), config.fve_threshold, std::move(meta));
}

}  // namespace sparse_design
