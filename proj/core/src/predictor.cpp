#include "sparse_design/predictor.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

#include "sparse_design/errors.hpp"

namespace sparse_design {

ObservedDesignValues::ObservedDesignValues(Design d, std::vector<double> values)
    : design(std::move(d)), u(std::move(values)) {
  if (u.size() != design.size()) {
    throw Error(ErrorKind::invalid_argument,
                "expected " + std::to_string(design.size()) + " observed values, got " +
                    std::to_string(u.size()));
  }
}

DesignPredictor::DesignPredictor(const ModelFit& model, const Design& design,
                                 std::optional<FeasibilityPolicy> policy)
    : model_(&model), design_(design) {
  const auto idx = design.indices();
  const std::size_t n = model.grid().size();
  const auto p = static_cast<Eigen::Index>(idx.size());
  for (auto i : idx) {
    if (i >= n) throw Error(ErrorKind::invalid_argument, "design point is not on the model grid");
  }
  const FeasibilityPolicy pol = policy ? *policy : FeasibilityPolicy::defaults_for(model);

  Eigen::MatrixXd a(p, p);
  Eigen::MatrixXd gamma(static_cast<Eigen::Index>(n), p);
  mu_t_.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto gj = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]);
    for (Eigen::Index k = 0; k < p; ++k) {
      a(j, k) = model.cov_ridged()(gj, static_cast<Eigen::Index>(idx[static_cast<std::size_t>(k)]));
    }
    gamma.col(j) = model.cov_psd().col(gj);
    mu_t_(j) = model.mean()[static_cast<std::size_t>(gj)];
  }
  const double me = min_eigenvalue(a);
  if (!(me >= pol.delta0)) {
    throw Error(ErrorKind::conditioning,
                "design covariance submatrix is ill-conditioned (min eigenvalue " +
                    format_double(me) + " < " + format_double(pol.delta0) + ")");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::conditioning, "design covariance submatrix is not positive definite");
  }
  gain_ = llt.solve(gamma.transpose()).transpose();
  if (model.has_response()) {
    Eigen::VectorXd c(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      c(j) = model.response().cross_cov[idx[static_cast<std::size_t>(j)]];
    }
    beta_ = llt.solve(c);
    mu_y_ = model.response().mu_y;
  }
}

Eigen::VectorXd DesignPredictor::centered(std::span<const double> u) const {
  if (static_cast<Eigen::Index>(u.size()) != mu_t_.size()) {
    throw Error(ErrorKind::invalid_argument, "observed values do not match the design size");
  }
  return Eigen::Map<const Eigen::VectorXd>(u.data(), mu_t_.size()) - mu_t_;
}

void DesignPredictor::recover_into(std::span<const double> u, std::span<double> out) const {
  const Eigen::VectorXd d = centered(u);
  const auto mean = model_->mean();
  if (out.size() != mean.size()) {
    throw Error(ErrorKind::invalid_argument, "output buffer does not match the grid");
  }
  Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
  o.noalias() = gain_ * d;
  for (std::size_t g = 0; g < out.size(); ++g) out[g] += mean[g];
}

RecoveredTrajectory DesignPredictor::recover(std::span<const double> u) const {
  RecoveredTrajectory r{model_->grid(), std::vector<double>(model_->grid().size())};
  recover_into(u, r.values);
  return r;
}

double DesignPredictor::predict(std::span<const double> u) const {
  if (!beta_) {
    throw Error(ErrorKind::invalid_argument,
                "model has no cross-covariance; fit it with responses to predict");
  }
  return mu_y_ + beta_->dot(centered(u));
}

RecoveredTrajectory recover_trajectory(const ModelFit& model, const ObservedDesignValues& obs) {
  return DesignPredictor(model, obs.design).recover(obs.u);
}

double predict_response(const ModelFit& model, const ObservedDesignValues& obs) {
  return DesignPredictor(model, obs.design).predict(obs.u);
}

}  // namespace sparse_design
