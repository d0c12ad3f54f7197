#include "sparse_design/criteria.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparse_design/errors.hpp"
#include "sparse_design/numeric.hpp"

namespace sparse_design {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  const auto p = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      out(i, j) = m(static_cast<Eigen::Index>(idx[i]), static_cast<Eigen::Index>(idx[j]));
    }
  }
  return out;
}

void check_indices(std::span<const std::size_t> idx, std::size_t n) {
  if (idx.empty()) throw Error(ErrorKind::invalid_argument, "design must contain at least one point");
  for (auto i : idx) {
    if (i >= n) throw Error(ErrorKind::invalid_argument, "design point is not on the model grid");
  }
}

void finish(CriterionResult& r) {
  if (!r.feasible) {
    r.raw = kNegInf;
    r.r2 = kNegInf;
    return;
  }
  const double ratio = r.normalizer > 0.0 ? r.raw / r.normalizer : 0.0;
  r.clamped = ratio > 1.0;
  r.r2 = std::min(ratio, 1.0);
}

struct Scratch {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> rhs;
};

Scratch& scratch(std::size_t p) {
  thread_local Scratch s;
  s.a.resize(p * p);
  s.b.resize(p * p);
  s.rhs.resize(p);
  return s;
}

}  // namespace

FeasibilityPolicy::FeasibilityPolicy(double delta0_value) : delta0(delta0_value) {
  if (!(delta0 > 0.0) || !std::isfinite(delta0)) {
    throw Error(ErrorKind::invalid_argument, "delta0 must be positive");
  }
}

FeasibilityPolicy FeasibilityPolicy::defaults_for(const ModelFit& model) {
  const double g = static_cast<double>(model.grid().size());
  const double d = 1e-8 * model.cov_ridged().trace() / g;
  return FeasibilityPolicy(std::max(d, std::numeric_limits<double>::min()));
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() == 1) return symmetric(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

Feasibility feasibility(const ModelFit& model, const Design& design,
                        const FeasibilityPolicy& policy) {
  check_indices(design.indices(), model.grid().size());
  const double me = min_eigenvalue(submatrix(model.cov_ridged(), design.indices()));
  return {me >= policy.delta0, me};
}

CriterionResult criterion_trajectory(const ModelFit& model, const Design& design,
                                     const FeasibilityPolicy& policy) {
  const auto idx = design.indices();
  const auto f = feasibility(model, design, policy);
  CriterionResult r;
  r.target = Target::trajectory;
  r.normalizer = model.var_x_integral();
  r.feasible = f.feasible;
  r.min_eig = f.min_eig;
  if (f.feasible) {
    const Eigen::MatrixXd a = submatrix(model.cov_ridged(), idx);
    Eigen::MatrixXd gamma(static_cast<Eigen::Index>(idx.size()), model.cov_psd().cols());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      gamma.row(static_cast<Eigen::Index>(j)) = model.cov_psd().row(static_cast<Eigen::Index>(idx[j]));
    }
    const Eigen::MatrixXd solved = a.ldlt().solve(gamma);
    const auto w = model.grid().weights();
    double raw = 0.0;
    for (Eigen::Index g = 0; g < gamma.cols(); ++g) {
      raw += w[static_cast<std::size_t>(g)] * gamma.col(g).dot(solved.col(g));
    }
    r.raw = std::max(raw, 0.0);
  }
  finish(r);
  return r;
}

CriterionResult criterion_response(const ModelFit& model, const Design& design,
                                   const FeasibilityPolicy& policy) {
  const auto& parts = model.response();
  const auto idx = design.indices();
  const auto f = feasibility(model, design, policy);
  CriterionResult r;
  r.target = Target::response;
  r.normalizer = parts.var_y;
  r.feasible = f.feasible;
  r.min_eig = f.min_eig;
  if (f.feasible) {
    const Eigen::MatrixXd a = submatrix(model.cov_ridged(), idx);
    Eigen::VectorXd c(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) c(static_cast<Eigen::Index>(j)) = parts.cross_cov[idx[j]];
    r.raw = std::max(c.dot(a.ldlt().solve(c)), 0.0);
  }
  finish(r);
  return r;
}

CriterionResult evaluate_criterion(const ModelFit& model, const Design& design,
                                   const FeasibilityPolicy& policy) {
  return design.target() == Target::trajectory ? criterion_trajectory(model, design, policy)
                                               : criterion_response(model, design, policy);
}

// ---------------------------------------------------------------------------

CriterionEvaluator::CriterionEvaluator(const ModelFit& model, Target target,
                                       FeasibilityPolicy policy)
    : model_(&model), target_(target), policy_(policy), n_(model.grid().size()) {
  const auto n = static_cast<Eigen::Index>(n_);
  ridged_.resize(n_ * n_);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      ridged_.data(), n, n) = model.cov_ridged();
  if (target == Target::trajectory) {
    normalizer_ = model.var_x_integral();
    const auto w = model.grid().weights();
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);
    const Eigen::MatrixXd m = model.cov_psd() * wv.asDiagonal() * model.cov_psd();
    quad_.resize(n_ * n_);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        quad_.data(), n, n) = 0.5 * (m + m.transpose());
  } else {
    const auto& parts = model.response();
    normalizer_ = parts.var_y;
    cross_ = parts.cross_cov;
  }
}

double CriterionEvaluator::raw(std::span<const std::size_t> indices) const {
  const std::size_t p = indices.size();
  Scratch& s = scratch(p);
  double* a = s.a.data();
  for (std::size_t i = 0; i < p; ++i) {
    const double* row = ridged_.data() + indices[i] * n_;
    for (std::size_t j = 0; j <= i; ++j) a[i * p + j] = row[indices[j]];
  }
  // Feasibility: A - delta0 I must stay positive definite.
  std::copy(a, a + p * p, s.b.data());
  for (std::size_t i = 0; i < p; ++i) s.b[i * p + i] -= policy_.delta0;
  if (!detail::cholesky_in_place(s.b.data(), p)) return kNegInf;
  if (!detail::cholesky_in_place(a, p)) return kNegInf;

  double value = 0.0;
  double* rhs = s.rhs.data();
  if (target_ == Target::response) {
    for (std::size_t i = 0; i < p; ++i) rhs[i] = cross_[indices[i]];
    detail::forward_substitute(a, p, rhs);
    for (std::size_t i = 0; i < p; ++i) value += rhs[i] * rhs[i];
  } else {
    // tr(A^-1 M) = sum_j e_j^T A^-1 M e_j.
    for (std::size_t j = 0; j < p; ++j) {
      const double* mrow = quad_.data() + indices[j] * n_;
      for (std::size_t i = 0; i < p; ++i) rhs[i] = mrow[indices[i]];
      detail::forward_substitute(a, p, rhs);
      detail::backward_substitute(a, p, rhs);
      value += rhs[j];
    }
  }
  return std::max(value, 0.0);
}

CriterionResult CriterionEvaluator::evaluate(std::span<const std::size_t> indices) const {
  check_indices(indices, n_);
  CriterionResult r;
  r.target = target_;
  r.normalizer = normalizer_;
  r.min_eig = min_eigenvalue(submatrix(model_->cov_ridged(), indices));
  r.feasible = r.min_eig >= policy_.delta0;
  if (r.feasible) {
    const double v = raw(indices);
    if (std::isfinite(v)) {
      r.raw = v;
    } else {
      r.feasible = false;
    }
  }
  finish(r);
  return r;
}

}  // namespace sparse_design
