#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "sparse_design/sparse_design.hpp"

namespace oracle {

using namespace sparse_design;

// Reference process on [0, 10]: eigenvalues 30, 20, 12, 8, then 30/k^2,
// eigenfunctions sqrt(0.2) cos(k pi t / 10).
inline double psi(std::size_t k, double t) {
  return std::sqrt(0.2) * std::cos(static_cast<double>(k) * std::numbers::pi * t / 10.0);
}

inline double rho(std::size_t k) {
  switch (k) {
    case 1: return 30.0;
    case 2: return 20.0;
    case 3: return 12.0;
    case 4: return 8.0;
    default: return 30.0 / static_cast<double>(k * k);
  }
}

inline double mu(double t) { return 0.5 * t * t + 2.0 * std::sin(t) + 3.0 * std::cos(2.0 * t); }

inline constexpr double kCoefs[4] = {1.0, -2.0, 1.0, -2.0};

inline Grid grid(std::size_t g = 51) { return make_grid(Domain(0.0, 10.0), g); }

inline Eigen::MatrixXd covariance(const Grid& grid, std::size_t terms = 10) {
  const std::size_t g = grid.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g, g);
  for (std::size_t k = 1; k <= terms; ++k) {
    Eigen::VectorXd v(g);
    for (std::size_t i = 0; i < g; ++i) v(i) = psi(k, grid[i]);
    m += rho(k) * v * v.transpose();
  }
  return m;
}

inline std::vector<double> cross_cov(const Grid& grid) {
  std::vector<double> c(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 1; k <= 4; ++k) c[i] += kCoefs[k - 1] * rho(k) * psi(k, grid[i]);
  }
  return c;
}

inline std::vector<double> mean_on(const Grid& grid) {
  std::vector<double> m(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) m[i] = mu(grid[i]);
  return m;
}

// Rank-1 model rho * psi_1 psi_1^T, optionally with Y = zeta_1 + e.
inline ModelFit rank_one(double sigma2_new, std::optional<double> response_noise = std::nullopt,
                         std::size_t g = 51) {
  const Grid gr = grid(g);
  Eigen::MatrixXd cov(g, g);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) cov(i, j) = 30.0 * psi(1, gr[i]) * psi(1, gr[j]);
  }
  std::optional<ModelResponseParts> resp;
  if (response_noise) {
    ModelResponseParts r;
    for (std::size_t i = 0; i < g; ++i) r.cross_cov.push_back(30.0 * psi(1, gr[i]));
    r.var_y = 30.0 + *response_noise;
    resp = r;
  }
  return ModelFit::from_covariance(gr, mean_on(gr), cov, 0.0, sigma2_new, resp);
}

inline ModelFit reference_population(double sigma2_new = 0.25, std::size_t g = 51) {
  const Grid gr = grid(g);
  ModelResponseParts r;
  r.cross_cov = cross_cov(gr);
  r.var_y = 30.0 + 4.0 * 20.0 + 12.0 + 4.0 * 8.0 + 0.25;
  return ModelFit::from_covariance(gr, mean_on(gr), covariance(gr), 0.25, sigma2_new, r);
}

// Direct quadratic forms for a design, without the library's evaluator.
inline double trajectory_brute(const ModelFit& m, const std::vector<std::size_t>& idx) {
  const std::size_t p = idx.size();
  const Eigen::MatrixXd& gam = m.cov_psd();
  Eigen::MatrixXd a(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) a(i, j) = gam(idx[i], idx[j]) + (i == j ? m.sigma2_new() : 0.0);
  }
  const auto w = m.grid().weights();
  Eigen::MatrixXd g(gam.rows(), p);
  for (std::size_t j = 0; j < p; ++j) g.col(j) = gam.col(idx[j]);
  const Eigen::MatrixXd sol = a.ldlt().solve(g.transpose());
  double total = 0.0;
  for (Eigen::Index s = 0; s < gam.rows(); ++s) total += w[s] * g.row(s).dot(sol.col(s));
  return total;
}

inline double response_brute(const ModelFit& m, const std::vector<std::size_t>& idx) {
  const std::size_t p = idx.size();
  Eigen::MatrixXd a(p, p);
  Eigen::VectorXd c(p);
  for (std::size_t i = 0; i < p; ++i) {
    c(i) = m.cross_cov()[idx[i]];
    for (std::size_t j = 0; j < p; ++j) {
      a(i, j) = m.cov_psd()(idx[i], idx[j]) + (i == j ? m.sigma2_new() : 0.0);
    }
  }
  return c.dot(a.ldlt().solve(c));
}

}  // namespace oracle
