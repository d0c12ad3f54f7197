#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparse_design/cov_model.hpp"
#include "sparse_design/data_model.hpp"
#include "sparse_design/search.hpp"
#include "sparse_design/validation.hpp"

namespace sparse_design {

enum class ScenarioKind { dense, sparse };
std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view text);

/// Karhunen-Loeve simulation model with cosine eigenfunctions.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::dense;
  std::size_t n_train = 100;
  std::size_t n_test = 1000;
  Domain domain{0.0, 10.0};
  std::size_t grid_size = 51;
  std::vector<double> eigenvalues{30.0,        20.0,        12.0,        8.0,
                                  30.0 / 25.0, 30.0 / 36.0, 30.0 / 49.0, 30.0 / 64.0,
                                  30.0 / 81.0, 30.0 / 100.0};
  double noise_var = 0.25;
  std::vector<double> response_coefs{1.0, -2.0, 1.0, -2.0};
  double response_noise_var = 0.25;
  std::size_t m_min = 4;
  std::size_t m_max = 8;
  std::uint64_t seed = 1;

  static ScenarioSpec dense();
  static ScenarioSpec sparse();

  void validate() const;
  Grid grid() const;
  /// t^2 / 2 + 2 sin t + 3 cos 2t.
  double mean_at(double t) const;
  /// sqrt(2 / |T|) cos(k pi (t - lo) / |T|) for k = index + 1.
  double eigenfunction(std::size_t index, double t) const;
  double response_coef(std::size_t index) const;
  double integrated_variance() const;
  double response_variance() const;
};

struct SyntheticTruth {
  Grid grid;
  Eigen::MatrixXd scores;        ///< n x K
  Eigen::MatrixXd trajectories;  ///< n x G, latent X on the grid
  std::vector<double> response_mean;  ///< E(Y | X)
};

struct SyntheticDataset {
  SparseSample sample;
  ResponseVector responses;
  SyntheticTruth truth;
};

/// n subjects drawn with the given seed; subject i uses its own derived
/// stream so the draw is independent of evaluation order.
SyntheticDataset generate_dataset(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed,
                                  const std::string& id_prefix = "s");
/// spec.n_train subjects under spec.seed.
SyntheticDataset generate_dataset(const ScenarioSpec& spec);

/// Population quantities on the spec grid: true mean, covariance, noise,
/// cross-covariance, mu_Y = 0 and var_Y.
ModelFit population_model(const ScenarioSpec& spec, double sigma2_new);

enum class BenchmarkMethod { optimal_exhaustive, optimal_greedy, random_median };
std::string to_string(BenchmarkMethod method);
BenchmarkMethod parse_benchmark_method(std::string_view text);

struct BenchmarkOptions {
  std::size_t runs = 100;
  std::vector<std::size_t> p_list{2, 3, 4};
  std::vector<BenchmarkMethod> methods{BenchmarkMethod::optimal_exhaustive,
                                       BenchmarkMethod::random_median};
  std::size_t random_count = 100;
  RidgeSetting ridge = RidgeSetting::automatic();
  std::vector<double> omega_multiples{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  ModifiedCvOptions modified_cv;
  std::uint64_t seed = 1;
};

struct BenchmarkRow {
  std::size_t run = 0;
  ScenarioKind scenario = ScenarioKind::dense;
  std::size_t p = 0;
  BenchmarkMethod method = BenchmarkMethod::optimal_exhaustive;
  double are = 0.0;
  double are_rel = 0.0;
  double ape = 0.0;
  double ape_rel = 0.0;
  double latent_rmse = 0.0;
  double ridge_trajectory = 0.0;
  double ridge_response = 0.0;
  std::vector<double> design_trajectory;
  std::vector<double> design_response;
};

struct BenchmarkCell {
  std::size_t p = 0;
  BenchmarkMethod method = BenchmarkMethod::optimal_exhaustive;
  std::size_t runs = 0;
  double are_mean = 0.0;
  double are_median = 0.0;
  double are_rel_mean = 0.0;
  double ape_mean = 0.0;
  double ape_median = 0.0;
  double ape_rel_mean = 0.0;
  double latent_rmse_mean = 0.0;
};

struct BenchmarkReport {
  ScenarioSpec spec;
  BenchmarkOptions options;
  std::vector<BenchmarkRow> rows;

  /// One cell per (p, method), in option order.
  std::vector<BenchmarkCell> summary() const;
  std::optional<BenchmarkCell> cell(std::size_t p, BenchmarkMethod method) const;
};

/// Per run: generate training and test data, fit on training data,
/// select designs per p and method, and score the test subjects. ARE
/// columns come from trajectory-target designs, APE columns from
/// response-target designs.
BenchmarkReport run_benchmark(const ScenarioSpec& spec, const BenchmarkOptions& options);

/// `run,scenario,p,method,are,are_rel,ape,ape_rel,latent_rmse`.
void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report);

}  // namespace sparse_design
