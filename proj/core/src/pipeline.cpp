#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>

#include "sparse_design/cov_model.hpp"
#include "sparse_design/errors.hpp"
#include "sparse_design/validation.hpp"

namespace sparse_design {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ModelFit fit_model(const SparseSample& sample, const ResponseVector* responses,
                   const FitConfig& config) {
  const RidgeSearchConfig& rs = config.ridge_search;
  if (config.ridge.mode == RidgeMode::automatic && rs.target == Target::response && !responses) {
    throw Error(ErrorKind::invalid_argument, "ridge=auto requires responses for response-target CV");
  }
  ModelFit model = fit_components(sample, responses, config);
  model.meta().created = utc_timestamp();
  if (config.ridge.mode != RidgeMode::automatic) return model;

  const auto omega = ridge_candidates(model, rs.omega_multiples);
  RidgeSelection sel;
  if (is_dense_on(sample, model.grid())) {
    sel = select_ridge_cv(model, sample, responses, rs.target, omega, rs.p, SearchMethod::greedy,
                          rs.max_extensions);
  } else {
    ModifiedCvOptions opts;
    opts.partitions = rs.partitions;
    opts.split = rs.split;
    opts.tau = rs.tau;
    opts.seed = rs.seed;
    opts.max_extensions = rs.max_extensions;
    sel = select_ridge_modified_cv(sample, responses, rs.target, omega, rs.p, config, opts);
  }
  spdlog::info("selected ridge {} by {}", sel.sigma2_new, to_string(sel.method));
  ModelFit out = model.with_ridge(sel.sigma2_new);
  return out;
}

}  // namespace sparse_design
