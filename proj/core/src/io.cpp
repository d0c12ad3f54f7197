#include "sparse_design/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sparse_design/errors.hpp"

namespace sparse_design {

namespace {

using nlohmann::json;

json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::format, std::string("model file is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::format, std::string("model file field '") + key + "' has the wrong type");
  }
}

std::optional<double> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Eigen::MatrixXd matrix_from(const std::vector<std::vector<double>>& rows, std::size_t cols,
                            const char* what) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw Error(ErrorKind::format, std::string("ragged matrix in '") + what + "'");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string(what) + " is not valid JSON: " + e.what());
  }
}

json criterion_json(const CriterionResult& c) {
  return {{"criterion_raw", number(c.raw)}, {"r2", number(c.r2)},
          {"r2_clamped", c.clamped},        {"normalizer", number(c.normalizer)},
          {"feasible", c.feasible},         {"min_eig", number(c.min_eig)}};
}

}  // namespace

std::string model_to_json(const ModelFit& model) {
  const Grid& grid = model.grid();
  json j;
  j["format"] = kModelFormat;
  j["grid"] = {{"lo", grid.domain().lo()},
               {"hi", grid.domain().hi()},
               {"points", std::vector<double>(grid.points().begin(), grid.points().end())}};
  j["mean"] = std::vector<double>(model.mean().begin(), model.mean().end());
  j["cov_psd"] = matrix_rows(model.cov_psd());
  j["sigma2"] = model.sigma2();
  j["sigma2_new"] = model.sigma2_new();
  j["eigenvalues"] = model.eigen().values;
  j["eigenfunctions"] = matrix_rows(model.eigen().functions.transpose());
  j["fve"] = model.fve_threshold();
  if (model.has_response()) {
    const auto& r = model.response();
    j["cross_cov"] = r.cross_cov;
    j["mu_Y"] = r.mu_y;
    j["var_Y"] = r.var_y;
  }
  if (const auto& b = model.beta()) {
    j["beta"] = b->values;
    j["beta_components"] = b->components;
    j["beta_fve"] = b->fve;
  }
  const auto& meta = model.meta();
  j["meta"] = {{"bandwidths",
                {{"mu", optional_number(meta.bandwidths.mu)},
                 {"cross", optional_number(meta.bandwidths.cross)},
                 {"autocov", optional_number(meta.bandwidths.autocov)},
                 {"diag", optional_number(meta.bandwidths.diag)}}},
               {"kernel", meta.kernel},
               {"created", meta.created}};
  return j.dump(1) + "\n";
}

ModelFit model_from_json(std::string_view text) {
  const json j = parse(text, "model file");
  if (!j.is_object() || !j.contains("format") || !j.at("format").is_string()) {
    throw Error(ErrorKind::format, "model file has no format field");
  }
  if (j.at("format").get<std::string>() != kModelFormat) {
    throw Error(ErrorKind::format, "unsupported model format '" + j.at("format").get<std::string>() +
                                       "', expected '" + std::string(kModelFormat) + "'");
  }
  const json& g = j.at("grid");
  Grid grid(Domain(field<double>(g, "lo"), field<double>(g, "hi")),
            field<std::vector<double>>(g, "points"));
  const std::size_t n = grid.size();

  auto mean = field<std::vector<double>>(j, "mean");
  const auto cov_rows = field<std::vector<std::vector<double>>>(j, "cov_psd");
  if (cov_rows.size() != n || mean.size() != n) {
    throw Error(ErrorKind::format, "model arrays do not match the grid size");
  }
  Eigen::MatrixXd cov = matrix_from(cov_rows, n, "cov_psd");

  EigenSystem eigen;
  eigen.values = field<std::vector<double>>(j, "eigenvalues");
  const auto ef = field<std::vector<std::vector<double>>>(j, "eigenfunctions");
  if (ef.size() != eigen.values.size()) {
    throw Error(ErrorKind::format, "eigenvalue and eigenfunction counts differ");
  }
  eigen.functions = ef.empty() ? Eigen::MatrixXd(static_cast<Eigen::Index>(n), 0)
                               : Eigen::MatrixXd(matrix_from(ef, n, "eigenfunctions").transpose());

  std::optional<ModelResponseParts> response;
  if (j.contains("cross_cov") && !j.at("cross_cov").is_null()) {
    response = ModelResponseParts{field<std::vector<double>>(j, "cross_cov"), field<double>(j, "mu_Y"),
                                  field<double>(j, "var_Y")};
  }
  ModelMeta meta;
  if (j.contains("meta")) {
    const json& m = j.at("meta");
    if (m.contains("bandwidths")) {
      const json& b = m.at("bandwidths");
      meta.bandwidths.mu = optional_field(b, "mu");
      meta.bandwidths.cross = optional_field(b, "cross");
      meta.bandwidths.autocov = optional_field(b, "autocov");
      meta.bandwidths.diag = optional_field(b, "diag");
    }
    if (m.contains("kernel")) meta.kernel = m.at("kernel").get<std::string>();
    if (m.contains("created")) meta.created = m.at("created").get<std::string>();
  }
  return ModelFit(std::move(grid), std::move(mean), std::move(cov), std::move(eigen),
                  field<double>(j, "sigma2"), field<double>(j, "sigma2_new"), std::move(response),
                  field<double>(j, "fve"), std::move(meta));
}

void save_model(const std::filesystem::path& path, const ModelFit& model) {
  write_text_file(path, model_to_json(model));
}

ModelFit load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

std::string design_to_json(const SearchResult& result, std::optional<std::uint64_t> seed) {
  json j = criterion_json(result.criterion);
  j["target"] = std::string(to_string(result.design.target()));
  j["p"] = result.design.size();
  j["method"] = to_string(result.method);
  j["design_points"] = std::vector<double>(result.design.times().begin(), result.design.times().end());
  j["design_indices"] =
      std::vector<std::size_t>(result.design.indices().begin(), result.design.indices().end());
  j["evaluated"] = result.evaluated;
  if (seed) j["seed"] = *seed;
  if (!result.trace.empty()) {
    json trace = json::array();
    for (const auto& step : result.trace) trace.push_back({{"added", step.added}, {"raw", number(step.raw)}});
    j["trace"] = std::move(trace);
  }
  return j.dump(1) + "\n";
}

std::string earliest_to_json(const EarliestDesign& result, std::size_t p, Target target, double alpha,
                             const CriterionResult& criterion) {
  json j = criterion_json(criterion);
  j["target"] = std::string(to_string(target));
  j["p"] = p;
  j["method"] = "earliest";
  j["alpha"] = alpha;
  j["t_alpha"] = result.t_alpha;
  j["reached"] = result.reached;
  j["r2_full"] = number(result.r2_full);
  j["design_points"] = std::vector<double>(result.design.times().begin(), result.design.times().end());
  j["design_indices"] =
      std::vector<std::size_t>(result.design.indices().begin(), result.design.indices().end());
  json curve = json::array();
  for (const auto& [t, r2] : result.r2_curve) curve.push_back({t, number(r2)});
  j["r2_curve"] = std::move(curve);
  return j.dump(1) + "\n";
}

Design design_from_json(std::string_view text, const Grid& grid) {
  const json j = parse(text, "design file");
  if (!j.is_object() || !j.contains("design_points") || !j.contains("target")) {
    throw Error(ErrorKind::format, "design file needs 'design_points' and 'target'");
  }
  const auto pts = j.at("design_points").get<std::vector<double>>();
  return Design::from_times(grid, pts, parse_target(j.at("target").get<std::string>()));
}

Design load_design(const std::filesystem::path& path, const Grid& grid) {
  return design_from_json(read_text_file(path), grid);
}

std::string ridge_to_json(const RidgeSelection& sel) {
  json j;
  j["method"] = to_string(sel.method);
  j["target"] = std::string(to_string(sel.target));
  j["p"] = sel.p;
  j["selected"] = sel.sigma2_new;
  json cands = json::array();
  for (const auto& c : sel.candidates) {
    json e = {{"value", c.value}, {"score", number(c.score)}};
    if (c.n_b) e["n_B"] = *c.n_b;
    if (!c.partition_scores.empty()) {
      json ps = json::array();
      for (double s : c.partition_scores) ps.push_back(number(s));
      e["partition_scores"] = std::move(ps);
      e["partition_n_B"] = c.partition_n_b;
    }
    cands.push_back(std::move(e));
  }
  j["candidates"] = std::move(cands);
  j["extensions"] = sel.extensions;
  if (sel.partitions) j["L"] = *sel.partitions;
  if (sel.split) j["split"] = *sel.split;
  if (sel.tau) j["tau"] = *sel.tau;
  if (sel.seed) j["seed"] = *sel.seed;
  return j.dump(1) + "\n";
}

std::string benchmark_summary_to_json(const BenchmarkReport& report) {
  json j;
  j["scenario"] = to_string(report.spec.kind);
  j["runs"] = report.options.runs;
  j["n_train"] = report.spec.n_train;
  j["n_test"] = report.spec.n_test;
  j["grid_size"] = report.spec.grid_size;
  j["seed"] = report.options.seed;
  json table = json::array();
  const auto cells = report.summary();
  for (std::size_t p : report.options.p_list) {
    json row = {{"p", p}};
    json methods = json::object();
    for (const auto& c : cells) {
      if (c.p != p) continue;
      methods[to_string(c.method)] = {{"are_mean", number(c.are_mean)},
                                      {"are_median", number(c.are_median)},
                                      {"are_rel_mean", number(c.are_rel_mean)},
                                      {"ape_mean", number(c.ape_mean)},
                                      {"ape_median", number(c.ape_median)},
                                      {"ape_rel_mean", number(c.ape_rel_mean)},
                                      {"latent_rmse_mean", number(c.latent_rmse_mean)},
                                      {"runs", c.runs}};
    }
    row["methods"] = std::move(methods);
    table.push_back(std::move(row));
  }
  j["table"] = std::move(table);
  return j.dump(1) + "\n";
}

std::string convergence_to_json(const ConvergenceReport& report) {
  json j;
  j["scenario"] = to_string(report.spec.kind);
  j["p"] = report.p;
  j["target"] = std::string(to_string(report.target));
  j["replicates"] = report.replicates;
  j["population_design"] = report.population_design;
  j["population_raw"] = number(report.population_raw);
  j["curvature"] = {{"second_differences", report.curvature.second_differences},
                    {"locally_concave", report.curvature.locally_concave}};
  json per_n = json::array();
  for (std::size_t a = 0; a < report.n_values.size(); ++a) {
    per_n.push_back({{"n", report.n_values[a]},
                     {"median", number(report.medians[a])},
                     {"distances", report.distances[a]}});
  }
  j["n_values"] = report.n_values;
  j["medians"] = report.medians;
  j["per_n"] = std::move(per_n);
  return j.dump(1) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::invalid_argument, "failed writing '" + path.string() + "'");
}

}  // namespace sparse_design
