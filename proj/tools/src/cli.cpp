#include "sparse_design_cli/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparse_design/sparse_design.hpp"

namespace sparse_design::cli {

namespace {

namespace fs = std::filesystem;

// Writes to the named file, or to `out` for "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
      stream_ = &out;
      return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    file_ = std::make_unique<std::ofstream>(p, std::ios::binary);
    if (!*file_) throw Error(ErrorKind::invalid_argument, "cannot open '" + path + "' for writing");
    stream_ = file_.get();
  }
  std::ostream& stream() { return *stream_; }
  void finish(const std::string& path) {
    stream_->flush();
    if (!*stream_) throw Error(ErrorKind::invalid_argument, "failed writing '" + path + "'");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

void emit(const std::string& path, std::ostream& out, std::string_view text) {
  Sink sink(path, out);
  sink.stream() << text;
  sink.finish(path);
}

std::optional<double> parse_auto_number(const std::string& text, const char* what) {
  if (text.empty() || text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument,
                std::string(what) + " must be 'auto' or a number, got '" + text + "'");
  }
}

RidgeSetting parse_ridge(const std::string& text) {
  if (text == "auto") return RidgeSetting::automatic();
  if (text == "noise") return RidgeSetting::noise();
  const auto v = parse_auto_number(text, "--ridge");
  if (!v || !(*v >= 0.0) || !std::isfinite(*v)) {
    throw Error(ErrorKind::invalid_argument, "--ridge must be 'auto', 'noise' or a value >= 0");
  }
  return RidgeSetting::fixed(*v);
}

std::optional<Domain> parse_domain(const std::vector<double>& bounds) {
  if (bounds.empty()) return std::nullopt;
  if (bounds.size() != 2) throw Error(ErrorKind::invalid_argument, "--domain takes lo,hi");
  return Domain(bounds[0], bounds[1]);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t lead = 0;
    while (lead < cell.size() && cell[lead] == ' ') ++lead;
    out.push_back(cell.substr(lead));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": '" + cell + "' is not a finite number");
}

struct ObservationTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;
};

// `subject_id,t1,...,tp`, one row of design-time values per subject.
ObservationTable read_observations(const std::string& path, const Design& design, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "'" + path + "' is empty");
  const auto header = split_csv_line(line);
  if (header.size() != design.size() + 1) {
    throw Error(ErrorKind::parse, "observation header needs subject_id and " +
                                      std::to_string(design.size()) + " design times");
  }
  const double half_step = 0.5 * (grid.points().back() - grid.points().front()) /
                           static_cast<double>(grid.size() - 1);
  for (std::size_t j = 0; j < design.size(); ++j) {
    const double t = parse_cell(header[j + 1], 1);
    if (std::abs(t - design.times()[j]) > half_step) {
      throw Error(ErrorKind::data, "observation column " + std::to_string(j + 1) + " (t=" + header[j + 1] +
                                       ") does not match design time " +
                                       format_double(design.times()[j]));
    }
  }
  ObservationTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields");
    }
    table.ids.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_cell(cells[j], line_no));
    table.values.push_back(std::move(row));
  }
  if (table.ids.empty()) throw Error(ErrorKind::data, "'" + path + "' has no subjects");
  return table;
}

// ---------------------------------------------------------------------------
// Subcommand options

struct FitArgs {
  std::string data, responses, out = "-";
  std::vector<double> domain;
  std::size_t grid_size = 51;
  std::string h_mu = "auto", h_cross = "auto", h_autocov = "auto", h_diag = "auto";
  std::string mean_method = "gcv";
  std::string ridge = "auto";
  std::string ridge_target = "trajectory";
  std::size_t ridge_p = 3;
  std::vector<double> omega{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::size_t partitions = 10;
  double split = 0.75;
  std::string tau = "auto";
  std::uint64_t seed = 1;
  std::size_t extensions = kDefaultRidgeExtensions;
  double fve = 0.95;
  double boundary_cut = 0.25;
};

struct DesignArgs {
  std::string model, out = "-", target = "trajectory", method = "exhaustive";
  std::size_t p = 0;
  std::optional<double> alpha;
  std::optional<double> delta0;
  bool allow_large = false;
};

struct PredictArgs {
  std::string model, design, obs, out = "-";
};

struct RidgeArgs {
  std::string data, responses, out = "-", target = "trajectory", method = "modified-cv";
  std::vector<double> domain;
  std::size_t grid_size = 51;
  std::size_t p = 3;
  std::vector<double> omega{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> omega_values;
  std::size_t partitions = 10;
  double split = 0.75;
  std::string tau = "auto";
  std::uint64_t seed = 1;
  std::size_t extensions = kDefaultRidgeExtensions;
};

struct SimulateArgs {
  std::string scenario = "dense", out_dir = ".";
  std::size_t runs = 100;
  std::vector<std::size_t> p_list{2, 3, 4};
  std::vector<std::string> methods{"exhaustive", "random"};
  std::uint64_t seed = 1;
  std::size_t n_train = 100, n_test = 1000;
  std::size_t random_count = 100;
  std::string ridge = "auto";
};

struct ConvergeArgs {
  std::string scenario = "sparse", out = "-", csv, target = "trajectory", method = "exhaustive";
  std::vector<std::size_t> n_list{100, 400};
  std::size_t replicates = 20;
  std::size_t p = 2;
  std::uint64_t seed = 1;
};

FitConfig fit_config(const FitArgs& a) {
  FitConfig c;
  c.grid_size = a.grid_size;
  c.bandwidths.mu = parse_auto_number(a.h_mu, "--bandwidth-mu");
  c.bandwidths.cross = parse_auto_number(a.h_cross, "--bandwidth-cross");
  c.bandwidths.autocov = parse_auto_number(a.h_autocov, "--bandwidth-autocov");
  c.bandwidths.diag = parse_auto_number(a.h_diag, "--bandwidth-diag");
  c.mean_bandwidth_method =
      a.mean_method == "curve-cv" ? MeanBandwidthMethod::curve_cv : MeanBandwidthMethod::gcv;
  c.ridge = parse_ridge(a.ridge);
  c.fve_threshold = a.fve;
  c.boundary_cut = a.boundary_cut;
  c.ridge_search.target = parse_target(a.ridge_target);
  c.ridge_search.p = a.ridge_p;
  c.ridge_search.omega_multiples = a.omega;
  c.ridge_search.partitions = a.partitions;
  c.ridge_search.split = a.split;
  c.ridge_search.tau = parse_auto_number(a.tau, "--tau");
  c.ridge_search.seed = a.seed;
  c.ridge_search.max_extensions = a.extensions;
  return c;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

void run_fit(const FitArgs& a, std::ostream& out) {
  const FitConfig config = fit_config(a);
  const SparseSample sample = load_longitudinal(a.data, parse_domain(a.domain));
  std::optional<ResponseVector> responses;
  if (!a.responses.empty()) responses = load_responses(a.responses, sample);
  const ModelFit model = fit_model(sample, responses ? &*responses : nullptr, config);
  emit(a.out, out, model_to_json(model));
}

void run_design(const DesignArgs& a, std::ostream& out) {
  const ModelFit model = load_model(a.model);
  const Target target = parse_target(a.target);
  const SearchMethod method = parse_search_method(a.method);
  if (a.p == 0) throw Error(ErrorKind::invalid_argument, "--p must be at least 1");
  const FeasibilityPolicy policy =
      a.delta0 ? FeasibilityPolicy(*a.delta0) : FeasibilityPolicy::defaults_for(model);
  SearchOptions options;
  options.allow_large = a.allow_large;
  if (a.alpha) {
    const EarliestDesign e = earliest_design(model, a.p, target, *a.alpha, policy, method, options);
    const CriterionResult crit = evaluate_criterion(model, e.design, policy);
    emit(a.out, out, earliest_to_json(e, a.p, target, *a.alpha, crit));
    return;
  }
  const SearchResult result = run_search(method, model, a.p, target, policy, options);
  emit(a.out, out, design_to_json(result));
}

void run_predict(const PredictArgs& a, std::ostream& out) {
  const ModelFit model = load_model(a.model);
  const Design design = load_design(a.design, model.grid());
  const ObservationTable table = read_observations(a.obs, design, model.grid());
  const DesignPredictor predictor(model, design);
  Sink sink(a.out, out);
  std::ostream& os = sink.stream();
  if (design.target() == Target::response) {
    os << "subject_id,prediction\n";
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
      os << table.ids[i] << ',' << format_double(predictor.predict(table.values[i])) << '\n';
    }
  } else {
    os << "subject_id,time,value\n";
    const auto pts = model.grid().points();
    std::vector<double> curve(pts.size());
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
      predictor.recover_into(table.values[i], curve);
      for (std::size_t g = 0; g < pts.size(); ++g) {
        os << table.ids[i] << ',' << format_double(pts[g]) << ',' << format_double(curve[g]) << '\n';
      }
    }
  }
  sink.finish(a.out);
}

void run_ridge(const RidgeArgs& a, std::ostream& out) {
  const SparseSample sample = load_longitudinal(a.data, parse_domain(a.domain));
  std::optional<ResponseVector> responses;
  if (!a.responses.empty()) responses = load_responses(a.responses, sample);
  const ResponseVector* y = responses ? &*responses : nullptr;
  const Target target = parse_target(a.target);
  const RidgeCvMethod method = parse_ridge_cv_method(a.method);

  FitConfig config;
  config.grid_size = a.grid_size;
  config.ridge = RidgeSetting::noise();
  const ModelFit base = fit_components(sample, target == Target::response ? y : nullptr, config);
  const std::vector<double> omega =
      a.omega_values.empty() ? ridge_candidates(base, a.omega) : a.omega_values;

  RidgeSelection sel;
  if (method == RidgeCvMethod::cv) {
    if (!is_dense_on(sample, base.grid())) {
      throw Error(ErrorKind::data,
                  "cross-validation needs every subject observed on the whole grid; use modified-cv");
    }
    sel = select_ridge_cv(base, sample, y, target, omega, a.p, SearchMethod::greedy, a.extensions);
  } else {
    ModifiedCvOptions opts;
    opts.partitions = a.partitions;
    opts.split = a.split;
    opts.tau = parse_auto_number(a.tau, "--tau");
    opts.seed = a.seed;
    opts.max_extensions = a.extensions;
    sel = select_ridge_modified_cv(sample, y, target, omega, a.p, config, opts);
  }
  emit(a.out, out, ridge_to_json(sel));
}

void run_simulate(const SimulateArgs& a) {
  ScenarioSpec spec = parse_scenario(a.scenario) == ScenarioKind::dense ? ScenarioSpec::dense()
                                                                        : ScenarioSpec::sparse();
  spec.n_train = a.n_train;
  spec.n_test = a.n_test;
  BenchmarkOptions options;
  options.runs = a.runs;
  options.p_list = a.p_list;
  options.methods.clear();
  for (const auto& m : a.methods) options.methods.push_back(parse_benchmark_method(m));
  options.seed = a.seed;
  options.random_count = a.random_count;
  options.ridge = parse_ridge(a.ridge);
  const BenchmarkReport report = run_benchmark(spec, options);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const std::string csv = (dir / "benchmark.csv").string();
  {
    Sink sink(csv, std::cout);
    write_benchmark_csv(sink.stream(), report);
    sink.finish(csv);
  }
  write_text_file(dir / "summary.json", benchmark_summary_to_json(report));
}

void run_converge(const ConvergeArgs& a, std::ostream& out) {
  ScenarioSpec spec = parse_scenario(a.scenario) == ScenarioKind::dense ? ScenarioSpec::dense()
                                                                        : ScenarioSpec::sparse();
  spec.seed = a.seed;
  ConvergenceOptions options;
  options.method = parse_search_method(a.method);
  const ConvergenceReport report =
      convergence_study(spec, a.n_list, a.replicates, a.p, parse_target(a.target), options);
  if (!a.csv.empty()) {
    Sink sink(a.csv, out);
    write_convergence_csv(sink.stream(), report);
    sink.finish(a.csv);
  }
  emit(a.out, out, convergence_to_json(report));
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal sparse designs for longitudinal data", "sparse-design"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI or TOML file with option values");

  std::size_t threads = 0;
  std::string log_level = "warn";
  app.add_option("--threads", threads, "Worker threads (0 = automatic)")
      ->envname("SPARSE_DESIGN_THREADS");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate model components from a pilot sample");
  fit_cmd->add_option("--data", fit.data, "Longitudinal CSV: subject_id,time,value")->required();
  fit_cmd->add_option("--responses", fit.responses, "Response CSV: subject_id,response");
  fit_cmd->add_option("--domain", fit.domain, "Domain bounds lo,hi")->delimiter(',');
  fit_cmd->add_option("--grid-size", fit.grid_size, "Number of grid points")->check(CLI::Range(2, 100000));
  fit_cmd->add_option("--bandwidth-mu", fit.h_mu, "Mean bandwidth or auto");
  fit_cmd->add_option("--mean-bandwidth-method", fit.mean_method, "Mean bandwidth selector")
      ->check(CLI::IsMember({"gcv", "curve-cv"}));
  fit_cmd->add_option("--bandwidth-cross", fit.h_cross, "Cross-covariance bandwidth or auto");
  fit_cmd->add_option("--bandwidth-autocov", fit.h_autocov, "Auto-covariance bandwidth or auto");
  fit_cmd->add_option("--bandwidth-diag", fit.h_diag, "Diagonal (noise) bandwidth or auto");
  fit_cmd->add_option("--ridge", fit.ridge, "auto, noise or a value");
  fit_cmd->add_option("--ridge-target", fit.ridge_target, "Target used by --ridge auto");
  fit_cmd->add_option("--ridge-p", fit.ridge_p, "Design size used by --ridge auto");
  fit_cmd->add_option("--omega", fit.omega, "Ridge candidates as multiples of the noise estimate")
      ->delimiter(',');
  fit_cmd->add_option("--L", fit.partitions, "Modified-CV partitions");
  fit_cmd->add_option("--split", fit.split, "Modified-CV training fraction");
  fit_cmd->add_option("--tau", fit.tau, "Modified-CV match tolerance or auto");
  fit_cmd->add_option("--seed", fit.seed, "Modified-CV seed");
  fit_cmd->add_option("--ridge-extensions", fit.extensions, "Boundary extensions of the candidates");
  fit_cmd->add_option("--fve", fit.fve, "Fraction of variance explained for beta")
      ->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_option("--boundary-cut", fit.boundary_cut, "Trimmed fraction for the noise estimate");
  fit_cmd->add_option("--out", fit.out, "Model JSON path (- for stdout)");

  DesignArgs design;
  auto* design_cmd = app.add_subcommand("design", "Select an optimal design from a fitted model");
  design_cmd->add_option("--model", design.model, "Model JSON")->required();
  design_cmd->add_option("--target", design.target, "trajectory or response");
  design_cmd->add_option("--p", design.p, "Number of design points")->required();
  design_cmd->add_option("--method", design.method, "exhaustive or greedy");
  design_cmd->add_option("--alpha", design.alpha, "Earliest design reaching (1 - alpha) of R^2");
  design_cmd->add_option("--delta0", design.delta0, "Feasibility threshold on the smallest eigenvalue");
  design_cmd->add_flag("--allow-large", design.allow_large, "Lift the exhaustive search size cap");
  design_cmd->add_option("--out", design.out, "Design JSON path (- for stdout)");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Recover trajectories or predict responses");
  predict_cmd->add_option("--model", predict.model, "Model JSON")->required();
  predict_cmd->add_option("--design", predict.design, "Design JSON")->required();
  predict_cmd->add_option("--obs", predict.obs, "CSV: subject_id,t1,...,tp")->required();
  predict_cmd->add_option("--out", predict.out, "Prediction CSV path (- for stdout)");

  RidgeArgs ridge;
  auto* ridge_cmd = app.add_subcommand("ridge", "Select the ridge parameter by cross-validation");
  ridge_cmd->add_option("--data", ridge.data, "Longitudinal CSV")->required();
  ridge_cmd->add_option("--responses", ridge.responses, "Response CSV");
  ridge_cmd->add_option("--domain", ridge.domain, "Domain bounds lo,hi")->delimiter(',');
  ridge_cmd->add_option("--grid-size", ridge.grid_size, "Number of grid points");
  ridge_cmd->add_option("--target", ridge.target, "trajectory or response");
  ridge_cmd->add_option("--p", ridge.p, "Number of design points");
  ridge_cmd->add_option("--method", ridge.method, "cv or modified-cv");
  ridge_cmd->add_option("--L", ridge.partitions, "Partitions");
  ridge_cmd->add_option("--split", ridge.split, "Training fraction");
  ridge_cmd->add_option("--tau", ridge.tau, "Match tolerance or auto");
  ridge_cmd->add_option("--omega", ridge.omega, "Candidates as multiples of the noise estimate")
      ->delimiter(',');
  ridge_cmd->add_option("--omega-values", ridge.omega_values, "Candidates as absolute values")
      ->delimiter(',');
  ridge_cmd->add_option("--seed", ridge.seed, "Partition seed");
  ridge_cmd->add_option("--extensions", ridge.extensions, "Boundary extensions of the candidates");
  ridge_cmd->add_option("--out", ridge.out, "Ridge JSON path (- for stdout)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Benchmark optimal against random designs");
  sim_cmd->add_option("--scenario", sim.scenario, "dense or sparse");
  sim_cmd->add_option("--runs", sim.runs, "Simulation runs");
  sim_cmd->add_option("--p-list", sim.p_list, "Design sizes")->delimiter(',');
  sim_cmd->add_option("--methods", sim.methods, "exhaustive, greedy, random")->delimiter(',');
  sim_cmd->add_option("--seed", sim.seed, "Master seed");
  sim_cmd->add_option("--n-train", sim.n_train, "Training subjects per run");
  sim_cmd->add_option("--n-test", sim.n_test, "Test subjects per run");
  sim_cmd->add_option("--random-count", sim.random_count, "Random designs per run");
  sim_cmd->add_option("--ridge", sim.ridge, "auto, noise or a value");
  sim_cmd->add_option("--out-dir", sim.out_dir, "Directory for benchmark.csv and summary.json");

  ConvergeArgs conv;
  auto* conv_cmd = app.add_subcommand("converge", "Design distance against the population design");
  conv_cmd->add_option("--scenario", conv.scenario, "dense or sparse");
  conv_cmd->add_option("--n-list", conv.n_list, "Pilot sample sizes")->delimiter(',');
  conv_cmd->add_option("--replicates", conv.replicates, "Replicates per sample size");
  conv_cmd->add_option("--p", conv.p, "Number of design points");
  conv_cmd->add_option("--target", conv.target, "trajectory or response");
  conv_cmd->add_option("--method", conv.method, "exhaustive or greedy");
  conv_cmd->add_option("--seed", conv.seed, "Master seed");
  conv_cmd->add_option("--csv", conv.csv, "Per-replicate CSV path");
  conv_cmd->add_option("--out", conv.out, "Report JSON path (- for stdout)");

  auto* version_cmd = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") {
      throw Error(ErrorKind::invalid_argument, "unknown log level '" + log_level + "'");
    }
    spdlog::set_level(level);
    set_thread_count(threads);

    if (*fit_cmd) run_fit(fit, out);
    else if (*design_cmd) run_design(design, out);
    else if (*predict_cmd) run_predict(predict, out);
    else if (*ridge_cmd) run_ridge(ridge, out);
    else if (*sim_cmd) run_simulate(sim);
    else if (*conv_cmd) run_converge(conv, out);
    else if (*version_cmd) out << version() << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("sparse-design");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sparse_design::cli
