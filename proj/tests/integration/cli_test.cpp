#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sparse_design/sparse_design.hpp"
#include "sparse_design_cli/cli.hpp"

using namespace sparse_design;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = sparse_design::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the timestamped meta block before comparing model files.
std::string without_meta(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("meta");
  return j.dump();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sparse_design_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const auto data = generate_dataset(ScenarioSpec::sparse(), 80, 17);
    save_longitudinal(dir_ / "data.csv", data.sample);
    std::ofstream r(dir_ / "resp.csv");
    write_responses(r, data.responses);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, Version) {
  const auto r = invoke({"version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, std::string(version()) + "\n");
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  const auto unknown = invoke({"fit", "--data", path("data.csv"), "--bogus"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_EQ(unknown.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, MissingFile) {
  const auto r = invoke({"design", "--model", path("absent.json"), "--p", "2"});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error: invalid_argument: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(CliTest, FitDesignPredictRoundTrip) {
  ASSERT_EQ(invoke({"--log-level", "error", "fit", "--data", path("data.csv"), "--responses", path("resp.csv"),
                 "--ridge", "noise", "--out", path("model.json")})
                .code,
            0);
  const auto d = invoke({"design", "--model", path("model.json"), "--target", "response", "--p", "3",
                      "--out", path("design.json")});
  ASSERT_EQ(d.code, 0) << d.err;

  // The CLI pipeline agrees with the in-process one exactly.
  const SparseSample sample = load_longitudinal(path("data.csv"));
  const ResponseVector resp = load_responses(path("resp.csv"), sample);
  FitConfig cfg;
  cfg.ridge = RidgeSetting::noise();
  const ModelFit direct = fit_model(sample, &resp, cfg);
  const ModelFit loaded = load_model(path("model.json"));
  EXPECT_EQ(loaded.cov_ridged(), direct.cov_ridged());
  const auto expected = exhaustive_search(direct, 3, Target::response, FeasibilityPolicy::defaults_for(direct));
  EXPECT_EQ(slurp(path("design.json")), design_to_json(expected));

  const Design design = load_design(path("design.json"), loaded.grid());
  std::ofstream obs(path("obs.csv"));
  obs << "subject_id";
  for (double t : design.times()) obs << ',' << format_double(t);
  obs << "\na";
  for (std::size_t i : design.indices()) obs << ',' << format_double(loaded.mean()[i]);
  obs << "\n";
  obs.close();
  const auto p = invoke({"predict", "--model", path("model.json"), "--design", path("design.json"), "--obs",
                      path("obs.csv")});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(p.out, "subject_id,prediction\na," + format_double(DesignPredictor(loaded, design).predict(
                                                      std::vector<double>{loaded.mean()[design.indices()[0]],
                                                                          loaded.mean()[design.indices()[1]],
                                                                          loaded.mean()[design.indices()[2]]})) +
                       "\n");
}

TEST_F(CliTest, DesignLargerThanGrid) {
  ASSERT_EQ(invoke({"--log-level", "off", "fit", "--data", path("data.csv"), "--ridge", "noise", "--grid-size",
                 "11", "--out", path("model.json")})
                .code,
            0);
  const auto r = invoke({"design", "--model", path("model.json"), "--p", "12"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("grid"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrajectoryPredictionOnGrid) {
  ASSERT_EQ(invoke({"--log-level", "off", "fit", "--data", path("data.csv"), "--ridge", "0.3", "--grid-size",
                 "21", "--out", path("model.json")})
                .code,
            0);
  ASSERT_EQ(invoke({"design", "--model", path("model.json"), "--p", "2", "--method", "greedy", "--out",
                 path("design.json")})
                .code,
            0);
  const Design design = load_design(path("design.json"), load_model(path("model.json")).grid());
  std::ofstream obs(path("obs.csv"));
  obs << "subject_id," << format_double(design.times()[0]) << ',' << format_double(design.times()[1])
      << "\nx,1,2\ny,3,4\n";
  obs.close();
  const auto p = invoke({"predict", "--model", path("model.json"), "--design", path("design.json"), "--obs",
                      path("obs.csv"), "--out", path("pred.csv")});
  ASSERT_EQ(p.code, 0) << p.err;
  const std::string text = slurp(path("pred.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 21);
}

TEST_F(CliTest, ModelWithMetaExcludedIsReproducible) {
  for (const char* name : {"a.json", "b.json"}) {
    ASSERT_EQ(invoke({"--log-level", "off", "fit", "--data", path("data.csv"), "--responses", path("resp.csv"),
                   "--ridge", "auto", "--ridge-p", "2", "--L", "3", "--out", path(name)})
                  .code,
              0);
  }
  EXPECT_EQ(without_meta(slurp(path("a.json"))), without_meta(slurp(path("b.json"))));
}

TEST_F(CliTest, ThreadCountDoesNotChangeOutputs) {
  auto run_all = [&](const std::string& threads, const std::string& tag) {
    const std::vector<std::vector<std::string>> commands{
        {"--threads", threads, "--log-level", "off", "ridge", "--data", path("data.csv"), "--target",
         "trajectory", "--p", "2", "--L", "4", "--seed", "5", "--out", path("ridge_" + tag + ".json")},
        {"--threads", threads, "--log-level", "off", "simulate", "--scenario", "sparse", "--runs", "2",
         "--p-list", "2", "--n-test", "100", "--random-count", "10", "--seed", "3", "--out-dir",
         path("sim_" + tag)},
        {"--threads", threads, "--log-level", "off", "converge", "--scenario", "sparse", "--n-list", "40",
         "--replicates", "2", "--p", "2", "--seed", "2", "--out", path("conv_" + tag + ".json")},
    };
    for (const auto& c : commands) {
      const auto r = invoke(c);
      ASSERT_EQ(r.code, 0) << r.err;
    }
  };
  run_all("1", "one");
  run_all("8", "eight");
  run_all("8", "again");
  for (const std::string tag : {"eight", "again"}) {
    EXPECT_EQ(slurp(path("ridge_one.json")), slurp(path("ridge_" + tag + ".json")));
    EXPECT_EQ(slurp(path("sim_one/benchmark.csv")), slurp(path("sim_" + tag + "/benchmark.csv")));
    EXPECT_EQ(slurp(path("sim_one/summary.json")), slurp(path("sim_" + tag + "/summary.json")));
    EXPECT_EQ(slurp(path("conv_one.json")), slurp(path("conv_" + tag + ".json")));
  }
  set_thread_count(0);
}
