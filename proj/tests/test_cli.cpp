#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "sfdnn/config.hpp"
#include "sfdnn/metrics.hpp"
#include "sfdnn/pipeline.hpp"
#include "sfdnn/simgen.hpp"

namespace fs = std::filesystem;
using namespace sfdnn;
using nlohmann::json;

namespace {

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("sfdnn_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Runs the CLI entry point with the given arguments; stderr is returned in `err`.
int invoke(std::initializer_list<std::string> args, std::string* err = nullptr) {
  std::vector<std::string> storage = {"sfdnn"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  testing::internal::CaptureStderr();
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data());
  const std::string captured = testing::internal::GetCapturedStderr();
  if (err != nullptr) *err = captured;
  return code;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

const char* kSmallScenario =
    "n_train = 60\n"
    "n_test = 40\n"
    "rho = 0.7\n"
    "seed = 31\n"
    "hidden_sizes = 6\n"
    "basis_size = 5\n"
    "epochs = 25\n"
    "learning_rate = 0.005\n";

}  // namespace

TEST(Cli, SimulateFitPredictMatchesInProcess) {
  ScratchDir dir("roundtrip");
  write_text(dir / "run.cfg", std::string(kSmallScenario) + "out_dir = " + (dir / "out") + "\n" +
                                  "train_functional = " + (dir / "out/train_functional.csv") + "\n" +
                                  "train_scalars = " + (dir / "out/train_scalars.csv") + "\n" +
                                  "train_weights = " + (dir / "out/train_weights.txt") + "\n" +
                                  "test_functional = " + (dir / "out/test_functional.csv") + "\n" +
                                  "test_scalars = " + (dir / "out/test_scalars.csv") + "\n" +
                                  "test_weights = " + (dir / "out/test_weights.txt") + "\n" +
                                  "model = " + (dir / "out/model.txt") + "\n");
  ASSERT_EQ(invoke({"simulate", "--config", dir / "run.cfg"}), 0);

  const RunConfig config = parse_config(dir / "run.cfg");
  const ScenarioData sim = generate_scenario_dataset(config.scenario());
  for (const char* kind : {"ml", "fdnn", "sfdnn"}) {
    std::string err;
    ASSERT_EQ(invoke({"fit", "--config", dir / "run.cfg", "--kind", kind}, &err), 0) << err;
    ASSERT_EQ(invoke({"predict", "--config", dir / "run.cfg", "--kind", kind}, &err), 0) << err;
    const json train = json::parse(read_text(dir / "out/train_metrics.json"));
    const json test = json::parse(read_text(dir / "out/test_metrics.json"));

    const ModelKind k = parse_model_kind(kind);
    const FittedModel m =
        fit_model(k, sim.train, config.network().architecture(3, 3), config.base_train_config(), config.fit_options());
    const MetricPair t = compute_metrics(sim.test.response, predict_model(m, sim.test), MetricRole::kTest);
    EXPECT_NEAR(train["mse"].get<double>(), m.train_metrics.error, 1e-10) << kind;
    EXPECT_NEAR(train["r2"].get<double>(), m.train_metrics.r2, 1e-10) << kind;
    EXPECT_NEAR(test["mspe"].get<double>(), t.error, 1e-10) << kind;
    EXPECT_NEAR(test["r2_test"].get<double>(), t.r2, 1e-10) << kind;
    EXPECT_EQ(train["kind"], to_string(k));
  }

  ASSERT_EQ(invoke({"plotdata", "--config", dir / "run.cfg"}), 0);
  const json taylor = json::parse(read_text(dir / "out/taylor.json"));
  const double sd_o = taylor["sd_observed"], sd_p = taylor["sd_predicted"], corr = taylor["correlation"];
  const double crmsd = taylor["centered_rmsd"];
  EXPECT_NEAR(crmsd * crmsd, sd_o * sd_o + sd_p * sd_p - 2 * sd_o * sd_p * corr, 1e-10);
}

TEST(Cli, MoranOnTwoCycle) {
  ScratchDir dir("moran");
  write_text(dir / "y.csv", "location_id,y\na,1\nb,-1\n");
  write_text(dir / "w.txt", "n 2 row_normalized 1\n0 1 1\n1 0 1\n");
  write_text(dir / "run.cfg", "train_scalars = " + (dir / "y.csv") + "\ntrain_weights = " + (dir / "w.txt") + "\n");
  std::string err;
  ASSERT_EQ(invoke({"moran", "--config", dir / "run.cfg", "--out-dir", dir / "m"}, &err), 0) << err;
  EXPECT_EQ(read_text(dir / "m/morans_i.csv"), "location_id,local_i\na,-1\nb,-1\n");
}

TEST(Cli, OutputsAreByteIdenticalAndStayInOutDir) {
  ScratchDir dir("repeat");
  write_text(dir / "run.cfg", kSmallScenario);
  const fs::path before = fs::current_path();
  fs::current_path(dir.path());
  const int first = invoke({"simulate", "--config", dir / "run.cfg", "--out-dir", dir / "a"});
  const int second = invoke({"simulate", "--config", dir / "run.cfg", "--out-dir", dir / "b"});
  const int weights = invoke({"weights", "--config", dir / "run.cfg", "--out-dir", dir / "w"});
  fs::current_path(before);
  ASSERT_EQ(first, 0);
  ASSERT_EQ(second, 0);
  ASSERT_EQ(weights, 0);
  const std::set<std::string> expected = {"test_functional.csv", "test_scalars.csv", "test_weights.txt",
                                          "train_functional.csv", "train_scalars.csv", "train_weights.txt"};
  EXPECT_EQ(listing(dir / "a"), expected);
  for (const auto& name : expected) EXPECT_EQ(read_text(dir / ("a/" + name)), read_text(dir / ("b/" + name))) << name;
  EXPECT_EQ(listing(dir.path()), (std::set<std::string>{"a", "b", "run.cfg", "w"}));
  EXPECT_EQ(listing(dir / "w"), std::set<std::string>{"weights.txt"});
  EXPECT_EQ(read_text(dir / "w/weights.txt"), read_text(dir / "a/train_weights.txt"));
}

TEST(Cli, FitWithSameSeedIsByteIdentical) {
  ScratchDir dir("fitrepeat");
  write_text(dir / "run.cfg", std::string(kSmallScenario) + "out_dir = " + (dir / "d") + "\n" +
                                  "train_functional = " + (dir / "d/train_functional.csv") + "\n" +
                                  "train_scalars = " + (dir / "d/train_scalars.csv") + "\n" +
                                  "train_weights = " + (dir / "d/train_weights.txt") + "\n");
  ASSERT_EQ(invoke({"simulate", "--config", dir / "run.cfg"}), 0);
  ASSERT_EQ(invoke({"fit", "--config", dir / "run.cfg", "--out-dir", dir / "f1"}), 0);
  ASSERT_EQ(invoke({"fit", "--config", dir / "run.cfg", "--out-dir", dir / "f2"}), 0);
  EXPECT_EQ(read_text(dir / "f1/model.txt"), read_text(dir / "f2/model.txt"));
  EXPECT_EQ(read_text(dir / "f1/train_metrics.json"), read_text(dir / "f2/train_metrics.json"));
}

TEST(Cli, ExitCodesAndErrorJson) {
  ScratchDir dir("errors");
  std::string err;
  EXPECT_EQ(invoke({"fly"}, &err), 2);
  EXPECT_EQ(invoke({"simulate", "--kind", "svm"}, &err), 2);

  write_text(dir / "bad.cfg", "rho = 1.5\nwhatever = 3\n");
  EXPECT_EQ(invoke({"simulate", "--config", dir / "bad.cfg"}, &err), 2);
  const json bad = json::parse(err);
  EXPECT_EQ(bad["code"], "config");
  EXPECT_NE(bad["message"].get<std::string>().find("whatever"), std::string::npos);
  EXPECT_NE(bad["message"].get<std::string>().find("(-1, 1)"), std::string::npos);

  write_text(dir / "missing.cfg", "train_scalars = " + (dir / "nope.csv") + "\n");
  EXPECT_EQ(invoke({"fit", "--config", dir / "missing.cfg"}, &err), 2);

  // Zero response under a log transform: a data error naming the row.
  write_text(dir / "f.csv", "location_id,predictor_id,u,value\na,p,0,1\na,p,1,2\nb,p,0,3\nb,p,1,4\nc,p,0,1\nc,p,1,1\n");
  write_text(dir / "s.csv", "location_id,z1,y\na,1,2\nb,2,0\nc,3,5\n");
  write_text(dir / "log.cfg", "kind = fdnn\ntrain_functional = " + (dir / "f.csv") + "\ntrain_scalars = " +
                                  (dir / "s.csv") + "\nout_dir = " + (dir / "o") + "\n");
  EXPECT_EQ(invoke({"fit", "--config", dir / "log.cfg", "--log-transform", "response"}, &err), 3);
  const json log_err = json::parse(err);
  EXPECT_EQ(log_err["code"], "data");
  EXPECT_NE(log_err["message"].get<std::string>().find("row 2"), std::string::npos) << err;
  EXPECT_NE(log_err["message"].get<std::string>().find("location_id b"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir / "o"));

  // Training that overflows is a numerical failure.
  write_text(dir / "s2.csv", "location_id,z1,y\na,1,2\nb,2,1\nc,3,5\n");
  write_text(dir / "nan.cfg", "kind = fdnn\nlearning_rate = 1e300\nvalidation_fraction = 0\nbasis_size = 2\n"
                              "train_functional = " + (dir / "f.csv") + "\ntrain_scalars = " + (dir / "s2.csv") +
                                  "\nout_dir = " + (dir / "o") + "\n");
  EXPECT_EQ(invoke({"fit", "--config", dir / "nan.cfg"}, &err), 4) << err;
  EXPECT_EQ(json::parse(err)["code"], "training_diverged");
}

TEST(Cli, TuneWritesTableAndBest) {
  ScratchDir dir("tune");
  write_text(dir / "run.cfg", std::string(kSmallScenario) + "out_dir = " + (dir / "d") + "\n" +
                                  "train_functional = " + (dir / "d/train_functional.csv") + "\n" +
                                  "train_scalars = " + (dir / "d/train_scalars.csv") + "\n" +
                                  "train_weights = " + (dir / "d/train_weights.txt") + "\n" +
                                  "tune_hidden_sizes = 4; 2\nfolds = 3\nkind = fdnn\n");
  ASSERT_EQ(invoke({"simulate", "--config", dir / "run.cfg"}), 0);
  std::string err;
  ASSERT_EQ(invoke({"tune", "--config", dir / "run.cfg", "--out-dir", dir / "t"}, &err), 0) << err;
  const json best = json::parse(read_text(dir / "t/tune_best.json"));
  EXPECT_EQ(best["kind"], "fdnn");
  EXPECT_TRUE(best["cv_mspe"].is_number());
  EXPECT_TRUE(fs::exists(dir / "t/cv_table.csv"));
}

TEST(Cli, McBenchWritesReport) {
  ScratchDir dir("mc");
  write_text(dir / "run.cfg",
             "mc_replications = 2\nmc_n_train = 40\nmc_rho = 0.5\nmc_kinds = ml, fdnn\nn_test = 30\n"
             "hidden_sizes = 4\nepochs = 5\nbasis_size = 4\n");
  std::string err;
  ASSERT_EQ(invoke({"mc-bench", "--config", dir / "run.cfg", "--out-dir", dir / "r", "--jobs", "2"}, &err), 0) << err;
  EXPECT_NE(read_text(dir / "r/study.txt").find("MSPE"), std::string::npos);
  EXPECT_EQ(read_text(dir / "r/study.csv").rfind("error_dist,n_train", 0), 0u);
}

TEST(Cli, ErrorJsonShape) {
  const json j = json::parse(cli::error_json("data", "bad \"value\"", "f.csv:3"));
  EXPECT_EQ(j["code"], "data");
  EXPECT_EQ(j["message"], "bad \"value\"");
  EXPECT_EQ(j["context"], "f.csv:3");
}
