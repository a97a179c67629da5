#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <json.hpp>
#include <sstream>

#include "sfdnn/eval.hpp"
#include "sfdnn/io.hpp"
#include "sfdnn/metrics.hpp"
#include "sfdnn/pipeline.hpp"
#include "sfdnn/simgen.hpp"
#include "sfdnn/spatial.hpp"

namespace sfdnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open input file", path);
  return in;
}

// Collects the artifacts of one subcommand; written together from this thread.
class Output {
 public:
  explicit Output(const RunConfig& config) : dir_(config.out_dir.empty() ? "." : config.out_dir) {}

  std::ostringstream& add(const std::string& name) {
    files_.emplace_back(name, std::make_unique<std::ostringstream>());
    return *files_.back().second;
  }

  void add_json(const std::string& name, const json& value) { add(name) << value.dump(2) << '\n'; }

  void commit() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create output directory: " + ec.message(), dir_.string());
    for (const auto& [name, content] : files_) {
      const fs::path path = dir_ / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << content->str();
      if (!out) throw Error(ErrorKind::kIo, "cannot write output file", path.string());
    }
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

struct LoadedSplit {
  RegressionDataset data;
  std::vector<std::string> ids;
};

SpatialWeightMatrix read_weights_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return SpatialWeightMatrix::read(in);
  } catch (const Error& e) {
    throw Error(e.kind(), e.what(), path);
  }
}

LoadedSplit load_split(const RunConfig& config, const std::string& functional_path, const std::string& scalars_path,
                       const std::string& coordinates_path, const std::string& weights_path) {
  auto functional_in = open_input(functional_path);
  const FunctionalTable functional = read_functional_csv(functional_in, functional_path);
  auto scalars_in = open_input(scalars_path);
  const ScalarTable table = read_scalar_csv(scalars_in, scalars_path);
  std::optional<CoordinateTable> coordinates;
  if (!coordinates_path.empty()) {
    auto in = open_input(coordinates_path);
    coordinates = read_coordinates_csv(in, coordinates_path);
  }
  LoadedSplit split{assemble_dataset(table, functional, coordinates), table.ids};
  if (!weights_path.empty()) {
    split.data.weights = read_weights_file(weights_path);
    if (split.data.weights->size() != split.data.size()) {
      throw Error(ErrorKind::kDimension,
                  "weight matrix has " + std::to_string(split.data.weights->size()) + " rows for " +
                      std::to_string(split.data.size()) + " locations",
                  weights_path);
    }
  } else if (split.data.coordinates) {
    split.data.weights = build_knn_bisquare_weights(*split.data.coordinates, config.neighbors);
  }
  apply_log_transform(split.data, config.log_transform, split.ids);
  return split;
}

json metrics_json(const MetricPair& m, const char* error_name, const char* r2_name) {
  return {{error_name, m.error}, {r2_name, m.r2}};
}

json choice_json(const NetworkChoice& c) {
  return {{"hidden_sizes", c.hidden_sizes}, {"activation", to_string(c.activation)},
          {"basis_size", c.basis_size},     {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},     {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},             {"neighbors", c.neighbors}};
}

void write_split(Output& out, const std::string& prefix, const RegressionDataset& data) {
  const auto ids = sequential_ids(data.size());
  write_functional_csv(out.add(prefix + "_functional.csv"), ids, data.functional, data.grid);
  write_scalar_csv(out.add(prefix + "_scalars.csv"), ids, data.scalars, data.response);
  data.weights->write(out.add(prefix + "_weights.txt"));
}

void run_simulate(const RunConfig& config, Output& out) {
  const ScenarioData sim = generate_scenario_dataset(config.scenario());
  write_split(out, "train", sim.train);
  write_split(out, "test", sim.test);
}

void run_fit(const RunConfig& config, Output& out) {
  const LoadedSplit train =
      load_split(config, config.train_functional, config.train_scalars, config.train_coordinates, config.train_weights);
  const FittedModel model =
      fit_model(config.kind, train.data, config.network().architecture(train.data.num_functional(),
                                                                        train.data.num_scalars()),
                config.base_train_config(), config.fit_options());
  write_model(out.add("model.txt"), model);
  json report = metrics_json(model.train_metrics, "mse", "r2");
  report["kind"] = to_string(model.kind);
  report["n"] = train.data.size();
  report["rho_hat"] = model.rho_hat ? json(*model.rho_hat) : json(nullptr);
  report["rho_at_boundary"] = model.rho_at_boundary;
  report["epochs_run"] = model.loss_trace.size();
  out.add_json("train_metrics.json", report);
}

struct Predicted {
  LoadedSplit test;
  FittedModel model;
  Eigen::VectorXd predictions;
};

Predicted predict_test(const RunConfig& config) {
  auto model_in = open_input(config.model);
  Predicted p;
  try {
    p.model = read_model(model_in);
  } catch (const Error& e) {
    throw Error(e.kind(), e.what(), config.model);
  }
  p.test = load_split(config, config.test_functional, config.test_scalars, config.test_coordinates, config.test_weights);
  p.predictions = predict_model(p.model, p.test.data);
  return p;
}

void write_pairs(std::ostream& out, const Predicted& p) {
  out << "location_id,observed,predicted\n";
  for (std::size_t i = 0; i < p.test.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << p.test.ids[i] << ',' << format_real(p.test.data.response(r)) << ',' << format_real(p.predictions(r))
        << '\n';
  }
}

void run_predict(const RunConfig& config, Output& out) {
  const Predicted p = predict_test(config);
  write_pairs(out.add("predictions.csv"), p);
  json report =
      metrics_json(compute_metrics(p.test.data.response, p.predictions, MetricRole::kTest), "mspe", "r2_test");
  report["kind"] = to_string(p.model.kind);
  report["n"] = p.test.data.size();
  out.add_json("test_metrics.json", report);
}

void run_plotdata(const RunConfig& config, Output& out) {
  const Predicted p = predict_test(config);
  write_pairs(out.add("observed_predicted.csv"), p);
  const TaylorStats t = taylor_stats(p.test.data.response, p.predictions);
  out.add_json("taylor.json", {{"kind", to_string(p.model.kind)},
                               {"correlation", t.correlation},
                               {"sd_observed", t.sd_observed},
                               {"sd_predicted", t.sd_predicted},
                               {"centered_rmsd", t.centered_rmsd}});
}

void run_tune(const RunConfig& config, Output& out) {
  const LoadedSplit train =
      load_split(config, config.train_functional, config.train_scalars, config.train_coordinates, config.train_weights);
  TuneOptions options;
  options.base_config = config.base_train_config();
  options.fit = config.fit_options();
  options.jobs = config.jobs;
  const TuneResult result = kfold_tune(train.data, config.kind, config.tune_grid(), config.folds, config.seed, options);
  write_cv_table(out.add("cv_table.csv"), result);
  json best = choice_json(result.best);
  best["kind"] = to_string(config.kind);
  best["cv_mspe"] = result.table[result.best_index].cv_mspe;
  best["candidate"] = result.best_index;
  out.add_json("tune_best.json", best);
}

void run_weights(const RunConfig& config, Output& out) {
  if (!config.train_coordinates.empty()) {
    auto in = open_input(config.train_coordinates);
    const CoordinateTable coords = read_coordinates_csv(in, config.train_coordinates);
    build_knn_bisquare_weights(coords.coordinates, config.neighbors).write(out.add("weights.txt"));
  } else {
    build_inverse_distance_weights(config.weights_size > 0 ? config.weights_size : config.n_train)
        .write(out.add("weights.txt"));
  }
}

void run_moran(const RunConfig& config, Output& out) {
  auto in = open_input(config.train_scalars);
  const ScalarTable table = read_scalar_csv(in, config.train_scalars);
  Eigen::VectorXd y = table.response;
  if (config.log_transform != LogTransform::kNone) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (!(y(i) > 0.0)) {
        throw Error(ErrorKind::kData, "log transform needs positive values: response is " + format_real(y(i)) +
                                          " at row " + std::to_string(i + 1) + " (location_id " +
                                          table.ids[static_cast<std::size_t>(i)] + ")");
      }
    }
    y = y.array().log().matrix();
  }
  std::optional<SpatialWeightMatrix> weights;
  if (!config.train_weights.empty()) {
    weights = read_weights_file(config.train_weights);
  } else {
    auto cin = open_input(config.train_coordinates);
    const CoordinateTable coords = read_coordinates_csv(cin, config.train_coordinates);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < coords.ids.size(); ++i) index.emplace(coords.ids[i], i);
    std::vector<Coordinates> aligned;
    for (const auto& id : table.ids) {
      const auto it = index.find(id);
      if (it == index.end()) throw Error(ErrorKind::kData, "location '" + id + "' has no coordinates");
      aligned.push_back(coords.coordinates[it->second]);
    }
    weights = build_knn_bisquare_weights(aligned, config.neighbors);
  }
  const Eigen::VectorXd local = local_morans_i(*weights, y);
  auto& csv = out.add("morans_i.csv");
  csv << "location_id,local_i\n";
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    csv << table.ids[i] << ',' << format_real(local(static_cast<Eigen::Index>(i))) << '\n';
  }
}

void run_mc_bench(const RunConfig& config, Output& out) {
  StudySettings settings;
  settings.fdnn = config.network();
  settings.sfdnn = config.network();
  settings.base_config = config.base_train_config();
  if (config.mc_tune) settings.tune_grid = config.tune_grid();
  settings.tune_folds = config.folds;
  settings.jobs = config.jobs;
  const StudyTable table =
      monte_carlo_study(config.mc_scenarios(), config.mc_kinds, config.mc_replications, config.seed, settings);
  write_study_csv(out.add("study.csv"), table);
  write_study_report(out.add("study.txt"), table);
}

}  // namespace

void run(const std::string& subcommand, const RunConfig& config) {
  const auto problems = config.problems();
  if (!problems.empty()) {
    std::string message = "invalid configuration";
    for (const auto& p : problems) message += "\n  " + p;
    throw Error(ErrorKind::kConfig, message);
  }
  config.validate_for(subcommand);
  Output out(config);
  if (subcommand == "simulate") {
    run_simulate(config, out);
  } else if (subcommand == "fit") {
    run_fit(config, out);
  } else if (subcommand == "predict") {
    run_predict(config, out);
  } else if (subcommand == "tune") {
    run_tune(config, out);
  } else if (subcommand == "weights") {
    run_weights(config, out);
  } else if (subcommand == "moran") {
    run_moran(config, out);
  } else if (subcommand == "mc-bench") {
    run_mc_bench(config, out);
  } else if (subcommand == "plotdata") {
    run_plotdata(config, out);
  } else {
    throw Error(ErrorKind::kConfig, "unknown subcommand '" + subcommand + "'");
  }
  out.commit();
}

std::string error_json(const std::string& code, const std::string& message, const std::string& context) {
  return json{{"code", code}, {"message", message}, {"context", context}}.dump();
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Spatial functional regression: simulation, fitting and diagnostics"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::string seed, out_dir, jobs, kind, log_transform;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "64-bit seed");
  app.add_option("--out-dir", out_dir, "directory for every output file");
  app.add_option("--jobs", jobs, "worker threads for mc-bench and tune");
  app.add_option("--kind", kind, "ml | fdnn | sfdnn")->check(CLI::IsMember({"ml", "ml_linear", "fdnn", "sfdnn"}));
  app.add_option("--log-transform", log_transform, "none | response | all")
      ->check(CLI::IsMember({"none", "response", "all"}));
  for (const auto& name : kSubcommands) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json(to_string(ErrorKind::kConfig), e.what(), "command line") << '\n';
    return exit_code(ErrorKind::kConfig);
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : parse_config(config_path);
    const std::pair<const char*, const std::string*> flags[] = {{"seed", &seed},
                                                                {"out_dir", &out_dir},
                                                                {"jobs", &jobs},
                                                                {"kind", &kind},
                                                                {"log_transform", &log_transform}};
    for (const auto& [key, value] : flags) {
      if (!value->empty()) set_config_value(config, key, *value);
    }
    run(app.get_subcommands().front()->get_name(), config);
    return 0;
  } catch (const Error& e) {
    std::cerr << error_json(to_string(e.kind()), e.what(), e.context()) << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what(), "") << '\n';
    return exit_code(ErrorKind::kNumericOverflow);
  }
}

}  // namespace sfdnn::cli
