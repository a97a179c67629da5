#include "sfdnn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "sfdnn/error.hpp"
#include "sfdnn/random.hpp"

namespace sfdnn {

namespace {

// Runs task(0..count-1) on up to `jobs` threads. Tasks must not throw.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string format_real(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

}  // namespace

NetworkArchitecture NetworkChoice::architecture(int num_functional, int num_scalars) const {
  NetworkArchitecture arch;
  arch.basis_sizes.assign(static_cast<std::size_t>(num_functional), basis_size);
  arch.num_scalars = num_scalars;
  arch.hidden_sizes = hidden_sizes;
  arch.activations.assign(hidden_sizes.size(), activation);
  return arch;
}

TrainConfig NetworkChoice::train_config(const TrainConfig& base) const {
  TrainConfig config = base;
  config.learning_rate = learning_rate;
  config.batch_size = batch_size;
  config.weight_decay = weight_decay;
  config.max_epochs = epochs;
  return config;
}

std::string NetworkChoice::describe() const {
  std::ostringstream out;
  out << "hidden=";
  for (std::size_t i = 0; i < hidden_sizes.size(); ++i) out << (i ? "x" : "") << hidden_sizes[i];
  out << " act=" << to_string(activation) << " M=" << basis_size << " lr=" << format_real(learning_rate)
      << " batch=" << batch_size << " decay=" << format_real(weight_decay) << " epochs=" << epochs
      << " h=" << neighbors;
  return out.str();
}

void TuneGrid::validate() const {
  const auto check = [](bool nonempty, const char* name) {
    if (!nonempty) throw Error(ErrorKind::kConfig, std::string("tuning grid list '") + name + "' is empty");
  };
  check(!hidden_sizes.empty(), "hidden_sizes");
  check(!learning_rates.empty(), "learning_rates");
  check(!batch_sizes.empty(), "batch_sizes");
  check(!basis_sizes.empty(), "basis_sizes");
  check(!weight_decays.empty(), "weight_decays");
  check(!epochs.empty(), "epochs");
  check(!activations.empty(), "activations");
  check(!neighbor_counts.empty(), "neighbor_counts");
}

std::vector<NetworkChoice> TuneGrid::candidates() const {
  validate();
  std::vector<NetworkChoice> out;
  for (const auto& hidden : hidden_sizes)
    for (double lr : learning_rates)
      for (int batch : batch_sizes)
        for (int m : basis_sizes)
          for (double decay : weight_decays)
            for (int ep : epochs)
              for (Activation act : activations)
                for (int h : neighbor_counts) out.push_back({hidden, lr, batch, m, decay, ep, act, h});
  return out;
}

namespace {

struct Fold {
  std::vector<int> train;
  std::vector<int> held_out;
};

std::vector<Fold> make_folds(int n, int k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::kConfig, "K must be at least 2");
  if (n < k) {
    throw Error(ErrorKind::kFoldSize, "cannot split " + std::to_string(n) + " rows into " + std::to_string(k) + " folds");
  }
  const std::vector<int> order = shuffled_indices(n, seed, Stream::kFolds);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    const auto begin = static_cast<std::size_t>(static_cast<long long>(n) * f / k);
    const auto end = static_cast<std::size_t>(static_cast<long long>(n) * (f + 1) / k);
    if (end - begin < 2) {
      throw Error(ErrorKind::kFoldSize, "fold " + std::to_string(f) + " has " + std::to_string(end - begin) +
                                            " rows; folds need at least 2");
    }
    std::vector<bool> held(static_cast<std::size_t>(n), false);
    for (std::size_t i = begin; i < end; ++i) held[static_cast<std::size_t>(order[i])] = true;
    auto& fold = folds[static_cast<std::size_t>(f)];
    for (int i = 0; i < n; ++i) (held[static_cast<std::size_t>(i)] ? fold.held_out : fold.train).push_back(i);
  }
  return folds;
}

RegressionDataset fold_part(const RegressionDataset& data, const std::vector<int>& rows, bool rebuild_knn, int h) {
  RegressionDataset part = data.subset(rows);
  if (rebuild_knn) part.weights = build_knn_bisquare_weights(*part.coordinates, h);
  return part;
}

}  // namespace

TuneResult kfold_tune(const RegressionDataset& data, ModelKind kind, const TuneGrid& grid, int folds,
                      std::uint64_t seed, const TuneOptions& options) {
  data.validate();
  const bool spatial = kind != ModelKind::kFdnn;
  if (spatial && !data.weights && !data.coordinates) {
    throw Error(ErrorKind::kMissingWeights, std::string(to_string(kind)) + " tuning needs weights or coordinates");
  }
  const bool rebuild_knn = spatial && data.coordinates.has_value();

  // Fields that cannot affect the fit collapse to their first value.
  TuneGrid effective = grid;
  effective.validate();
  if (!rebuild_knn) effective.neighbor_counts.resize(1);
  if (kind == ModelKind::kMlLinear) {
    effective.hidden_sizes.resize(1);
    effective.learning_rates.resize(1);
    effective.batch_sizes.resize(1);
    effective.basis_sizes.resize(1);
    effective.weight_decays.resize(1);
    effective.epochs.resize(1);
    effective.activations.resize(1);
  }
  const std::vector<NetworkChoice> candidates = effective.candidates();
  const std::vector<Fold> split = make_folds(data.size(), folds, seed);

  const std::size_t tasks = candidates.size() * split.size();
  std::vector<double> sse(tasks, 0.0);
  std::vector<std::string> failure(tasks);
  parallel_for(tasks, options.jobs, [&](std::size_t t) {
    const NetworkChoice& choice = candidates[t / split.size()];
    const Fold& fold = split[t % split.size()];
    try {
      const RegressionDataset train = fold_part(data, fold.train, rebuild_knn, choice.neighbors);
      const RegressionDataset held = fold_part(data, fold.held_out, rebuild_knn, choice.neighbors);
      TrainConfig config = choice.train_config(options.base_config);
      config.seed = seed;
      FitOptions fit = options.fit;
      fit.log_det = nullptr;
      const FittedModel model =
          fit_model(kind, train, choice.architecture(data.num_functional(), data.num_scalars()), config, fit);
      sse[t] = (held.response - predict_model(model, held)).squaredNorm();
      if (!std::isfinite(sse[t])) failure[t] = "non-finite held-out error";
    } catch (const std::exception& e) {
      failure[t] = e.what();
    }
  });

  TuneResult result;
  const double n = static_cast<double>(data.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    CvRow row;
    row.choice = candidates[c];
    row.weight_count = candidates[c].architecture(data.num_functional(), data.num_scalars()).weight_count();
    double total = 0.0;
    for (std::size_t f = 0; f < split.size(); ++f) {
      const std::size_t t = c * split.size() + f;
      if (!failure[t].empty() && row.failure.empty()) row.failure = "fold " + std::to_string(f) + ": " + failure[t];
      total += sse[t];
    }
    row.cv_mspe = row.failure.empty() ? total / n : std::numeric_limits<double>::infinity();
    result.table.push_back(std::move(row));
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < result.table.size(); ++c) {
    const CvRow& a = result.table[c];
    const CvRow& b = result.table[best];
    if (a.cv_mspe < b.cv_mspe || (a.cv_mspe == b.cv_mspe && a.weight_count < b.weight_count)) best = c;
  }
  if (!std::isfinite(result.table[best].cv_mspe)) {
    throw Error(ErrorKind::kNumericOverflow, "every tuning candidate failed; first: " + result.table[0].failure);
  }
  result.best_index = best;
  result.best = result.table[best].choice;
  return result;
}

void write_cv_table(std::ostream& out, const TuneResult& result) {
  out << "candidate,hidden_sizes,activation,basis_size,learning_rate,batch_size,weight_decay,epochs,neighbors,"
         "weight_count,cv_mspe,selected,failure\n";
  for (std::size_t c = 0; c < result.table.size(); ++c) {
    const CvRow& row = result.table[c];
    std::string hidden;
    for (std::size_t i = 0; i < row.choice.hidden_sizes.size(); ++i) {
      hidden += (i ? "x" : "") + std::to_string(row.choice.hidden_sizes[i]);
    }
    std::string failure = row.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    std::replace(failure.begin(), failure.end(), '\n', ' ');
    out << c << ',' << hidden << ',' << to_string(row.choice.activation) << ',' << row.choice.basis_size << ','
        << format_real(row.choice.learning_rate) << ',' << row.choice.batch_size << ','
        << format_real(row.choice.weight_decay) << ',' << row.choice.epochs << ',' << row.choice.neighbors << ','
        << row.weight_count << ',' << format_real(row.cv_mspe) << ',' << (c == result.best_index ? 1 : 0) << ','
        << failure << '\n';
  }
}

const StudyCell& StudyTable::cell(std::size_t scenario, ModelKind kind) const {
  const std::size_t kinds = scenario_count() == 0 ? 0 : cells.size() / scenario_count();
  for (std::size_t k = 0; k < kinds; ++k) {
    const StudyCell& c = cells[scenario * kinds + k];
    if (c.kind == kind) return c;
  }
  throw Error(ErrorKind::kConfig, std::string("study has no cell for ") + to_string(kind));
}

namespace {

struct ReplicationOutcome {
  bool ok = false;
  std::string failure;
  double mse = 0.0, r2 = 0.0, mspe = 0.0, r2_test = 0.0, rho_hat = 0.0;
  bool boundary = false;
};

}  // namespace

StudyTable monte_carlo_study(const std::vector<ScenarioConfig>& scenarios, const std::vector<ModelKind>& kinds,
                             int replications, std::uint64_t base_seed, const StudySettings& settings) {
  require(replications >= 1, ErrorKind::kConfig, "the study needs at least one replication");
  require(!scenarios.empty() && !kinds.empty(), ErrorKind::kConfig, "the study needs scenarios and kinds");
  for (const auto& s : scenarios) s.validate();
  const auto reps = static_cast<std::size_t>(replications);

  // Network choice per scenario x kind, tuned on a pilot replication when asked.
  std::vector<NetworkChoice> chosen(scenarios.size() * kinds.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    std::optional<ScenarioData> pilot;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      NetworkChoice& choice = chosen[s * kinds.size() + k];
      choice = kinds[k] == ModelKind::kSfdnn ? settings.sfdnn : settings.fdnn;
      if (!settings.tune_grid || kinds[k] == ModelKind::kMlLinear) continue;
      const std::uint64_t pilot_seed = derive_seed(base_seed, reps);
      if (!pilot) {
        ScenarioConfig cfg = scenarios[s];
        cfg.replication_seed = pilot_seed;
        pilot = generate_scenario_dataset(cfg);
      }
      TuneOptions options;
      options.base_config = settings.base_config;
      options.jobs = settings.jobs;
      choice = kfold_tune(pilot->train, kinds[k], *settings.tune_grid, settings.tune_folds, pilot_seed, options).best;
    }
  }

  std::vector<ReplicationOutcome> outcomes(scenarios.size() * reps * kinds.size());
  parallel_for(scenarios.size() * reps, settings.jobs, [&](std::size_t task) {
    const std::size_t s = task / reps;
    const std::size_t r = task % reps;
    ReplicationOutcome* slot = &outcomes[task * kinds.size()];
    const std::uint64_t seed = derive_seed(base_seed, r);
    ScenarioData data;
    try {
      ScenarioConfig cfg = scenarios[s];
      cfg.replication_seed = seed;
      data = generate_scenario_dataset(cfg);
    } catch (const std::exception& e) {
      for (std::size_t k = 0; k < kinds.size(); ++k) slot[k].failure = std::string("data generation: ") + e.what();
      return;
    }
    std::optional<LogDeterminant> log_det;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      ReplicationOutcome& out = slot[k];
      try {
        const NetworkChoice& choice = chosen[s * kinds.size() + k];
        FitOptions fit;
        if (kinds[k] != ModelKind::kFdnn) {
          if (!log_det) log_det.emplace(*data.train.weights);
          fit.log_det = &*log_det;
        }
        TrainConfig config = choice.train_config(settings.base_config);
        config.seed = seed;
        const FittedModel model = fit_model(
            kinds[k], data.train, choice.architecture(data.train.num_functional(), data.train.num_scalars()), config,
            fit);
        const MetricPair test = compute_metrics(data.test.response, predict_model(model, data.test), MetricRole::kTest);
        out.mse = model.train_metrics.error;
        out.r2 = model.train_metrics.r2;
        out.mspe = test.error;
        out.r2_test = test.r2;
        out.rho_hat = model.rho_hat.value_or(0.0);
        out.boundary = model.rho_at_boundary;
        out.ok = std::isfinite(out.mspe) && std::isfinite(out.mse);
        if (!out.ok) out.failure = "non-finite metrics";
      } catch (const std::exception& e) {
        out.failure = e.what();
      }
    }
  });

  StudyTable table;
  table.replications = replications;
  table.base_seed = base_seed;
  table.scenarios = scenarios;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      StudyCell cell;
      cell.scenario = scenarios[s];
      cell.kind = kinds[k];
      cell.network = chosen[s * kinds.size() + k];
      std::vector<double> mse, r2, mspe, r2_test, rho;
      for (std::size_t r = 0; r < reps; ++r) {
        const ReplicationOutcome& out = outcomes[(s * reps + r) * kinds.size() + k];
        if (!out.ok) {
          ++cell.failed;
          cell.failures.push_back("replication " + std::to_string(r) + ": " + out.failure);
          continue;
        }
        mse.push_back(out.mse);
        r2.push_back(out.r2);
        mspe.push_back(out.mspe);
        r2_test.push_back(out.r2_test);
        if (kinds[k] != ModelKind::kFdnn) rho.push_back(out.rho_hat);
        if (out.boundary) ++cell.at_boundary;
      }
      cell.replications = static_cast<int>(mspe.size());
      cell.mse = summarize(mse);
      cell.r2 = summarize(r2);
      cell.mspe = summarize(mspe);
      cell.r2_test = summarize(r2_test);
      if (!rho.empty()) cell.rho_hat = summarize(rho);
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

namespace {

const char* display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMlLinear: return "ML";
    case ModelKind::kFdnn: return "FDNN";
    case ModelKind::kSfdnn: return "SFDNN";
  }
  return "?";
}

}  // namespace

void write_study_csv(std::ostream& out, const StudyTable& table) {
  out << "error_dist,n_train,n_test,rho,kind,metric,mean,sd,replications,failed,at_boundary\n";
  for (const StudyCell& cell : table.cells) {
    const std::pair<const char*, const MetricSummary*> metrics[] = {
        {"mse", &cell.mse}, {"r2", &cell.r2}, {"mspe", &cell.mspe}, {"r2_test", &cell.r2_test}};
    for (const auto& [name, summary] : metrics) {
      out << to_string(cell.scenario.error_dist) << ',' << cell.scenario.n_train << ',' << cell.scenario.n_test
          << ',' << format_real(cell.scenario.rho) << ',' << to_string(cell.kind) << ',' << name << ','
          << format_real(summary->mean) << ',' << format_real(summary->sd) << ',' << cell.replications << ','
          << cell.failed << ',' << cell.at_boundary << '\n';
    }
    if (cell.kind != ModelKind::kFdnn) {
      out << to_string(cell.scenario.error_dist) << ',' << cell.scenario.n_train << ',' << cell.scenario.n_test
          << ',' << format_real(cell.scenario.rho) << ',' << to_string(cell.kind) << ",rho_hat,"
          << format_real(cell.rho_hat.mean) << ',' << format_real(cell.rho_hat.sd) << ',' << cell.replications
          << ',' << cell.failed << ',' << cell.at_boundary << '\n';
    }
  }
}

void write_study_report(std::ostream& out, const StudyTable& table) {
  const auto pair = [](const MetricSummary& m) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.3f (%.3f)", m.mean, m.sd);
    return std::string(buffer);
  };
  char line[256];
  out << "Monte Carlo study: R = " << table.replications << ", base seed " << table.base_seed << '\n';
  const ScenarioConfig* current = nullptr;
  for (const StudyCell& cell : table.cells) {
    if (current == nullptr || !(*current == cell.scenario)) {
      current = &cell.scenario;
      std::snprintf(line, sizeof line, "\nerrors %s, n = %d, rho = %g\n", to_string(cell.scenario.error_dist),
                    cell.scenario.n_train, cell.scenario.rho);
      out << line;
      std::snprintf(line, sizeof line, "%-6s %-18s %-18s %-18s %-18s %6s %6s\n", "Model", "MSE", "R2", "MSPE",
                    "R2_test", "failed", "bound");
      out << line;
    }
    std::snprintf(line, sizeof line, "%-6s %-18s %-18s %-18s %-18s %6d %6d\n", display_name(cell.kind),
                  pair(cell.mse).c_str(), pair(cell.r2).c_str(), pair(cell.mspe).c_str(),
                  pair(cell.r2_test).c_str(), cell.failed, cell.at_boundary);
    out << line;
  }
  for (const StudyCell& cell : table.cells) {
    for (const auto& f : cell.failures) out << "failure " << display_name(cell.kind) << ": " << f << '\n';
  }
}

}  // namespace sfdnn
