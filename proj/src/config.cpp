#include "sfdnn/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sfdnn/error.hpp"

namespace sfdnn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text, char separator) {
  std::vector<std::string> items;
  if (trim(text).empty()) return items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, separator)) items.push_back(trim(item));
  return items;
}

// Parse failures carry a short description of the expected type.
struct BadValue {
  std::string expected;
};

template <typename T>
T parse_integer(const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) throw BadValue{"an integer"};
  return value;
}

double parse_double(const std::string& text) {
  try {
    return parse_real(trim(text), "");
  } catch (const Error&) {
    throw BadValue{"a number"};
  }
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw BadValue{"true or false"};
}

template <typename F>
auto parse_named(const std::string& text, F parse, const char* expected) {
  try {
    return parse(trim(text));
  } catch (const Error&) {
    throw BadValue{expected};
  }
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& text, F item) {
  std::vector<T> out;
  for (const auto& s : split_list(text, ',')) out.push_back(item(s));
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F show) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::string(show(v[i]));
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key int_key(const char* name, T RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = parse_integer<T>(v); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Key real_key(const char* name, double RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = parse_double(v); },
          [field](const RunConfig& c) { return format_real(c.*field); }};
}

Key bool_key(const char* name, bool RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = parse_bool(v); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Key string_key(const char* name, std::string RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = trim(v); },
          [field](const RunConfig& c) { return c.*field; }};
}

Key int_list_key(const char* name, std::vector<int> RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = parse_list<int>(v, parse_integer<int>); },
          [field](const RunConfig& c) { return join_ints(c.*field); }};
}

Key real_list_key(const char* name, std::vector<double> RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = parse_list<double>(v, parse_double); },
          [field](const RunConfig& c) { return join(c.*field, format_real); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(int_key("seed", &RunConfig::seed));
    k.push_back(string_key("out_dir", &RunConfig::out_dir));
    k.push_back(int_key("jobs", &RunConfig::jobs));
    k.push_back({"kind",
                 [](RunConfig& c, const std::string& v) {
                   c.kind = parse_named(v, parse_model_kind, "one of ml, fdnn, sfdnn");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.kind)); }});
    k.push_back({"log_transform",
                 [](RunConfig& c, const std::string& v) {
                   c.log_transform = parse_named(v, parse_log_transform, "one of none, response, all");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.log_transform)); }});
    k.push_back(int_key("n_train", &RunConfig::n_train));
    k.push_back(int_key("n_test", &RunConfig::n_test));
    k.push_back(real_key("rho", &RunConfig::rho));
    k.push_back({"error_dist",
                 [](RunConfig& c, const std::string& v) {
                   c.error_dist = parse_named(v, parse_error_distribution, "one of gaussian, t3, exp1");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.error_dist)); }});
    k.push_back(int_key("grid_size", &RunConfig::grid_size));
    k.push_back(real_key("beta0", &RunConfig::beta0));
    k.push_back(bool_key("double_filter", &RunConfig::double_filter));
    k.push_back(real_key("noise_scale", &RunConfig::noise_scale));
    k.push_back(int_list_key("hidden_sizes", &RunConfig::hidden_sizes));
    k.push_back({"activation",
                 [](RunConfig& c, const std::string& v) {
                   c.activation = parse_named(v, parse_activation, "one of relu, sigmoid, tanh, identity");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.activation)); }});
    k.push_back(int_key("basis_size", &RunConfig::basis_size));
    k.push_back(int_key("basis_degree", &RunConfig::basis_degree));
    k.push_back(real_key("variance_threshold", &RunConfig::variance_threshold));
    k.push_back(real_key("learning_rate", &RunConfig::learning_rate));
    k.push_back(int_key("batch_size", &RunConfig::batch_size));
    k.push_back(int_key("epochs", &RunConfig::epochs));
    k.push_back(real_key("early_stop_threshold", &RunConfig::early_stop_threshold));
    k.push_back(real_key("weight_decay", &RunConfig::weight_decay));
    k.push_back(real_key("validation_fraction", &RunConfig::validation_fraction));
    k.push_back(int_key("patience", &RunConfig::patience));
    k.push_back(int_key("neighbors", &RunConfig::neighbors));
    k.push_back(int_key("weights_size", &RunConfig::weights_size));
    k.push_back(int_key("folds", &RunConfig::folds));
    k.push_back({"tune_hidden_sizes",
                 [](RunConfig& c, const std::string& v) {
                   c.tune_hidden_sizes.clear();
                   for (const auto& item : split_list(v, ';')) {
                     c.tune_hidden_sizes.push_back(parse_list<int>(item, parse_integer<int>));
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.tune_hidden_sizes.size(); ++i) {
                     out += (i ? "; " : "") + join_ints(c.tune_hidden_sizes[i]);
                   }
                   return out;
                 }});
    k.push_back(real_list_key("tune_learning_rates", &RunConfig::tune_learning_rates));
    k.push_back(int_list_key("tune_batch_sizes", &RunConfig::tune_batch_sizes));
    k.push_back(int_list_key("tune_basis_sizes", &RunConfig::tune_basis_sizes));
    k.push_back(real_list_key("tune_weight_decays", &RunConfig::tune_weight_decays));
    k.push_back(int_list_key("tune_epochs", &RunConfig::tune_epochs));
    k.push_back({"tune_activations",
                 [](RunConfig& c, const std::string& v) {
                   c.tune_activations = parse_list<Activation>(v, [](const std::string& s) {
                     return parse_named(s, parse_activation, "activations from relu, sigmoid, tanh, identity");
                   });
                 },
                 [](const RunConfig& c) {
                   return join(c.tune_activations, [](Activation a) { return to_string(a); });
                 }});
    k.push_back(int_list_key("tune_neighbor_counts", &RunConfig::tune_neighbor_counts));
    k.push_back(int_key("mc_replications", &RunConfig::mc_replications));
    k.push_back(int_list_key("mc_n_train", &RunConfig::mc_n_train));
    k.push_back(real_list_key("mc_rho", &RunConfig::mc_rho));
    k.push_back({"mc_error_dists",
                 [](RunConfig& c, const std::string& v) {
                   c.mc_error_dists = parse_list<ErrorDistribution>(v, [](const std::string& s) {
                     return parse_named(s, parse_error_distribution, "distributions from gaussian, t3, exp1");
                   });
                 },
                 [](const RunConfig& c) {
                   return join(c.mc_error_dists, [](ErrorDistribution d) { return to_string(d); });
                 }});
    k.push_back({"mc_kinds",
                 [](RunConfig& c, const std::string& v) {
                   c.mc_kinds = parse_list<ModelKind>(v, [](const std::string& s) {
                     return parse_named(s, parse_model_kind, "kinds from ml, fdnn, sfdnn");
                   });
                 },
                 [](const RunConfig& c) { return join(c.mc_kinds, [](ModelKind m) { return to_string(m); }); }});
    k.push_back(bool_key("mc_tune", &RunConfig::mc_tune));
    k.push_back(string_key("train_functional", &RunConfig::train_functional));
    k.push_back(string_key("train_scalars", &RunConfig::train_scalars));
    k.push_back(string_key("train_coordinates", &RunConfig::train_coordinates));
    k.push_back(string_key("train_weights", &RunConfig::train_weights));
    k.push_back(string_key("test_functional", &RunConfig::test_functional));
    k.push_back(string_key("test_scalars", &RunConfig::test_scalars));
    k.push_back(string_key("test_coordinates", &RunConfig::test_coordinates));
    k.push_back(string_key("test_weights", &RunConfig::test_weights));
    k.push_back(string_key("model", &RunConfig::model));
    return k;
  }();
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = std::to_string(problems.size()) + (problems.size() == 1 ? " problem" : " problems");
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

}  // namespace

ScenarioConfig RunConfig::scenario() const {
  ScenarioConfig s;
  s.n_train = n_train;
  s.n_test = n_test;
  s.rho = rho;
  s.error_dist = error_dist;
  s.replication_seed = seed;
  s.grid_size = grid_size;
  s.beta0 = beta0;
  s.double_filter = double_filter;
  s.noise_scale = noise_scale;
  return s;
}

NetworkChoice RunConfig::network() const {
  return {hidden_sizes, learning_rate, batch_size, basis_size, weight_decay, epochs, activation, neighbors};
}

TrainConfig RunConfig::base_train_config() const {
  TrainConfig c = network().train_config(TrainConfig{});
  c.early_stop_threshold = early_stop_threshold;
  c.validation_fraction = validation_fraction;
  c.patience = patience;
  c.seed = seed;
  return c;
}

TuneGrid RunConfig::tune_grid() const {
  TuneGrid g;
  const auto pick = [](const auto& list, const auto& single) {
    using List = std::decay_t<decltype(list)>;
    return list.empty() ? List{single} : list;
  };
  g.hidden_sizes = pick(tune_hidden_sizes, hidden_sizes);
  g.learning_rates = pick(tune_learning_rates, learning_rate);
  g.batch_sizes = pick(tune_batch_sizes, batch_size);
  g.basis_sizes = pick(tune_basis_sizes, basis_size);
  g.weight_decays = pick(tune_weight_decays, weight_decay);
  g.epochs = pick(tune_epochs, epochs);
  g.activations = pick(tune_activations, activation);
  g.neighbor_counts = pick(tune_neighbor_counts, neighbors);
  return g;
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.variance_threshold = variance_threshold;
  o.basis_degree = basis_degree;
  return o;
}

std::vector<ScenarioConfig> RunConfig::mc_scenarios() const {
  std::vector<ScenarioConfig> out;
  for (ErrorDistribution dist : mc_error_dists) {
    for (int n : mc_n_train) {
      for (double r : mc_rho) {
        ScenarioConfig s = scenario();
        s.error_dist = dist;
        s.n_train = n;
        s.rho = r;
        out.push_back(s);
      }
    }
  }
  return out;
}

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> out;
  const auto check = [&](bool ok, const std::string& message) {
    if (!ok) out.push_back(message);
  };
  const auto bad = [](const char* key, const std::string& value, const char* allowed) {
    return std::string(key) + " = " + value + " is outside the admissible range " + allowed;
  };
  check(jobs >= 1, bad("jobs", std::to_string(jobs), "[1, inf)"));
  check(n_train >= 2, bad("n_train", std::to_string(n_train), "[2, inf)"));
  check(n_test >= 2, bad("n_test", std::to_string(n_test), "[2, inf)"));
  check(rho > -1.0 && rho < 1.0, bad("rho", format_real(rho), "(-1, 1)"));
  check(grid_size >= 2, bad("grid_size", std::to_string(grid_size), "[2, inf)"));
  check(noise_scale >= 0.0, bad("noise_scale", format_real(noise_scale), "[0, inf)"));
  check(!hidden_sizes.empty(), "hidden_sizes must list at least one layer");
  for (int h : hidden_sizes) check(h >= 1, bad("hidden_sizes", std::to_string(h), "[1, inf) per layer"));
  check(basis_degree >= 0, bad("basis_degree", std::to_string(basis_degree), "[0, inf)"));
  check(basis_size >= 1, bad("basis_size", std::to_string(basis_size), "[1, inf)"));
  check(variance_threshold > 0.0 && variance_threshold <= 1.0,
        bad("variance_threshold", format_real(variance_threshold), "(0, 1]"));
  check(learning_rate > 0.0, bad("learning_rate", format_real(learning_rate), "(0, inf)"));
  check(batch_size >= 1, bad("batch_size", std::to_string(batch_size), "[1, inf)"));
  check(epochs >= 1, bad("epochs", std::to_string(epochs), "[1, inf)"));
  check(early_stop_threshold >= 0.0, bad("early_stop_threshold", format_real(early_stop_threshold), "[0, inf)"));
  check(weight_decay >= 0.0, bad("weight_decay", format_real(weight_decay), "[0, inf)"));
  check(validation_fraction >= 0.0 && validation_fraction <= 0.5,
        bad("validation_fraction", format_real(validation_fraction), "[0, 0.5]"));
  check(patience >= 0, bad("patience", std::to_string(patience), "[0, inf)"));
  check(neighbors >= 1, bad("neighbors", std::to_string(neighbors), "[1, inf)"));
  check(weights_size == 0 || weights_size >= 2, bad("weights_size", std::to_string(weights_size), "0 or [2, inf)"));
  check(folds >= 2, bad("folds", std::to_string(folds), "[2, inf)"));
  check(mc_replications >= 1, bad("mc_replications", std::to_string(mc_replications), "[1, inf)"));
  check(!mc_n_train.empty() && !mc_rho.empty() && !mc_error_dists.empty() && !mc_kinds.empty(),
        "mc_n_train, mc_rho, mc_error_dists and mc_kinds must be nonempty");
  for (int n : mc_n_train) check(n >= 2, bad("mc_n_train", std::to_string(n), "[2, inf)"));
  for (double r : mc_rho) check(r > -1.0 && r < 1.0, bad("mc_rho", format_real(r), "(-1, 1)"));
  for (const auto& layers : tune_hidden_sizes) {
    check(!layers.empty(), "tune_hidden_sizes has an empty candidate");
    for (int h : layers) check(h >= 1, bad("tune_hidden_sizes", std::to_string(h), "[1, inf) per layer"));
  }
  for (double v : tune_learning_rates) check(v > 0.0, bad("tune_learning_rates", format_real(v), "(0, inf)"));
  for (int v : tune_batch_sizes) check(v >= 1, bad("tune_batch_sizes", std::to_string(v), "[1, inf)"));
  for (int v : tune_basis_sizes) check(v >= 1, bad("tune_basis_sizes", std::to_string(v), "[1, inf)"));
  for (double v : tune_weight_decays) check(v >= 0.0, bad("tune_weight_decays", format_real(v), "[0, inf)"));
  for (int v : tune_epochs) check(v >= 1, bad("tune_epochs", std::to_string(v), "[1, inf)"));
  for (int v : tune_neighbor_counts) check(v >= 1, bad("tune_neighbor_counts", std::to_string(v), "[1, inf)"));
  return out;
}

void RunConfig::validate_for(const std::string& subcommand) const {
  std::vector<std::string> missing;
  const auto need = [&](const char* key, const std::string& value) {
    if (value.empty()) {
      missing.push_back("missing required key '" + std::string(key) + "' for " + subcommand);
    } else if (!std::filesystem::exists(value)) {
      missing.push_back(std::string(key) + " = " + value + " does not exist");
    }
  };
  const auto maybe = [&](const char* key, const std::string& value) {
    if (!value.empty() && !std::filesystem::exists(value)) {
      missing.push_back(std::string(key) + " = " + value + " does not exist");
    }
  };
  const bool spatial = kind != ModelKind::kFdnn;
  if (subcommand == "fit" || subcommand == "tune") {
    need("train_functional", train_functional);
    need("train_scalars", train_scalars);
    maybe("train_coordinates", train_coordinates);
    maybe("train_weights", train_weights);
    if (spatial && train_weights.empty() && train_coordinates.empty()) {
      missing.push_back(std::string(to_string(kind)) + " needs train_weights or train_coordinates");
    }
  } else if (subcommand == "predict" || subcommand == "plotdata") {
    need("model", model);
    need("test_functional", test_functional);
    need("test_scalars", test_scalars);
    maybe("test_coordinates", test_coordinates);
    maybe("test_weights", test_weights);
  } else if (subcommand == "weights") {
    maybe("train_coordinates", train_coordinates);
  } else if (subcommand == "moran") {
    need("train_scalars", train_scalars);
    maybe("train_coordinates", train_coordinates);
    maybe("train_weights", train_weights);
    if (train_weights.empty() && train_coordinates.empty()) {
      missing.push_back("moran needs train_weights or train_coordinates");
    }
  }
  if (!missing.empty()) throw Error(ErrorKind::kConfig, join_problems(missing), subcommand);
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (k == nullptr) throw Error(ErrorKind::kConfig, "unknown key '" + key + "'");
  try {
    k->set(config, value);
  } catch (const BadValue& bad) {
    throw Error(ErrorKind::kConfig, "'" + key + "' expects " + bad.expected + ", got '" + trim(value) + "'");
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig config;
  std::vector<std::string> problems;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string at = source + ":" + std::to_string(number) + ": ";
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      problems.push_back(at + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const Key* k = find_key(key);
    if (k == nullptr) {
      problems.push_back(at + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      problems.push_back(at + "duplicate key '" + key + "'");
      continue;
    }
    try {
      k->set(config, value);
    } catch (const BadValue& bad) {
      problems.push_back(at + "'" + key + "' expects " + bad.expected + ", got '" + value + "'");
    }
  }
  for (const auto& p : config.problems()) problems.push_back(source + ": " + p);
  if (!problems.empty()) throw Error(ErrorKind::kConfig, join_problems(problems), source);
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot read config file", path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace sfdnn
