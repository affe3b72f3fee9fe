// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace mmsel {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  N v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string join(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ",";
    s += format_double(values[i]);
  }
  return s;
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename N>
Key number_key(const char* name, N ExperimentConfig::*field) {
  return {name,
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_number<N>(name, v);
          },
          [field](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<N>) {
              return format_double(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          }};
}

Key string_key(const char* name, std::string ExperimentConfig::*field) {
  return {name, [field](ExperimentConfig& c, const std::string& v) { c.*field = trim(v); },
          [field](const ExperimentConfig& c) { return c.*field; }};
}

Key grid_key(const char* name, std::vector<double> ExperimentConfig::*field) {
  return {name, [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_grid(v); },
          [field](const ExperimentConfig& c) { return join(c.*field); }};
}

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  static const std::vector<Key> table = {
      number_key("n_tx", &C::n_tx),
      number_key("n_users", &C::n_users),
      number_key("n_select", &C::n_select),
      number_key("array_rows", &C::array_rows),
      number_key("array_cols", &C::array_cols),
      number_key("spacing", &C::spacing),
      number_key("n_paths", &C::n_paths),
      number_key("path_loss", &C::path_loss),
      number_key("label_snr_db", &C::label_snr_db),
      number_key("samples", &C::samples),
      number_key("train_fraction", &C::train_fraction),
      number_key("epochs", &C::epochs),
      number_key("batch_size", &C::batch_size),
      number_key("learning_rate", &C::learning_rate),
      number_key("keep_prob", &C::keep_prob),
      number_key("threads", &C::threads),
      grid_key("snr_grid_db", &C::snr_grid_db),
      grid_key("csi_accuracies", &C::csi_accuracies),
      number_key("trials", &C::trials),
      number_key("bpso_pop", &C::bpso_pop),
      number_key("bpso_iters", &C::bpso_iters),
      number_key("seed", &C::seed),
      string_key("dataset", &C::dataset),
      string_key("checkpoint", &C::checkpoint),
      string_key("metrics", &C::metrics),
  };
  return table;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_number<double>("grid", item));
    if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
      throw ConfigError("range grid must be start:step:stop with step > 0: '" + text + "'");
    }
    const auto n = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
  } else {
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<double>("grid", item));
  }
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  for (const Key& entry : keys()) {
    if (k == entry.name) {
      entry.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + k + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    }
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

void write_config_comments(std::ostream& out, const ExperimentConfig& config) {
  out << "# rng_algorithm = " << kRngAlgorithm << '\n';
  for (const auto& [k, v] : config_entries(config)) out << "# " << k << " = " << v << '\n';
}

void ExperimentConfig::validate() const {
  try {
    channel(seed).validate();
    class_count(n_users, n_select);
    network_config().validate();
    train_config().validate();
    bpso_params(0).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (snr_grid_db.empty()) throw ConfigError("snr_grid_db must not be empty");
  if (csi_accuracies.empty()) throw ConfigError("csi_accuracies must not be empty");
  for (double xi : csi_accuracies) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigError("csi accuracies must lie in [0, 1]");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train_fraction must lie in [0, 1]");
  }
}

ChannelConfig ExperimentConfig::channel(std::uint64_t channel_seed) const {
  ChannelConfig c;
  c.n_tx = n_tx;
  c.n_users = n_users;
  c.n_paths = n_paths;
  c.path_loss = path_loss;
  c.geometry = {array_rows, array_cols, spacing};
  c.seed = channel_seed;
  return c;
}

DatasetSpec ExperimentConfig::dataset_spec() const {
  DatasetSpec s;
  s.channel = channel(seed);
  s.n_samples = samples;
  s.n_select = n_select;
  s.noise_power = label_noise_power();
  s.train_fraction = train_fraction;
  return s;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.seed = train_seed();
  t.threads = threads;
  return t;
}

NetworkConfig ExperimentConfig::network_config() const {
  NetworkConfig n;
  n.in_height = n_users;
  n.in_width = n_tx;
  n.keep_prob = keep_prob;
  n.classes = static_cast<int>(class_count(n_users, n_select));
  return n;
}

OpCountModel ExperimentConfig::op_count_model() const {
  OpCountModel m;
  m.n_tx = n_tx;
  m.n_users = n_users;
  m.n_select = n_select;
  m.bpso_pop = bpso_pop;
  m.bpso_iters = bpso_iters;
  m.cnn = network_config();
  return m;
}

BpsoParams ExperimentConfig::bpso_params(std::uint64_t bpso_seed) const {
  BpsoParams p;
  p.pop_size = bpso_pop;
  p.iterations = bpso_iters;
  p.seed = bpso_seed;
  return p;
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

ChannelMatrix evaluation_channel(const ExperimentConfig& config, int trial) {
  Rng rng = substream(config.eval_seed(), static_cast<std::uint64_t>(trial));
  return generate_channel_matrix(config.channel(config.eval_seed()), rng);
}

void check_network_fits(const NetworkConfig& network, const ExperimentConfig& config) {
  if (network.in_height != config.n_users || network.in_width != config.n_tx ||
      network.classes != static_cast<int>(class_count(config.n_users, config.n_select))) {
    throw std::invalid_argument(
        "checkpoint expects " + std::to_string(network.in_height) + " users x " +
        std::to_string(network.in_width) + " antennas with " + std::to_string(network.classes) +
        " classes; config has " + std::to_string(config.n_users) + " x " +
        std::to_string(config.n_tx) + " choosing " + std::to_string(config.n_select));
  }
}

UserSubset cnn_select(const NetworkState<float>& state, const ChannelMatrix& channel,
                      int n_select) {
  const std::vector<double> planes = normalize_sample(channel);
  const Prediction p = predict(state, std::span<const double>(planes));
  return combo_unrank(p.label, static_cast<int>(channel.rows()), n_select);
}

namespace {

// Substream tags keep BPSO and CSI-error draws apart from channel draws.
constexpr std::uint64_t kBpsoStream = 0x6270736FULL;
constexpr std::uint64_t kCsiStream = 0x63736900ULL;

}  // namespace

EvalRateResult run_eval_rate(const ExperimentConfig& config, const NetworkState<float>& state) {
  config.validate();
  check_network_fits(state.config, config);
  const int trials = config.trials;
  const std::size_t n_snr = config.snr_grid_db.size();

  EvalRateResult result;
  result.points.resize(n_snr);
  for (std::size_t s = 0; s < n_snr; ++s) {
    result.points[s].snr_db = config.snr_grid_db[s];
    for (auto& r : result.points[s].rates) r.assign(static_cast<std::size_t>(trials), 0.0);
  }
  std::size_t violations = 0;
  const std::uint64_t bpso_base = derive_seed(config.eval_seed(), kBpsoStream);

#pragma omp parallel for schedule(dynamic) reduction(+ : violations)
  for (int t = 0; t < trials; ++t) {
    const ChannelMatrix h = evaluation_channel(config, t);
    const UserSubset cnn = cnn_select(state, h, config.n_select);
    for (std::size_t s = 0; s < n_snr; ++s) {
      const double noise = noise_power_from_snr_db(config.snr_grid_db[s]);
      const std::uint64_t bpso_seed =
          derive_seed(bpso_base, static_cast<std::uint64_t>(t) * n_snr + s);
      const double es = exhaustive_search(h, config.n_select, noise).rate;
      const double greedy = greedy_select(h, config.n_select, noise).rate;
      const double bpso =
          bpso_select(h, config.n_select, noise, config.bpso_params(bpso_seed)).rate;
      const double cnn_rate = selection_rate(h, cnn, noise);
      auto& rates = result.points[s].rates;
      const auto i = static_cast<std::size_t>(t);
      rates[0][i] = es;
      rates[1][i] = greedy;
      rates[2][i] = bpso;
      rates[3][i] = cnn_rate;
      if (greedy > es || bpso > es || cnn_rate > es) ++violations;
    }
  }
  result.dominance_violations = violations;
  return result;
}

std::vector<CsiPoint> run_csi_sweep(const ExperimentConfig& config,
                                    const NetworkState<float>& state) {
  config.validate();
  check_network_fits(state.config, config);
  const int trials = config.trials;
  const std::size_t n_xi = config.csi_accuracies.size();
  const std::size_t n_snr = config.snr_grid_db.size();
  std::vector<CsiPoint> points(n_xi * n_snr);
  for (std::size_t x = 0; x < n_xi; ++x) {
    for (std::size_t s = 0; s < n_snr; ++s) {
      CsiPoint& p = points[x * n_snr + s];
      p.snr_db = config.snr_grid_db[s];
      p.accuracy = config.csi_accuracies[x];
      p.rates.assign(static_cast<std::size_t>(trials), 0.0);
    }
  }
  const std::uint64_t csi_base = derive_seed(config.eval_seed(), kCsiStream);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    const ChannelMatrix h = evaluation_channel(config, t);
    for (std::size_t x = 0; x < n_xi; ++x) {
      // Same error draw for every accuracy so the sweep is paired.
      Rng rng = substream(csi_base, static_cast<std::uint64_t>(t));
      const ChannelMatrix estimate = apply_csi_error(h, config.csi_accuracies[x], rng);
      const UserSubset chosen = cnn_select(state, estimate, config.n_select);
      for (std::size_t s = 0; s < n_snr; ++s) {
        points[x * n_snr + s].rates[static_cast<std::size_t>(t)] =
            selection_rate(h, chosen, noise_power_from_snr_db(config.snr_grid_db[s]));
      }
    }
  }
  return points;
}

std::vector<ComplexityRow> run_complexity(const ExperimentConfig& config) {
  const OpCountModel model = config.op_count_model();
  std::vector<ComplexityRow> rows;
  for (Algorithm a : {Algorithm::kExhaustive, Algorithm::kBpso, Algorithm::kGreedy,
                      Algorithm::kCnn}) {
    rows.push_back({a, count_ops(model, a)});
  }
  return rows;
}

HeldOutRates evaluate_held_out(const Dataset& dataset, const NetworkState<float>& state,
                               const BpsoParams& bpso) {
  const DatasetHeader& h = dataset.header;
  const int n_users = static_cast<int>(h.n_users);
  const int n_tx = static_cast<int>(h.n_tx);
  const int n_select = static_cast<int>(h.n_select);
  const auto begin = static_cast<std::int64_t>(h.n_train);
  const auto end = static_cast<std::int64_t>(dataset.size());

  HeldOutRates out;
  out.samples = static_cast<std::size_t>(std::max<std::int64_t>(0, end - begin));
  if (out.samples == 0) return out;
  double es = 0, greedy = 0, swarm = 0, cnn = 0;
  std::size_t hits = 0;

#pragma omp parallel for schedule(dynamic) reduction(+ : es, greedy, swarm, cnn, hits)
  for (std::int64_t i = begin; i < end; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const ChannelMatrix ch = planes_to_channel(dataset.sample(idx), n_users, n_tx);
    const Prediction p = predict(state, dataset.sample(idx));
    if (p.label == dataset.label(idx)) ++hits;
    BpsoParams params = bpso;
    params.seed = derive_seed(bpso.seed, idx);
    es += exhaustive_search(ch, n_select, h.noise_power).rate;
    greedy += greedy_select(ch, n_select, h.noise_power).rate;
    swarm += bpso_select(ch, n_select, h.noise_power, params).rate;
    cnn += selection_rate(ch, combo_unrank(p.label, n_users, n_select), h.noise_power);
  }
  const double n = static_cast<double>(out.samples);
  out.accuracy = static_cast<double>(hits) / n;
  out.mean_rate = {es / n, greedy / n, swarm / n, cnn / n};
  return out;
}

void write_eval_rate_csv(std::ostream& out, const ExperimentConfig& config,
                         const EvalRateResult& result) {
  write_config_comments(out, config);
  out << "# dominance_violations = " << result.dominance_violations << '\n';
  out << "snr_db,method,mean_rate,std_rate\n";
  out.precision(10);
  for (const RatePoint& p : result.points) {
    for (std::size_t m = 0; m < kMethods.size(); ++m) {
      const SummaryStats s = summarize(p.rates[m]);
      out << p.snr_db << ',' << algorithm_name(kMethods[m]) << ',' << s.mean << ',' << s.stddev
          << '\n';
    }
  }
}

void write_csi_csv(std::ostream& out, const ExperimentConfig& config,
                   const std::vector<CsiPoint>& points) {
  write_config_comments(out, config);
  out << "snr_db,xi,mean_rate\n";
  out.precision(10);
  for (const CsiPoint& p : points) {
    out << p.snr_db << ',' << p.accuracy << ',' << summarize(p.rates).mean << '\n';
  }
}

void write_complexity_csv(std::ostream& out, const ExperimentConfig& config,
                          const std::vector<ComplexityRow>& rows) {
  write_config_comments(out, config);
  out << "method,operations\n";
  for (const ComplexityRow& r : rows) out << algorithm_name(r.method) << ',' << r.operations << '\n';
}

}  // namespace mmsel
