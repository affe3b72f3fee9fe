// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmsel/channel.hpp"
#include "mmsel/dataset.hpp"
#include "mmsel/network.hpp"
#include "mmsel/rate.hpp"
#include "mmsel/selection.hpp"
#include "mmsel/train.hpp"

namespace mmsel {

/// Bad configuration key or value (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything an experiment run depends on. Text form is one `key = value`
/// per line; `#` starts a comment.
struct ExperimentConfig {
  int n_tx = 16;
  int n_users = 6;
  int n_select = 3;
  int array_rows = 4;
  int array_cols = 4;
  double spacing = 0.5;
  int n_paths = 3;
  double path_loss = 1.0;

  double label_snr_db = 10.0;
  std::uint64_t samples = 20000;
  double train_fraction = 0.9;

  int epochs = 200;
  int batch_size = 100;
  double learning_rate = 0.01;
  double keep_prob = 0.5;
  int threads = 1;

  std::vector<double> snr_grid_db = {-10, -5, 0, 5, 10, 15, 20};
  std::vector<double> csi_accuracies = {1.0, 0.9, 0.7};
  int trials = 500;
  int bpso_pop = 10;
  int bpso_iters = 10;

  std::uint64_t seed = 1;
  std::string dataset = "dataset.mmws";
  std::string checkpoint = "model.ckpt";
  std::string metrics = "metrics.csv";

  void validate() const;

  ChannelConfig channel(std::uint64_t channel_seed) const;
  DatasetSpec dataset_spec() const;
  TrainConfig train_config() const;
  NetworkConfig network_config() const;
  OpCountModel op_count_model() const;
  BpsoParams bpso_params(std::uint64_t bpso_seed) const;
  double label_noise_power() const { return noise_power_from_snr_db(label_snr_db); }

  std::uint64_t train_seed() const { return derive_seed(seed, 0x7261696EULL); }
  std::uint64_t eval_seed() const { return derive_seed(seed, 0x6576616CULL); }
};

/// Set one key from its text form. Throws ConfigError for unknown keys or
/// unparsable values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Parse `key = value` lines on top of `base`.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// All keys and values in the text form accepted by parse_config.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

/// Writes the configuration as `# key = value` comment lines.
void write_config_comments(std::ostream& out, const ExperimentConfig& config);

/// SNR grid parser: comma list ("0,10,20") or range ("start:step:stop").
std::vector<double> parse_grid(const std::string& text);

inline constexpr std::array<Algorithm, 4> kMethods = {
    Algorithm::kExhaustive, Algorithm::kGreedy, Algorithm::kBpso, Algorithm::kCnn};

/// Per-draw sum rates of every method at one SNR point, indexed by kMethods.
struct RatePoint {
  double snr_db = 0.0;
  std::array<std::vector<double>, 4> rates;
};

struct EvalRateResult {
  std::vector<RatePoint> points;
  /// Draws where some method beat exhaustive search (must stay zero).
  std::size_t dominance_violations = 0;
};

struct CsiPoint {
  double snr_db = 0.0;
  double accuracy = 1.0;
  std::vector<double> rates;  // CNN selection on estimated channels, scored on true ones
};

struct SummaryStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

SummaryStats summarize(const std::vector<double>& values);

/// Channel draw `trial` of the evaluation stream; shared by every method, SNR
/// point and CSI accuracy.
ChannelMatrix evaluation_channel(const ExperimentConfig& config, int trial);

/// Checks that a checkpoint matches the configured channel dimensions.
void check_network_fits(const NetworkConfig& network, const ExperimentConfig& config);

/// CNN class prediction for a channel, mapped to its user subset.
UserSubset cnn_select(const NetworkState<float>& state, const ChannelMatrix& channel,
                      int n_select);

EvalRateResult run_eval_rate(const ExperimentConfig& config, const NetworkState<float>& state);

std::vector<CsiPoint> run_csi_sweep(const ExperimentConfig& config,
                                    const NetworkState<float>& state);

struct ComplexityRow {
  Algorithm method;
  std::uint64_t operations;
};

std::vector<ComplexityRow> run_complexity(const ExperimentConfig& config);

/// Mean sum rates of each method on the test split of a dataset, at the
/// dataset's labeling noise power.
struct HeldOutRates {
  std::size_t samples = 0;
  double accuracy = 0.0;
  std::array<double, 4> mean_rate{};  // indexed by kMethods
};

HeldOutRates evaluate_held_out(const Dataset& dataset, const NetworkState<float>& state,
                               const BpsoParams& bpso);

// CSV writers. Each starts with the config echo as comment lines.
void write_eval_rate_csv(std::ostream& out, const ExperimentConfig& config,
                         const EvalRateResult& result);
void write_csi_csv(std::ostream& out, const ExperimentConfig& config,
                   const std::vector<CsiPoint>& points);
void write_complexity_csv(std::ostream& out, const ExperimentConfig& config,
                          const std::vector<ComplexityRow>& rows);

}  // namespace mmsel
