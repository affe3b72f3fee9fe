// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors
//
// mmsel: dataset generation, CNN training and selection experiments.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mmsel/experiment.hpp"

namespace fs = std::filesystem;
using namespace mmsel;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct UsageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::map<std::string, std::string> overrides;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig c;
  if (!g.config_path.empty()) c = load_config(g.config_path);
  for (const auto& [key, value] : g.overrides) apply_setting(c, key, value);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

void refuse_existing(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw UsageFailure(path.string() + " exists; pass --force to overwrite");
  }
}

// Runs `body` with the CSV destination: --out file or stdout.
template <typename F>
void with_output(const Globals& g, F&& body) {
  if (g.out.empty()) {
    body(std::cout);
    return;
  }
  refuse_existing(g.out, g.force);
  std::ofstream out(g.out, std::ios::trunc);
  if (!out) throw IoError("cannot open " + g.out);
  body(out);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_gen_dataset(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const fs::path path = g.out.empty() ? fs::path(c.dataset) : fs::path(g.out);
  refuse_existing(path, g.force);
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = build_dataset(c.dataset_spec(), path);
  std::cerr << "wrote " << ds.size() << " samples to " << path.string() << " in "
            << seconds_since(t0) << " s\n";
  std::ifstream manifest(manifest_path(path));
  std::cout << manifest.rdbuf();
  return 0;
}

int cmd_train(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const fs::path ckpt = g.out.empty() ? fs::path(c.checkpoint) : fs::path(g.out);
  refuse_existing(ckpt, g.force);
  const Dataset ds = load_dataset(c.dataset);
  NetworkConfig net = network_config_for(ds.header, c.network_config());
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult<float> r =
      train<float>(ds, net, c.train_config(), [&](const EpochMetrics& m) {
        std::fprintf(stderr, "epoch %4d  loss %.5f  train_acc %.4f  test_acc %.4f  (%.1f s)\n",
                     m.epoch, m.train_loss, m.train_accuracy, m.test_accuracy,
                     seconds_since(t0));
      });
  save_checkpoint(r.state, ckpt);
  write_metrics_csv(r.history, c.metrics);
  std::cerr << "checkpoint " << ckpt.string() << ", metrics " << c.metrics << '\n';
  return 0;
}

int cmd_eval_rate(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const NetworkState<float> state = load_checkpoint<float>(c.checkpoint);
  const EvalRateResult r = run_eval_rate(c, state);
  with_output(g, [&](std::ostream& out) { write_eval_rate_csv(out, c, r); });
  if (r.dominance_violations != 0) {
    std::cerr << "error: " << r.dominance_violations
              << " draws where a method beat exhaustive search\n";
    return kDataError;
  }
  return 0;
}

int cmd_csi_sweep(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const NetworkState<float> state = load_checkpoint<float>(c.checkpoint);
  const auto points = run_csi_sweep(c, state);
  with_output(g, [&](std::ostream& out) { write_csi_csv(out, c, points); });
  return 0;
}

int cmd_complexity(const Globals& g) {
  ExperimentConfig c = resolve(g);
  const auto rows = run_complexity(c);
  with_output(g, [&](std::ostream& out) { write_complexity_csv(out, c, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave MU-MIMO user selection: datasets, CNN training, experiments"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;

  app.add_option("--config", g.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides config 'seed')");
  app.add_option("--out", g.out, "output path (dataset, checkpoint or CSV)");
  app.add_flag("--force", g.force, "overwrite existing outputs");
  for (const auto& [key, value] : config_entries(ExperimentConfig{})) {
    if (key == "seed") continue;
    app.add_option_function<std::string>(
        "--" + key, [&g, k = key](const std::string& v) { g.overrides[k] = v; },
        "override config '" + key + "' (default " + value + ")");
  }

  std::map<CLI::App*, int (*)(const Globals&)> commands = {
      {app.add_subcommand("gen-dataset", "generate and label a channel dataset"),
       cmd_gen_dataset},
      {app.add_subcommand("train", "train the CNN on a dataset"), cmd_train},
      {app.add_subcommand("eval-rate", "sum rate vs SNR for ES, greedy, BPSO and CNN"),
       cmd_eval_rate},
      {app.add_subcommand("csi-sweep", "CNN sum rate under imperfect CSI"), cmd_csi_sweep},
      {app.add_subcommand("complexity", "analytic operation counts per method"),
       cmd_complexity},
  };
  for (auto& [sub, fn] : commands) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }
  if (*seed_opt) g.seed = seed;

  try {
    for (auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(g);
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UsageFailure& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
