// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "mmsel/combinatorics.hpp"
#include "mmsel/dataset.hpp"
#include "mmsel/network.hpp"

namespace mmsel {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 100;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  /// OpenMP threads while training; 1 is the bit-deterministic mode, 0 keeps
  /// the runtime default.
  int threads = 1;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // with dropout active, over the epoch
  double test_accuracy = 0.0;
};

template <typename T>
struct TrainResult {
  NetworkState<T> state;
  std::vector<EpochMetrics> history;
};

/// Network input and class count implied by a dataset.
NetworkConfig network_config_for(const DatasetHeader& header, NetworkConfig base = {});

/// Copy samples [begin, end) into a (B, 2, n_users, n_tx) tensor.
template <typename T>
Tensor<T> gather_batch(const Dataset& dataset, std::span<const std::size_t> indices);

/// SGD over seeded shuffles of the training split; test split evaluated after
/// every epoch. Throws std::invalid_argument when the dataset does not fit
/// the network.
template <typename T>
TrainResult<T> train(const Dataset& dataset, const NetworkConfig& network,
                     const TrainConfig& config,
                     const std::function<void(const EpochMetrics&)>& on_epoch = {});

struct Prediction {
  ClassLabel label;
  std::vector<double> probabilities;
};

/// Argmax class of one sample given as 2 x n_users x n_tx planes.
template <typename T, typename U>
Prediction predict(const NetworkState<T>& state, std::span<const U> planes);

template <typename T>
std::vector<Prediction> predict_batch(const NetworkState<T>& state, const Tensor<T>& x);

/// Top-1 accuracy over samples [begin, end).
template <typename T>
double accuracy(const NetworkState<T>& state, const Dataset& dataset, std::size_t begin,
                std::size_t end);

/// CSV with header epoch,train_loss,train_acc,test_acc and one row per epoch.
void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::filesystem::path& path);

}  // namespace mmsel
