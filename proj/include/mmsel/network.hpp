// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "mmsel/layers.hpp"
#include "mmsel/network_config.hpp"
#include "mmsel/rng.hpp"
#include "mmsel/tensor.hpp"

namespace mmsel {

/// Parameter slots in declaration (and checkpoint) order.
enum ParamSlot : int {
  kConv1Weights,
  kConv1Bias,
  kConv2Weights,
  kConv2Bias,
  kDenseWeights,
  kDenseBias,
  kOutputWeights,
  kOutputBias,
  kParamCount
};

std::string_view param_name(int slot);

template <typename T>
struct NetworkState {
  NetworkConfig config;
  std::vector<Tensor<T>> params;
  std::uint64_t step = 0;

  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

/// Parameter shapes for `config`, in slot order.
std::vector<std::vector<int>> param_shapes(const NetworkConfig& config);

/// He-normal weights (std sqrt(2 / fan_in)), zero biases.
template <typename T>
NetworkState<T> init_network(const NetworkConfig& config, std::uint64_t seed);

template <typename T>
struct StepResult {
  double loss = 0.0;
  int correct = 0;
  std::vector<Tensor<T>> grads;  // slot order
};

/// Full forward and backward pass of one batch x (B, C, H, W). Dropout is
/// active iff `dropout_rng` is non-null.
template <typename T>
StepResult<T> forward_backward(const NetworkState<T>& state, const Tensor<T>& x,
                               std::span<const std::uint32_t> labels, Rng* dropout_rng);

/// Inference logits (B, classes); dropout disabled.
template <typename T>
Tensor<T> forward_logits(const NetworkState<T>& state, const Tensor<T>& x);

template <typename T>
void sgd_step(NetworkState<T>& state, const std::vector<Tensor<T>>& grads,
              double learning_rate);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint: "MMWC", u32 version, config echo, u64 step, u32 slot count,
// then per slot u32 element count and float32 values. Little-endian.
template <typename T>
void save_checkpoint(const NetworkState<T>& state, const std::filesystem::path& path);

template <typename T>
NetworkState<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace mmsel
