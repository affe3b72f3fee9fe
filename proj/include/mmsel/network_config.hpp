// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>

namespace mmsel {

/// LeNet-style classifier: conv3x3 -> pool -> conv3x3 -> pool -> dense ->
/// dropout -> dense(classes) -> softmax. Convolutions use same padding and
/// stride 1; pools are 2x2 stride 2 in ceil mode.
struct NetworkConfig {
  int in_channels = 2;
  int in_height = 6;   // users
  int in_width = 16;   // transmit antennas
  int conv1_filters = 16;
  int conv2_filters = 32;
  int kernel = 3;
  int dense_units = 1024;
  double keep_prob = 0.5;
  int classes = 20;

  void validate() const;

  int pool1_height() const { return (in_height + 1) / 2; }
  int pool1_width() const { return (in_width + 1) / 2; }
  int pool2_height() const { return (pool1_height() + 1) / 2; }
  int pool2_width() const { return (pool1_width() + 1) / 2; }
  int flat_size() const { return conv2_filters * pool2_height() * pool2_width(); }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Multiplications of one inference pass (convolutions and dense layers).
std::uint64_t cnn_multiply_count(const NetworkConfig& config);

}  // namespace mmsel
