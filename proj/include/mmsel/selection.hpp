// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>
#include <vector>

#include "mmsel/channel.hpp"
#include "mmsel/combinatorics.hpp"

namespace mmsel {

struct SelectionResult {
  UserSubset subset;
  double rate = 0.0;
};

/// Best of all C(N_R, n_select) subsets; ties go to the smallest label.
/// Subsets are scored in parallel when the search space is large enough.
SelectionResult exhaustive_search(const ChannelMatrix& channel, int n_select,
                                  double noise_power);

/// Single-threaded scan in label order. Reference for exhaustive_search.
SelectionResult exhaustive_search_serial(const ChannelMatrix& channel, int n_select,
                                         double noise_power);

/// Incremental augmentation: each step adds the user that maximizes the rate
/// of the enlarged set, smallest index on ties.
SelectionResult greedy_select(const ChannelMatrix& channel, int n_select,
                              double noise_power);

struct BpsoParams {
  int pop_size = 10;
  int iterations = 10;
  double inertia_start = 0.9;
  double inertia_end = 0.4;
  double cognitive = 2.0;
  double social = 2.0;
  double v_max = 4.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BpsoResult {
  UserSubset subset;
  double rate = 0.0;
  /// Global-best rate after initialization and after each iteration.
  std::vector<double> best_history;
  int evaluations = 0;
};

/// Binary PSO over membership bit strings. Sampled positions are repaired to
/// exactly n_select ones by sigmoid(velocity) ranking, so every particle is a
/// feasible subset.
BpsoResult bpso_select(const ChannelMatrix& channel, int n_select, double noise_power,
                       const BpsoParams& params);

}  // namespace mmsel
