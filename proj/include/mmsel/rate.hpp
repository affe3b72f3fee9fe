// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mmsel/channel.hpp"
#include "mmsel/combinatorics.hpp"
#include "mmsel/network_config.hpp"
#include "mmsel/precoding.hpp"

namespace mmsel {

struct RateReport {
  std::vector<double> sinr;
  double sum_rate = 0.0;  // bits/s/Hz
  double noise_power = 1.0;
  bool rank_deficient = false;
};

/// gamma_k = |b_k F_RF f_k|^2 / (sum_{k' != k} |b_k F_RF f_k'|^2 + sigma^2).
std::vector<double> sinr_per_user(const Eigen::MatrixXcd& selected,
                                  const PrecoderPair& precoders, double noise_power);

/// sum_k log2(1 + gamma_k).
double sum_rate(std::span<const double> sinr);

/// Precode the users in `subset` and score them. Degenerate subsets are
/// flagged, never rejected.
RateReport evaluate_selection(const ChannelMatrix& channel, const UserSubset& subset,
                              double noise_power);

inline double selection_rate(const ChannelMatrix& channel, const UserSubset& subset,
                             double noise_power) {
  return evaluate_selection(channel, subset, noise_power).sum_rate;
}

/// Noise power for a given SNR with unit per-stream transmit power.
double noise_power_from_snr_db(double snr_db);

enum class Algorithm { kExhaustive, kBpso, kGreedy, kCnn };

std::string_view algorithm_name(Algorithm a);

/// Analytic online cost of each selection method. Rate evaluations are
/// charged N_T^2 N_r^2 complex operations each.
struct OpCountModel {
  int n_tx = 144;
  int n_users = 10;
  int n_select = 6;
  int bpso_pop = 10;
  int bpso_iters = 10;
  NetworkConfig cnn;

  void validate() const;
};

/// Network shape matching the model's channel dimensions and class count.
NetworkConfig cnn_for(const OpCountModel& model);

std::uint64_t count_ops(const OpCountModel& model, Algorithm algorithm);

}  // namespace mmsel
