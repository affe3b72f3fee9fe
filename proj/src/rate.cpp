// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/rate.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsel {

std::vector<double> sinr_per_user(const Eigen::MatrixXcd& selected,
                                  const PrecoderPair& precoders, double noise_power) {
  if (!(noise_power > 0.0)) throw std::invalid_argument("noise power must be positive");
  const Eigen::MatrixXcd gains = selected * (precoders.f_rf * precoders.f_bb);
  const Eigen::Index n = gains.rows();
  if (gains.cols() != n) throw std::invalid_argument("precoder/stream count mismatch");

  std::vector<double> sinr(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    double interference = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != k) interference += std::norm(gains(k, j));
    }
    sinr[static_cast<std::size_t>(k)] = std::norm(gains(k, k)) / (interference + noise_power);
  }
  return sinr;
}

double sum_rate(std::span<const double> sinr) {
  double r = 0.0;
  for (double g : sinr) r += std::log2(1.0 + g);
  return r;
}

RateReport evaluate_selection(const ChannelMatrix& channel, const UserSubset& subset,
                              double noise_power) {
  const Eigen::MatrixXcd b = select_rows(channel, subset);
  const PrecoderPair p = hybrid_precoders(b);
  RateReport report;
  report.sinr = sinr_per_user(b, p, noise_power);
  report.sum_rate = sum_rate(report.sinr);
  report.noise_power = noise_power;
  report.rank_deficient = p.rank_deficient;
  return report;
}

double noise_power_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kExhaustive: return "ES";
    case Algorithm::kBpso: return "BPSO";
    case Algorithm::kGreedy: return "Greedy";
    case Algorithm::kCnn: return "CNN";
  }
  return "?";
}

void OpCountModel::validate() const {
  if (n_tx < 1 || n_users < 1 || n_select < 1 || bpso_pop < 1 || bpso_iters < 1) {
    throw std::invalid_argument("op-count model needs positive dimensions");
  }
  if (n_select > n_users) throw std::invalid_argument("n_select exceeds n_users");
}

NetworkConfig cnn_for(const OpCountModel& model) {
  NetworkConfig c = model.cnn;
  c.in_height = model.n_users;
  c.in_width = model.n_tx;
  c.classes = static_cast<int>(class_count(model.n_users, model.n_select));
  return c;
}

std::uint64_t count_ops(const OpCountModel& model, Algorithm algorithm) {
  model.validate();
  const std::uint64_t nt = static_cast<std::uint64_t>(model.n_tx);
  const std::uint64_t nr = static_cast<std::uint64_t>(model.n_select);
  const std::uint64_t per_evaluation = nt * nt * nr * nr;
  switch (algorithm) {
    case Algorithm::kExhaustive:
      return binomial(model.n_users, model.n_select) * per_evaluation;
    case Algorithm::kBpso:
      return static_cast<std::uint64_t>(model.bpso_pop) *
             static_cast<std::uint64_t>(model.bpso_iters) * per_evaluation;
    case Algorithm::kGreedy:
      return static_cast<std::uint64_t>(model.n_users) * per_evaluation;
    case Algorithm::kCnn:
      return cnn_multiply_count(cnn_for(model));
  }
  return 0;
}

}  // namespace mmsel
