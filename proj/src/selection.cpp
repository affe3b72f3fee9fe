// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mmsel/rate.hpp"

namespace mmsel {
namespace {

void check_select(const ChannelMatrix& channel, int n_select) {
  if (n_select < 1 || n_select > channel.rows()) {
    throw std::invalid_argument("need 1 <= n_select <= number of users");
  }
}

// Below this many subsets the thread fork costs more than the scan.
constexpr std::int64_t kParallelScanThreshold = 64;

struct Best {
  double rate;
  std::uint32_t label;
};

// Higher rate wins; equal rates go to the smaller label.
bool better(const Best& a, const Best& b) {
  return a.rate > b.rate || (a.rate == b.rate && a.label < b.label);
}

}  // namespace

SelectionResult exhaustive_search_serial(const ChannelMatrix& channel, int n_select,
                                         double noise_power) {
  check_select(channel, n_select);
  const int n_users = static_cast<int>(channel.rows());
  const std::uint32_t w = class_count(n_users, n_select);
  Best best{-1.0, 0};
  for (std::uint32_t label = 0; label < w; ++label) {
    const UserSubset s = combo_unrank(ClassLabel{label}, n_users, n_select);
    const double r = selection_rate(channel, s, noise_power);
    if (r > best.rate) best = {r, label};
  }
  return {combo_unrank(ClassLabel{best.label}, n_users, n_select), best.rate};
}

SelectionResult exhaustive_search(const ChannelMatrix& channel, int n_select,
                                  double noise_power) {
  check_select(channel, n_select);
  const int n_users = static_cast<int>(channel.rows());
  const std::int64_t w = class_count(n_users, n_select);
  Best best{-1.0, 0};

#pragma omp parallel if (w >= kParallelScanThreshold)
  {
    Best local{-1.0, 0};
#pragma omp for schedule(static) nowait
    for (std::int64_t label = 0; label < w; ++label) {
      const auto l = static_cast<std::uint32_t>(label);
      const double r =
          selection_rate(channel, combo_unrank(ClassLabel{l}, n_users, n_select), noise_power);
      if (better({r, l}, local)) local = {r, l};
    }
#pragma omp critical(mmsel_es_reduce)
    if (better(local, best)) best = local;
  }
  return {combo_unrank(ClassLabel{best.label}, n_users, n_select), best.rate};
}

SelectionResult greedy_select(const ChannelMatrix& channel, int n_select,
                              double noise_power) {
  check_select(channel, n_select);
  const int n_users = static_cast<int>(channel.rows());
  std::vector<int> chosen;
  double chosen_rate = 0.0;
  for (int step = 0; step < n_select; ++step) {
    int best_user = -1;
    double best_rate = -1.0;
    for (int u = 0; u < n_users; ++u) {
      if (std::find(chosen.begin(), chosen.end(), u) != chosen.end()) continue;
      std::vector<int> trial = chosen;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), u), u);
      const double r = selection_rate(channel, UserSubset(std::move(trial)), noise_power);
      if (r > best_rate) {
        best_rate = r;
        best_user = u;
      }
    }
    chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), best_user), best_user);
    chosen_rate = best_rate;
  }
  return {UserSubset(std::move(chosen)), chosen_rate};
}

void BpsoParams::validate() const {
  if (pop_size < 1) throw std::invalid_argument("BPSO pop_size must be >= 1");
  if (iterations < 0) throw std::invalid_argument("BPSO iterations must be >= 0");
  if (!(v_max > 0.0)) throw std::invalid_argument("BPSO v_max must be positive");
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Keep sampled ones ranked by sigmoid score until exactly n_select remain;
// top up from the highest-scoring zeros. Ties go to the smaller index.
std::vector<int> repair(const std::vector<char>& bits, const std::vector<double>& velocity,
                        int n_select) {
  const int n = static_cast<int>(bits.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (bits[a] != bits[b]) return bits[a] > bits[b];
    return velocity[a] > velocity[b];
  });
  std::vector<int> picked(order.begin(), order.begin() + n_select);
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<char> to_bits(const std::vector<int>& subset, int n) {
  std::vector<char> bits(static_cast<std::size_t>(n), 0);
  for (int i : subset) bits[static_cast<std::size_t>(i)] = 1;
  return bits;
}

}  // namespace

BpsoResult bpso_select(const ChannelMatrix& channel, int n_select, double noise_power,
                       const BpsoParams& params) {
  check_select(channel, n_select);
  params.validate();
  const int n = static_cast<int>(channel.rows());
  Rng rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> vel(-params.v_max, params.v_max);

  struct Particle {
    std::vector<double> velocity;
    std::vector<char> position;
    std::vector<char> best_position;
    double best_rate = -1.0;
  };

  BpsoResult result;
  std::vector<char> global_best;
  double global_rate = -1.0;

  auto score = [&](const std::vector<char>& bits) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (bits[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    ++result.evaluations;
    return selection_rate(channel, UserSubset(std::move(idx)), noise_power);
  };

  std::vector<Particle> swarm(static_cast<std::size_t>(params.pop_size));
  std::vector<int> users(static_cast<std::size_t>(n));
  std::iota(users.begin(), users.end(), 0);
  for (Particle& p : swarm) {
    p.velocity.resize(static_cast<std::size_t>(n));
    for (double& v : p.velocity) v = vel(rng);
    std::shuffle(users.begin(), users.end(), rng);
    std::vector<int> start(users.begin(), users.begin() + n_select);
    std::sort(start.begin(), start.end());
    p.position = to_bits(start, n);
    p.best_position = p.position;
    p.best_rate = score(p.position);
    if (p.best_rate > global_rate) {
      global_rate = p.best_rate;
      global_best = p.position;
    }
  }
  result.best_history.push_back(global_rate);

  for (int it = 0; it < params.iterations; ++it) {
    const double inertia =
        params.iterations > 1
            ? params.inertia_start - (params.inertia_start - params.inertia_end) * it /
                                         (params.iterations - 1)
            : params.inertia_start;
    for (Particle& p : swarm) {
      std::vector<char> sampled(static_cast<std::size_t>(n));
      for (std::size_t d = 0; d < static_cast<std::size_t>(n); ++d) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = inertia * p.velocity[d] +
                   params.cognitive * r1 * (p.best_position[d] - p.position[d]) +
                   params.social * r2 * (global_best[d] - p.position[d]);
        v = std::clamp(v, -params.v_max, params.v_max);
        p.velocity[d] = v;
        sampled[d] = unit(rng) < sigmoid(v) ? 1 : 0;
      }
      p.position = to_bits(repair(sampled, p.velocity, n_select), n);
      const double r = score(p.position);
      if (r > p.best_rate) {
        p.best_rate = r;
        p.best_position = p.position;
      }
    }
    // Swarm-best is refreshed once per iteration (synchronous update), lowest
    // particle index on ties.
    for (const Particle& p : swarm) {
      if (p.best_rate > global_rate) {
        global_rate = p.best_rate;
        global_best = p.best_position;
      }
    }
    result.best_history.push_back(global_rate);
  }

  std::vector<int> idx;
  for (int i = 0; i < n; ++i) {
    if (global_best[static_cast<std::size_t>(i)]) idx.push_back(i);
  }
  result.subset = UserSubset(std::move(idx));
  result.rate = global_rate;
  return result;
}

}  // namespace mmsel
