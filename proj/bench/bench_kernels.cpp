// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

// OpenMP kernels against their serial references. Thread count follows
// OMP_NUM_THREADS.

#include <random>

#include <benchmark/benchmark.h>

#include "mmsel/channel.hpp"
#include "mmsel/layers.hpp"
#include "mmsel/reference.hpp"
#include "mmsel/selection.hpp"

namespace {

using mmsel::Tensor;

Tensor<float> random_tensor(std::vector<int> shape, std::uint64_t seed) {
  Tensor<float> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (float& v : t.values()) v = n(rng);
  return t;
}

// First convolution of the network on a batch of 100 desk-scale samples.
struct ConvCase {
  Tensor<float> x = random_tensor({100, 2, 6, 16}, 1);
  Tensor<float> w = random_tensor({16, 2, 3, 3}, 2);
  Tensor<float> b = random_tensor({16}, 3);
};

void BM_ConvForwardReference(benchmark::State& state) {
  ConvCase c;
  for (auto _ : state) benchmark::DoNotOptimize(mmsel::reference::conv2d_forward(c.x, c.w, c.b));
}
BENCHMARK(BM_ConvForwardReference)->Unit(benchmark::kMillisecond);

void BM_ConvForward(benchmark::State& state) {
  ConvCase c;
  for (auto _ : state) benchmark::DoNotOptimize(mmsel::conv2d_forward(c.x, c.w, c.b));
}
BENCHMARK(BM_ConvForward)->Unit(benchmark::kMillisecond);

void BM_ConvBackwardReference(benchmark::State& state) {
  ConvCase c;
  const Tensor<float> g = random_tensor({100, 16, 6, 16}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mmsel::reference::conv2d_backward(g, c.x, c.w));
}
BENCHMARK(BM_ConvBackwardReference)->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State& state) {
  ConvCase c;
  const Tensor<float> g = random_tensor({100, 16, 6, 16}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mmsel::conv2d_backward(g, c.x, c.w));
}
BENCHMARK(BM_ConvBackward)->Unit(benchmark::kMillisecond);

// Exhaustive search over C(n_users, n_users / 2) subsets, 64 antennas.
mmsel::ChannelMatrix search_channel(int n_users) {
  mmsel::ChannelConfig cfg;
  cfg.n_tx = 64;
  cfg.geometry = {8, 8, 0.5};
  cfg.n_users = n_users;
  mmsel::Rng rng(9);
  return mmsel::generate_channel_matrix(cfg, rng);
}

void BM_ExhaustiveSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto h = search_channel(n);
  for (auto _ : state) benchmark::DoNotOptimize(mmsel::exhaustive_search_serial(h, n / 2, 0.1));
}
BENCHMARK(BM_ExhaustiveSerial)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_Exhaustive(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto h = search_channel(n);
  for (auto _ : state) benchmark::DoNotOptimize(mmsel::exhaustive_search(h, n / 2, 0.1));
}
BENCHMARK(BM_Exhaustive)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
