// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "gradcheck.hpp"
#include "mmsel/network.hpp"
#include "mmsel/train.hpp"

using namespace mmsel;
using namespace mmsel::testing;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.in_height = 3;
  c.in_width = 5;
  c.conv1_filters = 3;
  c.conv2_filters = 4;
  c.dense_units = 12;
  c.classes = 4;
  return c;
}

// Two users, one selected: a binary task. Label 1 iff the mean of plane 0
// is positive.
Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  Dataset ds;
  ds.header.n_samples = static_cast<std::uint32_t>(n);
  ds.header.n_users = 2;
  ds.header.n_tx = 8;
  ds.header.n_select = 1;
  ds.header.n_train = static_cast<std::uint32_t>(n * 4 / 5);
  ds.header.array_rows = 2;
  ds.header.array_cols = 4;
  ds.header.n_paths = 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  std::uniform_real_distribution<float> offset(-1.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const float shift = offset(rng);
    float sum = 0;
    for (int k = 0; k < 16; ++k) {
      ds.planes.push_back(shift + 0.3f * noise(rng));
      sum += ds.planes.back();
    }
    for (int k = 0; k < 16; ++k) ds.planes.push_back(noise(rng));
    ds.labels.push_back(sum > 0 ? 1u : 0u);
  }
  return ds;
}

}  // namespace

TEST_CASE("multiply count at the reference dimensions") {
  NetworkConfig c;
  c.in_height = 10;
  c.in_width = 144;
  c.classes = 210;
  CHECK(cnn_multiply_count(c) == 5'827'584u);
}

TEST_CASE("parameter shapes and initialization") {
  const NetworkConfig c = tiny_config();
  const auto shapes = param_shapes(c);
  REQUIRE(shapes.size() == kParamCount);
  CHECK(shapes[kConv1Weights] == std::vector<int>{3, 2, 3, 3});
  CHECK(shapes[kConv2Weights] == std::vector<int>{4, 3, 3, 3});
  // 3x5 -> pool 2x3 -> pool 1x2, four channels.
  CHECK(c.flat_size() == 8);
  CHECK(shapes[kDenseWeights] == std::vector<int>{12, 8});
  CHECK(shapes[kOutputWeights] == std::vector<int>{4, 12});

  const auto a = init_network<double>(c, 3);
  const auto b = init_network<double>(c, 3);
  const auto d = init_network<double>(c, 4);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  for (double v : a.params[kDenseBias].values()) CHECK(v == 0.0);

  NetworkConfig big;
  const auto wide = init_network<double>(big, 1);
  double sq = 0;
  for (double v : wide.params[kDenseWeights].values()) sq += v * v;
  const double var = sq / static_cast<double>(wide.params[kDenseWeights].size());
  CHECK(var == doctest::Approx(2.0 / big.flat_size()).epsilon(0.02));
}

TEST_CASE("whole-network gradients match finite differences") {
  const NetworkConfig c = tiny_config();
  std::mt19937_64 g(11);
  const std::uint32_t labels[3] = {0, 3, 1};
  for (int trial = 0; trial < 4; ++trial) {
    NetworkState<double> state = init_network<double>(c, 100 + static_cast<std::uint64_t>(trial));
    const Tensor<double> x = random_tensor({3, 2, 3, 5}, g);
    for (bool with_dropout : {false, true}) {
      // Re-seeding per evaluation keeps the dropout mask fixed.
      auto run = [&](const NetworkState<double>& s) {
        Rng rng(77);
        return forward_backward(s, x, labels, with_dropout ? &rng : nullptr);
      };
      const StepResult<double> base = run(state);
      for (int slot = 0; slot < kParamCount; ++slot) {
        auto f = [&](const Tensor<double>& p) {
          NetworkState<double> s = state;
          s.params[static_cast<std::size_t>(slot)] = p;
          return run(s).loss;
        };
        const auto numeric = numeric_gradient(f, state.params[static_cast<std::size_t>(slot)]);
        INFO("slot " << param_name(slot) << " dropout " << with_dropout);
        CHECK(max_relative_error(base.grads[static_cast<std::size_t>(slot)], numeric) < 1e-6);
      }
    }
  }
}

TEST_CASE("sgd step with zero learning rate leaves parameters unchanged") {
  NetworkState<double> s = init_network<double>(tiny_config(), 5);
  const NetworkState<double> before = s;
  std::mt19937_64 g(5);
  const std::uint32_t labels[2] = {1, 2};
  const auto r = forward_backward(s, random_tensor({2, 2, 3, 5}, g), labels, nullptr);
  sgd_step(s, r.grads, 0.0);
  CHECK(s.params == before.params);
  CHECK(s.step == 1);
}

TEST_CASE("predictions are normalized and row independent") {
  NetworkState<double> s = init_network<double>(tiny_config(), 6);
  std::mt19937_64 g(6);
  Tensor<double> x = random_tensor({4, 2, 3, 5}, g);
  std::copy(x.data(), x.data() + 30, x.data() + 60);  // row 2 duplicates row 0
  const auto preds = predict_batch(s, x);
  for (const auto& p : preds) {
    double total = 0;
    for (double v : p.probabilities) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(preds[0].probabilities == preds[2].probabilities);
  CHECK(preds[0].label.value == preds[2].label.value);

  const auto single = predict(s, std::span<const double>(x.data(), 30));
  CHECK(single.label.value == preds[0].label.value);
  CHECK(single.probabilities[0] == doctest::Approx(preds[0].probabilities[0]).epsilon(1e-12));
}

TEST_CASE("learns a separable toy task") {
  const Dataset ds = toy_dataset(500, 21);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 20;
  cfg.learning_rate = 0.01;
  cfg.seed = 9;
  const auto result = train<float>(ds, network_config_for(ds.header), cfg);
  REQUIRE(result.history.size() == 20);
  CHECK(accuracy(result.state, ds, 0, ds.size()) > 0.95);
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const Dataset ds = toy_dataset(200, 22);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.seed = 13;
  const NetworkConfig net = network_config_for(ds.header);
  const auto a = train<float>(ds, net, cfg);
  const auto b = train<float>(ds, net, cfg);
  CHECK(a.state == b.state);
  CHECK(a.history.back().train_loss == b.history.back().train_loss);

  cfg.epochs = 0;
  const auto none = train<float>(ds, net, cfg);
  CHECK(none.history.empty());
  CHECK(none.state.params == init_network<float>(net, derive_seed(13, 0)).params);
}

TEST_CASE("training rejects datasets that do not fit the network") {
  const Dataset ds = toy_dataset(50, 23);
  NetworkConfig net = network_config_for(ds.header);
  net.classes = 3;
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train<float>(ds, net, cfg), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mmsel_test_network";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tiny.ckpt";
  NetworkState<float> s = init_network<float>(tiny_config(), 8);
  s.step = 42;
  save_checkpoint(s, path);
  const NetworkState<float> back = load_checkpoint<float>(path);
  CHECK(back == s);

  {
    std::ofstream(path, std::ios::binary) << "MMWX";
  }
  CHECK_THROWS_AS(load_checkpoint<float>(path), CheckpointError);
  std::filesystem::remove_all(dir);
}
