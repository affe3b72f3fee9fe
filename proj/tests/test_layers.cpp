// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include <cmath>

#include <doctest.h>

#include "gradcheck.hpp"
#include "mmsel/layers.hpp"
#include "mmsel/reference.hpp"

using namespace mmsel;
using namespace mmsel::testing;

namespace {

// Pushes values away from zero so ReLU finite differences stay smooth.
Tensor<double> away_from_zero(Tensor<double> t) {
  for (double& v : t.values()) v = v >= 0 ? v + 0.1 : v - 0.1;
  return t;
}

// Distinct values with gaps >= 0.01 so the pool argmax is stable under eps.
Tensor<double> distinct_values(std::vector<int> shape, std::mt19937_64& rng) {
  Tensor<double> t(std::move(shape));
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
  std::shuffle(v.begin(), v.end(), rng);
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

}  // namespace

TEST_CASE("conv2d forward hand cases") {
  Tensor<double> x({1, 1, 1, 1}, 3.0), w({1, 1, 1, 1}, 2.0), b({1}, 0.5);
  CHECK(conv2d_forward(x, w, b)[0] == 6.5);

  Tensor<double> ones({1, 1, 3, 3}, 1.0), k({1, 1, 3, 3}, 1.0), zero({1});
  const Tensor<double> y = conv2d_forward(ones, k, zero);
  CHECK(y.at(0, 0, 1, 1) == 9.0);
  CHECK(y.at(0, 0, 0, 0) == 4.0);
  CHECK(y.at(0, 0, 2, 2) == 4.0);
  CHECK(y.at(0, 0, 0, 1) == 6.0);
}

TEST_CASE("conv2d forward matches the direct-loop reference") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor<double> x = random_tensor({3, 2, 5, 7}, rng);
    const Tensor<double> w = random_tensor({4, 2, 3, 3}, rng);
    const Tensor<double> b = random_tensor({4}, rng);
    const Tensor<double> fast = conv2d_forward(x, w, b);
    const Tensor<double> slow = reference::conv2d_forward(x, w, b);
    double diff = 0;
    for (std::size_t i = 0; i < fast.size(); ++i) diff = std::max(diff, std::abs(fast[i] - slow[i]));
    CHECK(diff < 1e-12);
  }
}

TEST_CASE("conv2d backward hand cases") {
  Tensor<double> x({1, 1, 1, 1}, 3.0), w({1, 1, 1, 1}, 2.0);
  const ConvGrads<double> zero = conv2d_backward(Tensor<double>({1, 1, 1, 1}), x, w);
  CHECK(zero.input[0] == 0.0);
  CHECK(zero.weights[0] == 0.0);
  CHECK(zero.bias[0] == 0.0);

  const ConvGrads<double> g = conv2d_backward(Tensor<double>({1, 1, 1, 1}, 0.5), x, w);
  CHECK(g.weights[0] == 1.5);  // grad_out * x
  CHECK(g.input[0] == 1.0);    // grad_out * w
  CHECK(g.bias[0] == 0.5);
}

TEST_CASE("conv2d backward agrees with the reference and finite differences") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor<double> x = random_tensor({2, 2, 4, 5}, rng);
    const Tensor<double> w = random_tensor({3, 2, 3, 3}, rng);
    const Tensor<double> b = random_tensor({3}, rng);
    const Tensor<double> probe = random_tensor({2, 3, 4, 5}, rng);
    const ConvGrads<double> g = conv2d_backward(probe, x, w);
    const ConvGrads<double> r = reference::conv2d_backward(probe, x, w);
    CHECK(max_relative_error(g.weights, r.weights) < 1e-12);
    CHECK(max_relative_error(g.input, r.input) < 1e-12);

    auto by_x = [&](const Tensor<double>& v) { return conv2d_forward(v, w, b); };
    auto by_w = [&](const Tensor<double>& v) { return conv2d_forward(x, v, b); };
    auto by_b = [&](const Tensor<double>& v) { return conv2d_forward(x, w, v); };
    CHECK(max_relative_error(g.input, numeric_vjp(by_x, x, probe)) < 1e-6);
    CHECK(max_relative_error(g.weights, numeric_vjp(by_w, w, probe)) < 1e-6);
    CHECK(max_relative_error(g.bias, numeric_vjp(by_b, b, probe)) < 1e-6);
  }
}

TEST_CASE("conv2d rejects mismatched channels") {
  Tensor<double> x({1, 2, 3, 3}), w({1, 3, 3, 3}), b({1});
  CHECK_THROWS_AS(conv2d_forward(x, w, b), ShapeError);
}

TEST_CASE("maxpool forward and shapes") {
  Tensor<double> x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const PoolResult<double> p = maxpool2x2_forward(x);
  CHECK(p.output.size() == 1);
  CHECK(p.output[0] == 4.0);

  const PoolResult<double> odd = maxpool2x2_forward(Tensor<double>({1, 1, 5, 5}, -3.0));
  CHECK(odd.output.shape() == std::vector<int>{1, 1, 3, 3});
  CHECK(odd.output.at(0, 0, 2, 2) == -3.0);  // edge window holds only one tap

  // Ties route to the first tap.
  Tensor<double> tie({1, 1, 2, 2}, 1.0);
  const PoolResult<double> t = maxpool2x2_forward(tie);
  const Tensor<double> g = maxpool2x2_backward(Tensor<double>({1, 1, 1, 1}, 1.0), t);
  CHECK(g[0] == 1.0);
  CHECK(g[1] + g[2] + g[3] == 0.0);
}

TEST_CASE("maxpool backward matches finite differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor<double> x = distinct_values({2, 3, 5, 6}, rng);
    const PoolResult<double> p = maxpool2x2_forward(x);
    const Tensor<double> probe = random_tensor(p.output.shape(), rng);
    const Tensor<double> g = maxpool2x2_backward(probe, p);
    auto f = [&](const Tensor<double>& v) { return maxpool2x2_forward(v).output; };
    CHECK(max_relative_error(g, numeric_vjp(f, x, probe)) < 1e-6);
  }
}

TEST_CASE("relu forward, backward and subgradient at zero") {
  Tensor<double> x({3}, std::vector<double>{-1, 0, 2});
  CHECK(relu_forward(x).storage() == std::vector<double>{0, 0, 2});
  Tensor<double> pos({3}, std::vector<double>{1, 2, 3});
  CHECK(relu_forward(pos) == pos);
  const Tensor<double> g = relu_backward(Tensor<double>({3}, 1.0), x);
  CHECK(g.storage() == std::vector<double>{0, 0, 1});

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor<double> v = away_from_zero(random_tensor({4, 6}, rng));
    const Tensor<double> probe = random_tensor({4, 6}, rng);
    auto f = [&](const Tensor<double>& t) { return relu_forward(t); };
    CHECK(max_relative_error(relu_backward(probe, v), numeric_vjp(f, v, probe)) < 1e-6);
  }
}

TEST_CASE("dense forward hand cases and reference") {
  Tensor<double> x({1, 3}, std::vector<double>{1, 2, 3});
  Tensor<double> eye({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(dense_forward(x, eye, Tensor<double>({3})).storage() == x.storage());
  Tensor<double> b({3}, std::vector<double>{4, 5, 6});
  CHECK(dense_forward(x, Tensor<double>({3, 3}), b).storage() == b.storage());

  std::mt19937_64 rng(5);
  const Tensor<double> xs = random_tensor({5, 7}, rng);
  const Tensor<double> w = random_tensor({4, 7}, rng);
  const Tensor<double> bs = random_tensor({4}, rng);
  CHECK(max_relative_error(dense_forward(xs, w, bs), reference::dense_forward(xs, w, bs)) < 1e-12);
}

TEST_CASE("dense backward matches finite differences") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor<double> x = random_tensor({3, 6}, rng);
    const Tensor<double> w = random_tensor({4, 6}, rng);
    const Tensor<double> b = random_tensor({4}, rng);
    const Tensor<double> probe = random_tensor({3, 4}, rng);
    const DenseGrads<double> g = dense_backward(probe, x, w);
    auto by_x = [&](const Tensor<double>& v) { return dense_forward(v, w, b); };
    auto by_w = [&](const Tensor<double>& v) { return dense_forward(x, v, b); };
    auto by_b = [&](const Tensor<double>& v) { return dense_forward(x, w, v); };
    CHECK(max_relative_error(g.input, numeric_vjp(by_x, x, probe)) < 1e-6);
    CHECK(max_relative_error(g.weights, numeric_vjp(by_w, w, probe)) < 1e-6);
    CHECK(max_relative_error(g.bias, numeric_vjp(by_b, b, probe)) < 1e-6);
  }
}

TEST_CASE("dropout modes and statistics") {
  Rng rng(7);
  std::mt19937_64 g(7);
  const Tensor<double> x = random_tensor({100}, g);
  CHECK(dropout_forward(x, 1.0, true, rng).output == x);
  CHECK(dropout_forward(x, 0.3, false, rng).output == x);
  CHECK_THROWS_AS(dropout_forward(x, 0.0, true, rng), std::invalid_argument);

  const Tensor<double> ones({100000}, 1.0);
  const DropoutResult<double> d = dropout_forward(ones, 0.5, true, rng);
  double kept = 0, mean = 0;
  for (std::size_t i = 0; i < d.output.size(); ++i) {
    kept += d.mask[i] != 0.0;
    mean += d.output[i];
  }
  CHECK(kept / 1e5 == doctest::Approx(0.5).epsilon(0.01));
  CHECK(mean / 1e5 == doctest::Approx(1.0).epsilon(0.02));

  const Tensor<double> probe = random_tensor({100000}, g);
  const Tensor<double> back = dropout_backward(probe, d.mask);
  for (std::size_t i = 0; i < 100; ++i) CHECK(back[i] == probe[i] * d.mask[i]);
}

TEST_CASE("softmax cross-entropy") {
  const int w = 20;
  Tensor<double> uniform({1, w});
  const std::uint32_t label[1] = {3};
  const LossResult<double> u = softmax_cross_entropy(uniform, label);
  CHECK(u.loss == doctest::Approx(std::log(20.0)).epsilon(1e-14));

  Tensor<double> sharp({1, w});
  sharp[3] = 40.0;
  CHECK(softmax_cross_entropy(sharp, label).loss < 1e-6);

  const std::uint32_t bad[1] = {20};
  CHECK_THROWS_AS(softmax_cross_entropy(uniform, bad), std::out_of_range);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor<double> z = random_tensor({4, 6}, rng, 3.0);
    const std::uint32_t labels[4] = {0, 5, 2, 2};
    const LossResult<double> r = softmax_cross_entropy(z, labels);
    for (int n = 0; n < 4; ++n) {
      double gs = 0, ps = 0;
      for (int c = 0; c < 6; ++c) {
        gs += r.grad_logits[static_cast<std::size_t>(n * 6 + c)];
        ps += r.probabilities[static_cast<std::size_t>(n * 6 + c)];
      }
      CHECK(std::abs(gs) < 1e-12);
      CHECK(ps == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto f = [&](const Tensor<double>& v) { return softmax_cross_entropy(v, labels).loss; };
    CHECK(max_relative_error(r.grad_logits, numeric_gradient(f, z)) < 1e-6);
  }
}

TEST_CASE("sgd update") {
  Tensor<double> w({1}, 1.0);
  sgd_update(w, Tensor<double>({1}, 0.5), 0.1);
  CHECK(w[0] == doctest::Approx(0.95));
  Tensor<double> v({3}, 2.0);
  sgd_update(v, Tensor<double>({3}), 0.1);
  CHECK(v == Tensor<double>({3}, 2.0));

  // Two steps on 0.5 w^2 from w = 1: gradient w, so 1 -> 0.9 -> 0.81.
  Tensor<double> q({1}, 1.0);
  for (int i = 0; i < 2; ++i) sgd_update(q, q, 0.1);
  CHECK(q[0] == doctest::Approx(0.81).epsilon(1e-15));
}

TEST_CASE("float kernels track double kernels") {
  std::mt19937_64 rng(9);
  const Tensor<double> x = random_tensor({2, 2, 6, 16}, rng);
  const Tensor<double> w = random_tensor({16, 2, 3, 3}, rng);
  const Tensor<double> b = random_tensor({16}, rng);
  auto to_float = [](const Tensor<double>& t) {
    return Tensor<float>(t.shape(), std::vector<float>(t.values().begin(), t.values().end()));
  };
  const Tensor<float> yf = conv2d_forward(to_float(x), to_float(w), to_float(b));
  const Tensor<double> yd = conv2d_forward(x, w, b);
  for (std::size_t i = 0; i < yd.size(); ++i) CHECK(std::abs(yf[i] - yd[i]) < 1e-4);
}
