// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include <cmath>
#include <numbers>

#include <doctest.h>

#include "mmsel/channel.hpp"

using namespace mmsel;
using std::numbers::pi;

namespace {

ChannelConfig desk_config(std::uint64_t seed = 7) {
  ChannelConfig c;
  c.n_tx = 16;
  c.n_users = 6;
  c.n_paths = 3;
  c.geometry = {4, 4, 0.5};
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("upa_steering zero-phase case is a flat vector") {
  const Eigen::VectorXcd a = upa_steering(0.0, pi / 2, {2, 2, 0.5});
  REQUIRE(a.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a(i).real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(a(i).imag()) < 1e-15);
  }
}

TEST_CASE("upa_steering hand-evaluated phase on a 2x1 array") {
  // Row step phase = 2 pi * 0.5 * sin(pi/2) sin(pi/2) = pi.
  const Eigen::VectorXcd a = upa_steering(pi / 2, pi / 2, {2, 1, 0.5});
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(a(0) - std::complex<double>(s, 0.0)) < 1e-12);
  CHECK(std::abs(a(1) - std::complex<double>(-s, 0.0)) < 1e-12);
}

TEST_CASE("upa_steering has unit norm and constant modulus for random angles") {
  Rng rng(11);
  std::uniform_real_distribution<double> az(0.0, 2 * pi), el(0.0, pi);
  const ArrayGeometry g{12, 12, 0.5};
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXcd a = upa_steering(az(rng), el(rng), g);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      CHECK(std::abs(std::abs(a(i)) - 1.0 / 12.0) < 1e-12);
    }
  }
}

TEST_CASE("single deterministic path carries power N_T") {
  ChannelConfig c = desk_config();
  c.n_paths = 1;
  const PathParams p{{1.0, 0.0}, 1.1, 0.4};
  const Eigen::RowVectorXcd h = user_channel_from_paths(c, std::span<const PathParams>(&p, 1));
  CHECK(h.squaredNorm() == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("path loss scales the channel by 1/sqrt(eps)") {
  ChannelConfig a = desk_config();
  ChannelConfig b = a;
  b.path_loss = 4.0;
  Rng ra(3), rb(3);
  const Eigen::RowVectorXcd ha = generate_user_channel(a, ra);
  const Eigen::RowVectorXcd hb = generate_user_channel(b, rb);
  CHECK((hb - 0.5 * ha).norm() < 1e-12 * ha.norm());

  ChannelConfig c9 = a;
  c9.path_loss = 9.0;
  Rng r9(3);
  CHECK((generate_user_channel(c9, r9) - ha / 3.0).norm() < 1e-12 * ha.norm());
}

TEST_CASE("mean channel power equals N_T (Monte Carlo)") {
  const ChannelConfig c = desk_config();
  Rng rng(2024);
  double sum = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) sum += generate_user_channel(c, rng).squaredNorm();
  CHECK(sum / draws == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("channel matrix shape and determinism") {
  ChannelConfig c = desk_config();
  c.n_users = 10;
  c.n_tx = 144;
  c.geometry = {12, 12, 0.5};
  Rng r1(99), r2(99);
  const ChannelMatrix h1 = generate_channel_matrix(c, r1);
  const ChannelMatrix h2 = generate_channel_matrix(c, r2);
  CHECK(h1.rows() == 10);
  CHECK(h1.cols() == 144);
  CHECK(h1 == h2);
  CHECK(h1.allFinite());
}

TEST_CASE("user rows are uncorrelated") {
  ChannelConfig c = desk_config();
  c.n_users = 2;
  c.n_tx = 144;
  c.geometry = {12, 12, 0.5};
  Rng rng(5);
  double corr = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const ChannelMatrix h = generate_channel_matrix(c, rng);
    corr += std::abs(h.row(0).dot(h.row(1))) / (h.row(0).norm() * h.row(1).norm());
  }
  CHECK(corr / trials < 0.1);

  std::complex<double> signed_corr = 0.0;
  Rng rng2(6);
  for (int t = 0; t < trials; ++t) {
    const ChannelMatrix h = generate_channel_matrix(c, rng2);
    signed_corr += h.row(0).dot(h.row(1)) / (h.row(0).norm() * h.row(1).norm());
  }
  CHECK(std::abs(signed_corr) / trials < 0.1);
}

TEST_CASE("invalid configs are rejected") {
  ChannelConfig c = desk_config();
  c.n_tx = 15;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = desk_config();
  c.n_paths = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = desk_config();
  c.path_loss = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ArrayGeometry({0, 4, 0.5}).validate(), std::invalid_argument);
}

TEST_CASE("apply_csi_error limits and variance") {
  const ChannelConfig c = desk_config();
  Rng rng(1);
  const ChannelMatrix h = generate_channel_matrix(c, rng);

  Rng e1(8);
  CHECK(apply_csi_error(h, 1.0, e1) == h);

  // xi = 0: the estimate is the error draw alone, the same for any H.
  Rng e2(8), e3(8);
  const ChannelMatrix zero = ChannelMatrix::Zero(h.rows(), h.cols());
  CHECK(apply_csi_error(h, 0.0, e2) == apply_csi_error(zero, 0.0, e3));

  Rng e4(9);
  const ChannelMatrix big = ChannelMatrix::Zero(100, 100);
  const ChannelMatrix est = apply_csi_error(big, 0.7, e4);
  CHECK(est.squaredNorm() / 1e4 == doctest::Approx(0.51).epsilon(0.05));

  Rng e5(1);
  CHECK_THROWS_AS(apply_csi_error(h, 1.1, e5), std::invalid_argument);
  CHECK_THROWS_AS(apply_csi_error(h, -0.1, e5), std::invalid_argument);
}

TEST_CASE("apply_csi_error preserves expected Frobenius power") {
  const ChannelConfig c = desk_config();
  Rng rng(4);
  const ChannelMatrix h = generate_channel_matrix(c, rng);
  const double xi = 0.9;
  const double expected = xi * xi * h.squaredNorm() + (1 - xi * xi) * h.size();
  double sum = 0.0;
  Rng err(17);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) sum += apply_csi_error(h, xi, err).squaredNorm();
  CHECK(sum / trials == doctest::Approx(expected).epsilon(0.05));
}
