// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <complex>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "mmsel/rng.hpp"

namespace mmsel {

/// Complex N_R x N_T matrix; row n is the downlink channel of user n.
using ChannelMatrix = Eigen::MatrixXcd;

/// Uniform planar array at the transmitter, element spacing in wavelengths.
struct ArrayGeometry {
  int rows = 1;
  int cols = 1;
  double spacing = 0.5;

  int size() const { return rows * cols; }
  void validate() const;
};

struct ChannelConfig {
  int n_tx = 16;
  int n_users = 6;
  int n_paths = 3;
  double path_loss = 1.0;
  ArrayGeometry geometry{4, 4, 0.5};
  std::uint64_t seed = 0;

  void validate() const;
};

/// One propagation path of the geometric channel. Angles of arrival are not
/// stored because users carry a single antenna.
struct PathParams {
  std::complex<double> gain;
  double azimuth = 0.0;    // [0, 2pi)
  double elevation = 0.0;  // [0, pi)
};

/// Unit-norm UPA response; element (m * cols + n) carries the phase
/// 2 pi d (m sin(az) sin(el) + n cos(el)).
Eigen::VectorXcd upa_steering(double azimuth, double elevation,
                              const ArrayGeometry& geometry);

PathParams draw_path(Rng& rng);

/// sqrt(N_T / (eps L)) * sum_l gain_l * a_T(path_l)^H for the given paths.
Eigen::RowVectorXcd user_channel_from_paths(const ChannelConfig& config,
                                            std::span<const PathParams> paths);

Eigen::RowVectorXcd generate_user_channel(const ChannelConfig& config, Rng& rng);

ChannelMatrix generate_channel_matrix(const ChannelConfig& config, Rng& rng);

/// Imperfect CSI: xi * H + sqrt(1 - xi^2) * E with E ~ CN(0, 1) i.i.d.
/// Throws std::invalid_argument for xi outside [0, 1].
ChannelMatrix apply_csi_error(const ChannelMatrix& channel, double accuracy,
                              Rng& rng);

}  // namespace mmsel
