// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmsel {

void ArrayGeometry::validate() const {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("array geometry needs rows >= 1 and cols >= 1");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("array spacing must be positive");
  }
}

void ChannelConfig::validate() const {
  geometry.validate();
  if (n_tx != geometry.size()) {
    throw std::invalid_argument("n_tx (" + std::to_string(n_tx) +
                                ") must equal array rows x cols (" +
                                std::to_string(geometry.size()) + ")");
  }
  if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (!(path_loss > 0.0) || !std::isfinite(path_loss)) {
    throw std::invalid_argument("path_loss must be positive");
  }
}

Eigen::VectorXcd upa_steering(double azimuth, double elevation,
                              const ArrayGeometry& geometry) {
  geometry.validate();
  const int n = geometry.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double k = 2.0 * std::numbers::pi * geometry.spacing;
  const double u = std::sin(azimuth) * std::sin(elevation);
  const double v = std::cos(elevation);

  Eigen::VectorXcd a(n);
  for (int m = 0; m < geometry.rows; ++m) {
    for (int c = 0; c < geometry.cols; ++c) {
      a(m * geometry.cols + c) = std::polar(scale, k * (m * u + c * v));
    }
  }
  return a;
}

PathParams draw_path(Rng& rng) {
  std::uniform_real_distribution<double> azimuth(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> elevation(0.0, std::numbers::pi);
  PathParams p;
  p.gain = complex_gaussian(rng);
  p.azimuth = azimuth(rng);
  p.elevation = elevation(rng);
  return p;
}

Eigen::RowVectorXcd user_channel_from_paths(const ChannelConfig& config,
                                            std::span<const PathParams> paths) {
  const double scale =
      std::sqrt(config.n_tx / (config.path_loss * static_cast<double>(paths.size())));
  Eigen::RowVectorXcd h = Eigen::RowVectorXcd::Zero(config.n_tx);
  for (const PathParams& p : paths) {
    h += p.gain * upa_steering(p.azimuth, p.elevation, config.geometry).adjoint();
  }
  return scale * h;
}

Eigen::RowVectorXcd generate_user_channel(const ChannelConfig& config, Rng& rng) {
  config.validate();
  std::vector<PathParams> paths(static_cast<std::size_t>(config.n_paths));
  for (PathParams& p : paths) p = draw_path(rng);
  return user_channel_from_paths(config, paths);
}

ChannelMatrix generate_channel_matrix(const ChannelConfig& config, Rng& rng) {
  config.validate();
  ChannelMatrix h(config.n_users, config.n_tx);
  for (int n = 0; n < config.n_users; ++n) {
    h.row(n) = generate_user_channel(config, rng);
  }
  return h;
}

ChannelMatrix apply_csi_error(const ChannelMatrix& channel, double accuracy,
                              Rng& rng) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw std::invalid_argument("CSI accuracy must lie in [0, 1]");
  }
  if (accuracy == 1.0) return channel;
  const double error_scale = std::sqrt(1.0 - accuracy * accuracy);
  ChannelMatrix out(channel.rows(), channel.cols());
  for (Eigen::Index j = 0; j < channel.cols(); ++j) {
    for (Eigen::Index i = 0; i < channel.rows(); ++i) {
      out(i, j) = accuracy * channel(i, j) + error_scale * complex_gaussian(rng);
    }
  }
  return out;
}

}  // namespace mmsel
