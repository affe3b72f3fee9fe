// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/precoding.hpp"

#include <cmath>
#include <stdexcept>

namespace mmsel {

Eigen::MatrixXcd select_rows(const ChannelMatrix& channel, const UserSubset& subset) {
  Eigen::MatrixXcd b(subset.size(), channel.cols());
  for (int k = 0; k < subset.size(); ++k) {
    if (subset[k] >= channel.rows()) {
      throw std::invalid_argument("subset " + subset.to_string() +
                                  " exceeds channel rows");
    }
    b.row(k) = channel.row(subset[k]);
  }
  return b;
}

Eigen::MatrixXcd analog_precoder(const Eigen::MatrixXcd& selected) {
  const Eigen::Index n_tx = selected.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
  Eigen::MatrixXcd f_rf(n_tx, selected.rows());
  for (Eigen::Index u = 0; u < selected.rows(); ++u) {
    for (Eigen::Index i = 0; i < n_tx; ++i) {
      f_rf(i, u) = std::polar(scale, -std::arg(selected(u, i)));
    }
  }
  return f_rf;
}

BasebandPrecoder baseband_zf(const Eigen::MatrixXcd& selected,
                             const Eigen::MatrixXcd& f_rf) {
  const Eigen::MatrixXcd h_eff = selected * f_rf;
  if (h_eff.rows() != h_eff.cols()) {
    throw std::invalid_argument("effective channel must be square");
  }
  const Eigen::Index n = h_eff.rows();

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h_eff, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double s_max = n > 0 ? s(0) : 0.0;
  const double cutoff = kPinvCutoff * s_max;

  BasebandPrecoder out;
  Eigen::VectorXd s_inv = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      s_inv(i) = 1.0 / s(i);
    } else {
      out.rank_deficient = true;
    }
  }
  out.f_bb = svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().adjoint();

  const Eigen::MatrixXcd beams = f_rf * out.f_bb;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double norm = beams.col(k).norm();
    if (norm > 0.0) out.f_bb.col(k) /= norm;
  }
  return out;
}

PrecoderPair hybrid_precoders(const Eigen::MatrixXcd& selected) {
  PrecoderPair p;
  p.f_rf = analog_precoder(selected);
  BasebandPrecoder bb = baseband_zf(selected, p.f_rf);
  p.f_bb = std::move(bb.f_bb);
  p.rank_deficient = bb.rank_deficient;
  return p;
}

}  // namespace mmsel
