// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <Eigen/Dense>

#include "mmsel/channel.hpp"
#include "mmsel/combinatorics.hpp"

namespace mmsel {

/// Relative singular-value cutoff of the baseband pseudo-inverse.
inline constexpr double kPinvCutoff = 1e-12;

/// Fully connected hybrid precoder. Columns of f_rf * f_bb have unit norm, so
/// each stream is sent with unit power.
struct PrecoderPair {
  Eigen::MatrixXcd f_rf;  // N_T x N, entries of modulus 1/sqrt(N_T)
  Eigen::MatrixXcd f_bb;  // N x N
  bool rank_deficient = false;
};

struct BasebandPrecoder {
  Eigen::MatrixXcd f_bb;
  bool rank_deficient = false;
};

/// Rows of `channel` for the users in `subset` (the N_r x N_T matrix B).
Eigen::MatrixXcd select_rows(const ChannelMatrix& channel, const UserSubset& subset);

/// Column u matches the conjugate phase of user u's channel row.
Eigen::MatrixXcd analog_precoder(const Eigen::MatrixXcd& selected);

/// Zero-forcing on H_eff = B F_RF through its pseudo-inverse, then per-column
/// scaling so that ||F_RF f_k|| = 1. A stream whose column vanishes after the
/// cutoff stays zero. rank_deficient is set when any singular value of H_eff
/// falls below kPinvCutoff times the largest.
BasebandPrecoder baseband_zf(const Eigen::MatrixXcd& selected,
                             const Eigen::MatrixXcd& f_rf);

PrecoderPair hybrid_precoders(const Eigen::MatrixXcd& selected);

}  // namespace mmsel
