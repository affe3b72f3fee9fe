// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mmsel {

/// Strictly increasing list of user indices.
class UserSubset {
 public:
  UserSubset() = default;
  /// Throws std::invalid_argument on unsorted, duplicate or negative indices.
  explicit UserSubset(std::vector<int> indices);
  UserSubset(std::initializer_list<int> indices)
      : UserSubset(std::vector<int>(indices)) {}

  std::span<const int> indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  int operator[](int i) const { return indices_[static_cast<std::size_t>(i)]; }
  bool contains(int user) const;

  std::string to_string() const;

  friend bool operator==(const UserSubset&, const UserSubset&) = default;

 private:
  std::vector<int> indices_;
};

/// Class index of a user subset, in [0, C(N_R, N_r)).
struct ClassLabel {
  std::uint32_t value = 0;
  friend bool operator==(ClassLabel, ClassLabel) = default;
  friend auto operator<=>(ClassLabel, ClassLabel) = default;
};

/// C(n, k); zero when k is outside [0, n]. Exact for every n <= 62.
std::uint64_t binomial(int n, int k);

/// Number of classes W = C(n_users, n_select), checked to fit a label.
std::uint32_t class_count(int n_users, int n_select);

/// Lexicographic rank of `subset` among all n_select-subsets of n_users.
ClassLabel combo_rank(const UserSubset& subset, int n_users, int n_select);

/// Inverse of combo_rank. Throws std::out_of_range for label >= W.
UserSubset combo_unrank(ClassLabel label, int n_users, int n_select);

}  // namespace mmsel
