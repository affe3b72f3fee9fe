// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/combinatorics.hpp"

#include <limits>
#include <stdexcept>

namespace mmsel {

UserSubset::UserSubset(std::vector<int> indices) : indices_(std::move(indices)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0) {
      throw std::invalid_argument("user index must be non-negative");
    }
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw std::invalid_argument("user subset must be strictly increasing: " +
                                  to_string());
    }
  }
}

bool UserSubset::contains(int user) const {
  for (int i : indices_) {
    if (i == user) return true;
  }
  return false;
}

std::string UserSubset::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(indices_[i]);
  }
  return s + "}";
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) is divisible by i at every step.
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::uint32_t class_count(int n_users, int n_select) {
  if (n_select < 1 || n_select > n_users) {
    throw std::invalid_argument("need 1 <= n_select <= n_users");
  }
  const std::uint64_t w = binomial(n_users, n_select);
  if (w > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("too many classes for a 32-bit label");
  }
  return static_cast<std::uint32_t>(w);
}

ClassLabel combo_rank(const UserSubset& subset, int n_users, int n_select) {
  class_count(n_users, n_select);
  if (subset.size() != n_select) {
    throw std::invalid_argument("subset size " + std::to_string(subset.size()) +
                                " != n_select " + std::to_string(n_select));
  }
  if (subset[n_select - 1] >= n_users) {
    throw std::invalid_argument("user index out of range in " + subset.to_string());
  }
  // Count the combinations that precede `subset` position by position.
  std::uint64_t rank = 0;
  int next = 0;
  for (int i = 0; i < n_select; ++i) {
    for (int v = next; v < subset[i]; ++v) {
      rank += binomial(n_users - v - 1, n_select - i - 1);
    }
    next = subset[i] + 1;
  }
  return ClassLabel{static_cast<std::uint32_t>(rank)};
}

UserSubset combo_unrank(ClassLabel label, int n_users, int n_select) {
  const std::uint32_t w = class_count(n_users, n_select);
  if (label.value >= w) {
    throw std::out_of_range("label " + std::to_string(label.value) +
                            " outside [0, " + std::to_string(w) + ")");
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_select));
  std::uint64_t rest = label.value;
  int v = 0;
  for (int i = 0; i < n_select; ++i) {
    for (;; ++v) {
      const std::uint64_t block = binomial(n_users - v - 1, n_select - i - 1);
      if (rest < block) break;
      rest -= block;
    }
    out.push_back(v++);
  }
  return UserSubset(std::move(out));
}

}  // namespace mmsel
