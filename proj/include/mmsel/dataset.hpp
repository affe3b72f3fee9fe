// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmsel/channel.hpp"
#include "mmsel/combinatorics.hpp"

namespace mmsel {

// Binary layout (all little-endian):
//   header  kDatasetHeaderSize bytes, see DatasetHeader field order
//   planes  n_samples * 2 * n_users * n_tx float32, sample-major; within a
//           sample plane 0 holds real parts, plane 1 imaginary parts, each
//           row-major n_users x n_tx
//   labels  n_samples uint32
inline constexpr char kDatasetMagic[4] = {'M', 'M', 'W', 'S'};
inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kDatasetHeaderSize = 96;

struct DatasetHeader {
  std::uint32_t format_version = kDatasetFormatVersion;
  std::uint32_t n_samples = 0;
  std::uint32_t n_users = 0;
  std::uint32_t n_tx = 0;
  std::uint32_t n_select = 0;
  std::uint32_t n_train = 0;  // samples [0, n_train) train, the rest test
  std::uint32_t array_rows = 0;
  std::uint32_t array_cols = 0;
  std::uint32_t n_paths = 0;
  double noise_power = 0.1;
  double path_loss = 1.0;
  double spacing = 0.5;
  std::string rng_algorithm;  // at most 23 bytes on disk
  std::uint64_t base_seed = 0;

  std::size_t plane_size() const { return 2u * n_users * n_tx; }
  std::uint32_t classes() const { return class_count(static_cast<int>(n_users), static_cast<int>(n_select)); }
  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<float> planes;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const float> sample(std::size_t i) const {
    const std::size_t n = header.plane_size();
    return std::span<const float>(planes).subspan(i * n, n);
  }
  ClassLabel label(std::size_t i) const { return ClassLabel{labels[i]}; }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagic : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class VersionMismatch : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class TruncatedPayload : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class ShapeOverflow : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class LabelMismatch : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
class IoError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

/// Two planes (real, imaginary) of shape n_users x n_tx, row-major.
std::vector<double> normalize_sample(const ChannelMatrix& channel);

/// Exact inverse of normalize_sample.
template <typename T>
ChannelMatrix planes_to_channel(std::span<const T> planes, int n_users, int n_tx) {
  if (planes.size() != 2u * static_cast<std::size_t>(n_users) * static_cast<std::size_t>(n_tx)) {
    throw std::invalid_argument("plane buffer size does not match n_users x n_tx");
  }
  const std::size_t plane = static_cast<std::size_t>(n_users) * static_cast<std::size_t>(n_tx);
  ChannelMatrix h(n_users, n_tx);
  for (int i = 0; i < n_users; ++i) {
    for (int j = 0; j < n_tx; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * static_cast<std::size_t>(n_tx) +
                            static_cast<std::size_t>(j);
      h(i, j) = {static_cast<double>(planes[k]), static_cast<double>(planes[plane + k])};
    }
  }
  return h;
}

/// Class of the exhaustive-search winner.
ClassLabel label_sample(const ChannelMatrix& channel, int n_select, double noise_power);

struct DatasetSpec {
  ChannelConfig channel;  // channel.seed is the base seed
  std::uint64_t n_samples = 1000;
  int n_select = 3;
  double noise_power = 0.1;
  double train_fraction = 0.9;
};

/// Channel of sample `index`: a pure function of (spec, index).
ChannelMatrix dataset_channel(const DatasetSpec& spec, std::uint64_t index);

/// Generate and label in memory. Channels are rounded to float32 before
/// labeling so labels are reproducible from the stored planes.
Dataset generate_dataset(const DatasetSpec& spec);

void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// key = value text echo of the header plus the train/test split.
void write_manifest(const Dataset& dataset, const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path);

/// generate_dataset + write_dataset + write_manifest.
Dataset build_dataset(const DatasetSpec& spec, const std::filesystem::path& path);

struct LoadOptions {
  /// Fraction of samples whose label is recomputed by exhaustive search.
  double verify_fraction = 0.01;
};

/// Throws BadMagic, VersionMismatch, TruncatedPayload, LabelMismatch, IoError.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});

/// Recompute labels for every `stride`-th sample; throws LabelMismatch.
void verify_labels(const Dataset& dataset, std::size_t stride);

}  // namespace mmsel
