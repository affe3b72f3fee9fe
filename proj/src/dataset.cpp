// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "mmsel/selection.hpp"

namespace mmsel {
namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

constexpr std::size_t kRngIdBytes = 24;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_f64(std::vector<unsigned char>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}
double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

std::vector<unsigned char> encode_header(const DatasetHeader& h) {
  std::vector<unsigned char> out;
  out.reserve(kDatasetHeaderSize);
  out.insert(out.end(), std::begin(kDatasetMagic), std::end(kDatasetMagic));
  put_u32(out, h.format_version);
  put_u32(out, h.n_samples);
  put_u32(out, h.n_users);
  put_u32(out, h.n_tx);
  put_u32(out, h.n_select);
  put_u32(out, h.n_train);
  put_u32(out, h.array_rows);
  put_u32(out, h.array_cols);
  put_u32(out, h.n_paths);
  put_f64(out, h.noise_power);
  put_f64(out, h.path_loss);
  put_f64(out, h.spacing);
  put_u64(out, h.base_seed);
  std::array<unsigned char, kRngIdBytes> id{};
  std::memcpy(id.data(), h.rng_algorithm.data(),
              std::min(h.rng_algorithm.size(), kRngIdBytes - 1));
  out.insert(out.end(), id.begin(), id.end());
  return out;
}

DatasetHeader decode_header(const unsigned char* p) {
  DatasetHeader h;
  h.format_version = get_u32(p + 4);
  h.n_samples = get_u32(p + 8);
  h.n_users = get_u32(p + 12);
  h.n_tx = get_u32(p + 16);
  h.n_select = get_u32(p + 20);
  h.n_train = get_u32(p + 24);
  h.array_rows = get_u32(p + 28);
  h.array_cols = get_u32(p + 32);
  h.n_paths = get_u32(p + 36);
  h.noise_power = get_f64(p + 40);
  h.path_loss = get_f64(p + 48);
  h.spacing = get_f64(p + 56);
  h.base_seed = get_u64(p + 64);
  const char* id = reinterpret_cast<const char*>(p + 72);
  h.rng_algorithm.assign(id, strnlen(id, kRngIdBytes));
  return h;
}

}  // namespace

std::vector<double> normalize_sample(const ChannelMatrix& channel) {
  const std::size_t rows = static_cast<std::size_t>(channel.rows());
  const std::size_t cols = static_cast<std::size_t>(channel.cols());
  std::vector<double> planes(2 * rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto z = channel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      planes[i * cols + j] = z.real();
      planes[rows * cols + i * cols + j] = z.imag();
    }
  }
  return planes;
}

ClassLabel label_sample(const ChannelMatrix& channel, int n_select, double noise_power) {
  const SelectionResult best = exhaustive_search(channel, n_select, noise_power);
  return combo_rank(best.subset, static_cast<int>(channel.rows()), n_select);
}

ChannelMatrix dataset_channel(const DatasetSpec& spec, std::uint64_t index) {
  Rng rng = substream(spec.channel.seed, index);
  return generate_channel_matrix(spec.channel, rng);
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.channel.validate();
  if (spec.n_samples > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeOverflow("n_samples exceeds 2^32 - 1");
  }
  if (!(spec.noise_power > 0.0)) throw std::invalid_argument("noise power must be positive");
  if (!(spec.train_fraction >= 0.0 && spec.train_fraction <= 1.0)) {
    throw std::invalid_argument("train fraction must lie in [0, 1]");
  }
  class_count(spec.channel.n_users, spec.n_select);

  Dataset ds;
  DatasetHeader& h = ds.header;
  h.n_samples = static_cast<std::uint32_t>(spec.n_samples);
  h.n_users = static_cast<std::uint32_t>(spec.channel.n_users);
  h.n_tx = static_cast<std::uint32_t>(spec.channel.n_tx);
  h.n_select = static_cast<std::uint32_t>(spec.n_select);
  h.n_train = static_cast<std::uint32_t>(
      std::llround(spec.train_fraction * static_cast<double>(spec.n_samples)));
  h.array_rows = static_cast<std::uint32_t>(spec.channel.geometry.rows);
  h.array_cols = static_cast<std::uint32_t>(spec.channel.geometry.cols);
  h.n_paths = static_cast<std::uint32_t>(spec.channel.n_paths);
  h.noise_power = spec.noise_power;
  h.path_loss = spec.channel.path_loss;
  h.spacing = spec.channel.geometry.spacing;
  h.rng_algorithm = std::string(kRngAlgorithm);
  h.base_seed = spec.channel.seed;

  const std::size_t plane = h.plane_size();
  const auto n = static_cast<std::int64_t>(spec.n_samples);
  ds.planes.resize(static_cast<std::size_t>(n) * plane);
  ds.labels.resize(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::vector<double> exact =
        normalize_sample(dataset_channel(spec, static_cast<std::uint64_t>(i)));
    float* dst = ds.planes.data() + static_cast<std::size_t>(i) * plane;
    for (std::size_t k = 0; k < plane; ++k) dst[k] = static_cast<float>(exact[k]);
    const ChannelMatrix stored = planes_to_channel(std::span<const float>(dst, plane),
                                                   spec.channel.n_users, spec.channel.n_tx);
    ds.labels[static_cast<std::size_t>(i)] =
        label_sample(stored, spec.n_select, spec.noise_power).value;
  }
  return ds;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  const DatasetHeader& h = dataset.header;
  if (dataset.labels.size() != h.n_samples || dataset.planes.size() != h.n_samples * h.plane_size()) {
    throw std::invalid_argument("dataset buffers do not match header");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  std::vector<unsigned char> bytes = encode_header(h);
  bytes.reserve(bytes.size() + 4 * (dataset.planes.size() + dataset.labels.size()));
  for (float v : dataset.planes) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  for (std::uint32_t l : dataset.labels) put_u32(bytes, l);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  std::filesystem::path p = dataset_path;
  p += ".manifest";
  return p;
}

void write_manifest(const Dataset& dataset, const std::filesystem::path& path) {
  const DatasetHeader& h = dataset.header;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "magic = MMWS\n"
      << "format_version = " << h.format_version << "\n"
      << "n_samples = " << h.n_samples << "\n"
      << "n_users = " << h.n_users << "\n"
      << "n_tx = " << h.n_tx << "\n"
      << "n_select = " << h.n_select << "\n"
      << "classes = " << h.classes() << "\n"
      << "array_rows = " << h.array_rows << "\n"
      << "array_cols = " << h.array_cols << "\n"
      << "n_paths = " << h.n_paths << "\n"
      << "path_loss = " << shortest(h.path_loss) << "\n"
      << "spacing = " << shortest(h.spacing) << "\n"
      << "noise_power = " << shortest(h.noise_power) << "\n"
      << "rng_algorithm = " << h.rng_algorithm << "\n"
      << "base_seed = " << h.base_seed << "\n"
      << "n_train = " << h.n_train << "\n"
      << "n_test = " << (h.n_samples - h.n_train) << "\n"
      << "train_indices = 0.." << h.n_train << "\n"
      << "test_indices = " << h.n_train << ".." << h.n_samples << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset build_dataset(const DatasetSpec& spec, const std::filesystem::path& path) {
  Dataset ds = generate_dataset(spec);
  write_dataset(ds, path);
  write_manifest(ds, manifest_path(path));
  return ds;
}

void verify_labels(const Dataset& dataset, std::size_t stride) {
  if (stride == 0) return;
  const DatasetHeader& h = dataset.header;
  for (std::size_t i = 0; i < dataset.size(); i += stride) {
    const ChannelMatrix ch = planes_to_channel(dataset.sample(i), static_cast<int>(h.n_users),
                                               static_cast<int>(h.n_tx));
    const ClassLabel expect = label_sample(ch, static_cast<int>(h.n_select), h.noise_power);
    if (expect != dataset.label(i)) {
      throw LabelMismatch("sample " + std::to_string(i) + " stores label " +
                          std::to_string(dataset.labels[i]) + " but search gives " +
                          std::to_string(expect.value));
    }
  }
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kDatasetMagic)) {
    throw TruncatedPayload(path.string() + ": file shorter than magic");
  }
  if (!std::equal(std::begin(kDatasetMagic), std::end(kDatasetMagic), bytes.begin())) {
    throw BadMagic(path.string() + ": not an MMWS dataset");
  }
  if (bytes.size() < 8) throw TruncatedPayload(path.string() + ": header truncated");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kDatasetFormatVersion) {
    throw VersionMismatch(path.string() + ": format version " + std::to_string(version) +
                          ", expected " + std::to_string(kDatasetFormatVersion));
  }
  if (bytes.size() < kDatasetHeaderSize) {
    throw TruncatedPayload(path.string() + ": header truncated");
  }

  Dataset ds;
  ds.header = decode_header(bytes.data());
  const DatasetHeader& h = ds.header;
  if (h.n_select < 1 || h.n_select > h.n_users || h.n_train > h.n_samples) {
    throw DatasetError(path.string() + ": inconsistent header");
  }
  const std::uint64_t n_floats = static_cast<std::uint64_t>(h.n_samples) * h.plane_size();
  const std::uint64_t expected = kDatasetHeaderSize + 4 * (n_floats + h.n_samples);
  if (bytes.size() < expected) {
    throw TruncatedPayload(path.string() + ": expected " + std::to_string(expected) +
                           " bytes, found " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw DatasetError(path.string() + ": trailing bytes after payload");
  }

  const unsigned char* p = bytes.data() + kDatasetHeaderSize;
  ds.planes.resize(static_cast<std::size_t>(n_floats));
  for (float& v : ds.planes) {
    v = std::bit_cast<float>(get_u32(p));
    p += 4;
  }
  const std::uint32_t w = h.classes();
  ds.labels.resize(h.n_samples);
  for (std::uint32_t& l : ds.labels) {
    l = get_u32(p);
    p += 4;
    if (l >= w) throw LabelMismatch(path.string() + ": label out of range");
  }

  if (options.verify_fraction > 0.0 && ds.size() > 0) {
    const auto stride = static_cast<std::size_t>(
        std::max(1.0, std::round(1.0 / std::min(1.0, options.verify_fraction))));
    verify_labels(ds, stride);
  }
  return ds;
}

}  // namespace mmsel
