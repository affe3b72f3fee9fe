// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "mmsel/dataset.hpp"
#include "mmsel/rate.hpp"

using namespace mmsel;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mmsel_test_dataset";
  fs::create_directories(dir);
  return dir / name;
}

DatasetSpec small_spec(int users, int select, std::uint64_t samples, std::uint64_t seed = 5) {
  DatasetSpec s;
  s.channel.n_users = users;
  s.channel.n_tx = 16;
  s.channel.geometry = {4, 4, 0.5};
  s.channel.seed = seed;
  s.n_samples = samples;
  s.n_select = select;
  s.noise_power = 0.1;
  return s;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("normalize_sample splits real and imaginary planes") {
  ChannelMatrix h = ChannelMatrix::Constant(2, 3, {1.0, 2.0});
  const auto planes = normalize_sample(h);
  REQUIRE(planes.size() == 12);
  for (int i = 0; i < 6; ++i) {
    CHECK(planes[i] == 1.0);
    CHECK(planes[6 + i] == 2.0);
  }

  ChannelMatrix real = ChannelMatrix::Zero(2, 3);
  real(1, 2) = 3.5;
  const auto rp = normalize_sample(real);
  for (int i = 6; i < 12; ++i) CHECK(rp[i] == 0.0);

  Rng rng(3);
  ChannelConfig c;
  const ChannelMatrix r = generate_channel_matrix(c, rng);
  const auto p = normalize_sample(r);
  CHECK(planes_to_channel(std::span<const double>(p), 6, 16) == r);
}

TEST_CASE("label_sample edge cases") {
  Rng rng(1);
  ChannelConfig c;
  c.n_users = 3;
  const ChannelMatrix h = generate_channel_matrix(c, rng);
  CHECK(label_sample(h, 3, 0.1).value == 0);

  // Users 0 and 1 carry far more power on near-orthogonal beams.
  ChannelMatrix d(4, 16);
  const ArrayGeometry g{4, 4, 0.5};
  const double az[4] = {0.3, 1.4, 2.5, 4.0};
  const double el[4] = {0.5, 1.1, 1.9, 2.6};
  for (int u = 0; u < 4; ++u) d.row(u) = 4.0 * upa_steering(az[u], el[u], g).adjoint();
  d.row(0) *= 10.0;
  d.row(1) *= 10.0;
  double best = -1;
  UserSubset arg;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      const double r = selection_rate(d, UserSubset{a, b}, 0.1);
      if (r > best) {
        best = r;
        arg = UserSubset{a, b};
      }
    }
  REQUIRE(arg == UserSubset{0, 1});
  CHECK(label_sample(d, 2, 0.1).value == 0);
  CHECK(label_sample(d, 2, 0.1) == label_sample(d, 2, 0.1));
}

TEST_CASE("build, write and load a small dataset") {
  const fs::path path = temp_path("small.mmws");
  const Dataset built = build_dataset(small_spec(4, 2, 100), path);
  CHECK(fs::exists(manifest_path(path)));
  CHECK(fs::file_size(path) == kDatasetHeaderSize + 100 * (2 * 4 * 16 + 1) * 4);

  const Dataset loaded = load_dataset(path, {.verify_fraction = 1.0});
  CHECK(loaded == built);
  CHECK(loaded.header.n_samples == 100);
  CHECK(loaded.header.n_train == 90);
  CHECK(loaded.header.rng_algorithm == kRngAlgorithm);
  for (std::uint32_t l : loaded.labels) CHECK(l < 6);
}

TEST_CASE("datasets are byte-identical for the same seed") {
  const fs::path a = temp_path("a.mmws"), b = temp_path("b.mmws"), c = temp_path("c.mmws");
  build_dataset(small_spec(4, 2, 64, 9), a);
  build_dataset(small_spec(4, 2, 64, 9), b);
  build_dataset(small_spec(4, 2, 64, 10), c);
  CHECK(read_bytes(a) == read_bytes(b));
  CHECK(read_bytes(a) != read_bytes(c));
}

TEST_CASE("corrupted files raise named errors") {
  const fs::path path = temp_path("corrupt.mmws");
  build_dataset(small_spec(4, 2, 20), path);
  const std::vector<char> good = read_bytes(path);

  std::vector<char> bad = good;
  bad[0] = 'X';
  write_bytes(path, bad);
  CHECK_THROWS_AS(load_dataset(path), BadMagic);

  bad = good;
  bad[4] = 9;
  write_bytes(path, bad);
  CHECK_THROWS_AS(load_dataset(path), VersionMismatch);

  bad.assign(good.begin(), good.end() - 7);
  write_bytes(path, bad);
  CHECK_THROWS_AS(load_dataset(path), TruncatedPayload);

  bad.assign(good.begin(), good.begin() + 40);
  write_bytes(path, bad);
  CHECK_THROWS_AS(load_dataset(path), TruncatedPayload);

  // Flip a stored label to another valid class.
  bad = good;
  bad[good.size() - 4 * 20] ^= 1;
  write_bytes(path, bad);
  CHECK_THROWS_AS(load_dataset(path, {.verify_fraction = 1.0}), LabelMismatch);

  CHECK_THROWS_AS(load_dataset(temp_path("missing.mmws")), IoError);
}

TEST_CASE("oversized sample counts are rejected") {
  DatasetSpec s = small_spec(4, 2, (1ULL << 32));
  CHECK_THROWS_AS(generate_dataset(s), ShapeOverflow);
}

TEST_CASE("labels reach almost every class") {
  const Dataset ds = generate_dataset(small_spec(6, 3, 5000, 77));
  std::set<std::uint32_t> seen(ds.labels.begin(), ds.labels.end());
  CHECK(seen.size() > 18);  // > 90% of C(6,3) = 20
  for (std::size_t i = 0; i < ds.size(); i += 97) {
    const ChannelMatrix h = planes_to_channel(ds.sample(i), 6, 16);
    CHECK(label_sample(h, 3, 0.1) == ds.label(i));
  }
}
