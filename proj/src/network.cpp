// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mmsel {

void NetworkConfig::validate() const {
  if (in_channels < 1 || in_height < 1 || in_width < 1) {
    throw std::invalid_argument("network input dimensions must be positive");
  }
  if (conv1_filters < 1 || conv2_filters < 1 || dense_units < 1 || classes < 1) {
    throw std::invalid_argument("network layer widths must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("kernel must be odd");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("keep_prob must lie in (0, 1]");
  }
}

std::uint64_t cnn_multiply_count(const NetworkConfig& c) {
  c.validate();
  using u64 = std::uint64_t;
  const u64 taps = static_cast<u64>(c.kernel) * static_cast<u64>(c.kernel);
  const u64 conv1 = static_cast<u64>(c.conv1_filters) * static_cast<u64>(c.in_height) *
                    static_cast<u64>(c.in_width) * static_cast<u64>(c.in_channels) * taps;
  const u64 conv2 = static_cast<u64>(c.conv2_filters) * static_cast<u64>(c.pool1_height()) *
                    static_cast<u64>(c.pool1_width()) * static_cast<u64>(c.conv1_filters) * taps;
  const u64 dense = static_cast<u64>(c.flat_size()) * static_cast<u64>(c.dense_units);
  const u64 output = static_cast<u64>(c.dense_units) * static_cast<u64>(c.classes);
  return conv1 + conv2 + dense + output;
}

std::string_view param_name(int slot) {
  static constexpr std::array<std::string_view, kParamCount> names = {
      "conv1.weights", "conv1.bias", "conv2.weights",  "conv2.bias",
      "dense.weights", "dense.bias", "output.weights", "output.bias"};
  return names.at(static_cast<std::size_t>(slot));
}

std::vector<std::vector<int>> param_shapes(const NetworkConfig& c) {
  c.validate();
  return {{c.conv1_filters, c.in_channels, c.kernel, c.kernel},
          {c.conv1_filters},
          {c.conv2_filters, c.conv1_filters, c.kernel, c.kernel},
          {c.conv2_filters},
          {c.dense_units, c.flat_size()},
          {c.dense_units},
          {c.classes, c.dense_units},
          {c.classes}};
}

template <typename T>
NetworkState<T> init_network(const NetworkConfig& config, std::uint64_t seed) {
  NetworkState<T> s;
  s.config = config;
  Rng rng(seed);
  for (const std::vector<int>& shape : param_shapes(config)) {
    Tensor<T> t(shape);
    if (shape.size() > 1) {
      std::size_t fan_in = 1;
      for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= static_cast<std::size_t>(shape[i]);
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (T& v : t.values()) v = static_cast<T>(normal(rng));
    }
    s.params.push_back(std::move(t));
  }
  return s;
}

namespace {

template <typename T>
void check_input(const NetworkState<T>& s, const Tensor<T>& x) {
  const NetworkConfig& c = s.config;
  if (x.rank() != 4 || x.dim(1) != c.in_channels || x.dim(2) != c.in_height ||
      x.dim(3) != c.in_width) {
    throw ShapeError("network input " + shape_string(x.shape()) + " does not match (B," +
                     std::to_string(c.in_channels) + "," + std::to_string(c.in_height) + "," +
                     std::to_string(c.in_width) + ")");
  }
  if (s.params.size() != kParamCount) throw ShapeError("network state is missing parameters");
}

template <typename T>
struct Activations {
  Tensor<T> conv1;  // pre-activation
  PoolResult<T> pool1;
  Tensor<T> conv2;  // pre-activation
  PoolResult<T> pool2;
  Tensor<T> flat;
  Tensor<T> dense;  // pre-activation
  DropoutResult<T> drop;
  Tensor<T> logits;
};

template <typename T>
Activations<T> run_forward(const NetworkState<T>& s, const Tensor<T>& x, Rng* dropout_rng) {
  check_input(s, x);
  const auto& p = s.params;
  const int batch = x.dim(0);
  Activations<T> a;
  a.conv1 = conv2d_forward(x, p[kConv1Weights], p[kConv1Bias]);
  a.pool1 = maxpool2x2_forward(relu_forward(a.conv1));
  a.conv2 = conv2d_forward(a.pool1.output, p[kConv2Weights], p[kConv2Bias]);
  a.pool2 = maxpool2x2_forward(relu_forward(a.conv2));
  a.flat = a.pool2.output.reshaped({batch, s.config.flat_size()});
  a.dense = dense_forward(a.flat, p[kDenseWeights], p[kDenseBias]);
  Rng unused(0);
  a.drop = dropout_forward(relu_forward(a.dense), s.config.keep_prob, dropout_rng != nullptr,
                           dropout_rng ? *dropout_rng : unused);
  a.logits = dense_forward(a.drop.output, p[kOutputWeights], p[kOutputBias]);
  return a;
}

}  // namespace

template <typename T>
Tensor<T> forward_logits(const NetworkState<T>& state, const Tensor<T>& x) {
  return run_forward(state, x, nullptr).logits;
}

template <typename T>
StepResult<T> forward_backward(const NetworkState<T>& state, const Tensor<T>& x,
                               std::span<const std::uint32_t> labels, Rng* dropout_rng) {
  Activations<T> a = run_forward(state, x, dropout_rng);
  const auto& p = state.params;
  LossResult<T> loss = softmax_cross_entropy(a.logits, labels);

  StepResult<T> r;
  r.loss = loss.loss;
  r.correct = loss.correct;
  r.grads.resize(kParamCount);

  DenseGrads<T> out = dense_backward(loss.grad_logits, a.drop.output, p[kOutputWeights]);
  r.grads[kOutputWeights] = std::move(out.weights);
  r.grads[kOutputBias] = std::move(out.bias);

  Tensor<T> g = relu_backward(dropout_backward(out.input, a.drop.mask), a.dense);
  DenseGrads<T> dense = dense_backward(g, a.flat, p[kDenseWeights]);
  r.grads[kDenseWeights] = std::move(dense.weights);
  r.grads[kDenseBias] = std::move(dense.bias);

  g = maxpool2x2_backward(dense.input.reshaped(a.pool2.output.shape()), a.pool2);
  g = relu_backward(g, a.conv2);
  ConvGrads<T> c2 = conv2d_backward(g, a.pool1.output, p[kConv2Weights]);
  r.grads[kConv2Weights] = std::move(c2.weights);
  r.grads[kConv2Bias] = std::move(c2.bias);

  g = relu_backward(maxpool2x2_backward(c2.input, a.pool1), a.conv1);
  ConvGrads<T> c1 = conv2d_backward(g, x, p[kConv1Weights]);
  r.grads[kConv1Weights] = std::move(c1.weights);
  r.grads[kConv1Bias] = std::move(c1.bias);
  return r;
}

template <typename T>
void sgd_step(NetworkState<T>& state, const std::vector<Tensor<T>>& grads,
              double learning_rate) {
  if (grads.size() != state.params.size()) throw ShapeError("gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    sgd_update(state.params[i], grads[i], learning_rate);
  }
  ++state.step;
}

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'M', 'W', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}
std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  return lo | static_cast<std::uint64_t>(get_u32(in)) << 32;
}

}  // namespace

template <typename T>
void save_checkpoint(const NetworkState<T>& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  const NetworkConfig& c = state.config;
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  for (int v : {c.in_channels, c.in_height, c.in_width, c.conv1_filters, c.conv2_filters,
                c.kernel, c.dense_units, c.classes}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u64(out, std::bit_cast<std::uint64_t>(c.keep_prob));
  put_u64(out, state.step);
  put_u32(out, static_cast<std::uint32_t>(state.params.size()));
  for (const Tensor<T>& t : state.params) {
    put_u32(out, static_cast<std::uint32_t>(t.size()));
    for (T v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

template <typename T>
NetworkState<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw CheckpointError(path.string() + ": not a checkpoint");
  }
  if (get_u32(in) != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version");
  }
  NetworkState<T> s;
  NetworkConfig& c = s.config;
  for (int* v : {&c.in_channels, &c.in_height, &c.in_width, &c.conv1_filters,
                 &c.conv2_filters, &c.kernel, &c.dense_units, &c.classes}) {
    *v = static_cast<int>(get_u32(in));
  }
  c.keep_prob = std::bit_cast<double>(get_u64(in));
  s.step = get_u64(in);
  const auto shapes = param_shapes(c);
  if (get_u32(in) != shapes.size()) throw CheckpointError("checkpoint slot count mismatch");
  for (const auto& shape : shapes) {
    Tensor<T> t(shape);
    if (get_u32(in) != t.size()) throw CheckpointError("checkpoint tensor size mismatch");
    for (T& v : t.values()) v = static_cast<T>(std::bit_cast<float>(get_u32(in)));
    s.params.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError(path.string() + ": trailing bytes");
  }
  return s;
}

#define MMSEL_INSTANTIATE_NETWORK(T)                                                     \
  template NetworkState<T> init_network(const NetworkConfig&, std::uint64_t);           \
  template StepResult<T> forward_backward(const NetworkState<T>&, const Tensor<T>&,     \
                                          std::span<const std::uint32_t>, Rng*);        \
  template Tensor<T> forward_logits(const NetworkState<T>&, const Tensor<T>&);          \
  template void sgd_step(NetworkState<T>&, const std::vector<Tensor<T>>&, double);      \
  template void save_checkpoint(const NetworkState<T>&, const std::filesystem::path&); \
  template NetworkState<T> load_checkpoint(const std::filesystem::path&);

MMSEL_INSTANTIATE_NETWORK(float)
MMSEL_INSTANTIATE_NETWORK(double)

#undef MMSEL_INSTANTIATE_NETWORK

}  // namespace mmsel
