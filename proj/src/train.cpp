// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/train.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mmsel {
namespace {

class ThreadScope {
 public:
  explicit ThreadScope(int threads) {
#ifdef _OPENMP
    saved_ = omp_get_max_threads();
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
  }
  ~ThreadScope() {
#ifdef _OPENMP
    omp_set_num_threads(saved_);
#endif
  }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  int saved_ = 1;
};

constexpr std::size_t kEvalBatch = 256;

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

NetworkConfig network_config_for(const DatasetHeader& header, NetworkConfig base) {
  base.in_channels = 2;
  base.in_height = static_cast<int>(header.n_users);
  base.in_width = static_cast<int>(header.n_tx);
  base.classes = static_cast<int>(header.classes());
  return base;
}

template <typename T>
Tensor<T> gather_batch(const Dataset& dataset, std::span<const std::size_t> indices) {
  const DatasetHeader& h = dataset.header;
  const std::size_t n = h.plane_size();
  Tensor<T> x({static_cast<int>(indices.size()), 2, static_cast<int>(h.n_users),
               static_cast<int>(h.n_tx)});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::span<const float> src = dataset.sample(indices[b]);
    std::transform(src.begin(), src.end(), x.data() + b * n,
                   [](float v) { return static_cast<T>(v); });
  }
  return x;
}

template <typename T>
std::vector<Prediction> predict_batch(const NetworkState<T>& state, const Tensor<T>& x) {
  const Tensor<T> probs = softmax(forward_logits(state, x));
  const int batch = probs.dim(0), w = probs.dim(1);
  std::vector<Prediction> out(static_cast<std::size_t>(batch));
  for (int n = 0; n < batch; ++n) {
    const T* p = probs.data() + static_cast<std::size_t>(n) * w;
    Prediction& pr = out[static_cast<std::size_t>(n)];
    pr.probabilities.assign(p, p + w);
    pr.label = ClassLabel{static_cast<std::uint32_t>(std::max_element(p, p + w) - p)};
  }
  return out;
}

template <typename T, typename U>
Prediction predict(const NetworkState<T>& state, std::span<const U> planes) {
  const NetworkConfig& c = state.config;
  if (planes.size() != static_cast<std::size_t>(c.in_channels) * c.in_height * c.in_width) {
    throw ShapeError("sample size does not match network input");
  }
  std::vector<T> values(planes.begin(), planes.end());
  Tensor<T> x({1, c.in_channels, c.in_height, c.in_width}, std::move(values));
  return predict_batch(state, x).front();
}

template <typename T>
double accuracy(const NetworkState<T>& state, const Dataset& dataset, std::size_t begin,
                std::size_t end) {
  if (end <= begin) return 0.0;
  std::size_t hits = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = begin; start < end; start += kEvalBatch) {
    const std::size_t stop = std::min(end, start + kEvalBatch);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto preds = predict_batch(state, gather_batch<T>(dataset, idx));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i].label.value == dataset.labels[start + i]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(end - begin);
}

template <typename T>
TrainResult<T> train(const Dataset& dataset, const NetworkConfig& network,
                     const TrainConfig& config,
                     const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  network.validate();
  const DatasetHeader& h = dataset.header;
  if (network.in_channels != 2 || network.in_height != static_cast<int>(h.n_users) ||
      network.in_width != static_cast<int>(h.n_tx)) {
    throw std::invalid_argument("network input does not match dataset shape");
  }
  if (network.classes != static_cast<int>(h.classes())) {
    throw std::invalid_argument("network has " + std::to_string(network.classes) +
                                " classes, dataset has " + std::to_string(h.classes()));
  }

  ThreadScope threads(config.threads);
  TrainResult<T> result;
  result.state = init_network<T>(network, derive_seed(config.seed, 0));
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));

  const std::size_t n_train = std::min<std::size_t>(h.n_train, dataset.size());
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t stop = std::min(n_train, start + batch);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      std::vector<std::uint32_t> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = dataset.labels[idx[i]];
      StepResult<T> step =
          forward_backward(result.state, gather_batch<T>(dataset, idx), labels, &dropout_rng);
      sgd_step(result.state, step.grads, config.learning_rate);
      loss_sum += step.loss * static_cast<double>(idx.size());
      hits += static_cast<std::size_t>(step.correct);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = n_train ? loss_sum / static_cast<double>(n_train) : 0.0;
    m.train_accuracy = n_train ? static_cast<double>(hits) / static_cast<double>(n_train) : 0.0;
    m.test_accuracy = accuracy(result.state, dataset, n_train, dataset.size());
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(9);
  out << "epoch,train_loss,train_acc,test_acc\n";
  for (const EpochMetrics& m : history) {
    out << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ','
        << m.test_accuracy << '\n';
  }
}

#define MMSEL_INSTANTIATE_TRAIN(T)                                                       \
  template Tensor<T> gather_batch(const Dataset&, std::span<const std::size_t>);        \
  template std::vector<Prediction> predict_batch(const NetworkState<T>&, const Tensor<T>&); \
  template Prediction predict(const NetworkState<T>&, std::span<const float>);          \
  template Prediction predict(const NetworkState<T>&, std::span<const double>);         \
  template double accuracy(const NetworkState<T>&, const Dataset&, std::size_t,         \
                           std::size_t);                                                \
  template TrainResult<T> train(const Dataset&, const NetworkConfig&, const TrainConfig&, \
                                const std::function<void(const EpochMetrics&)>&);

MMSEL_INSTANTIATE_TRAIN(float)
MMSEL_INSTANTIATE_TRAIN(double)

#undef MMSEL_INSTANTIATE_TRAIN

}  // namespace mmsel
