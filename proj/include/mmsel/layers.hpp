// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmsel/rng.hpp"
#include "mmsel/tensor.hpp"

// Layer kernels of the classifier. Batched kernels run samples in parallel
// with OpenMP; per-sample partial gradients are summed in batch order, so
// results do not depend on the thread count. Instantiated for float and double.
namespace mmsel {

/// Thrown on inconsistent tensor shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// Same padding, stride 1, odd square kernel. x (B,C,H,W), w (O,C,K,K), b (O).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                             const Tensor<T>& w);

template <typename T>
struct PoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
  std::vector<int> input_shape;
};

/// 2x2 stride-2 max pooling in ceil mode; missing edge taps act as -inf.
/// Ties go to the first tap in row-major window order.
template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const PoolResult<T>& cache);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

/// Gradient passes where the forward input was strictly positive.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x);

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// y = x W^T + b with x (B,In), W (Out,In), b (Out).
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                             const Tensor<T>& w);

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;  // 0 or 1/keep_prob
};

/// Inverted dropout in training; identity when `training` is false.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double keep_prob, bool training,
                                 Rng& rng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask);

template <typename T>
struct LossResult {
  double loss = 0.0;         // mean over the batch
  Tensor<T> grad_logits;     // d(mean loss)/d(logits)
  Tensor<T> probabilities;
  int correct = 0;           // argmax hits
};

/// Stable softmax cross-entropy over logits (B, W).
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    std::span<const std::uint32_t> labels);

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// w <- w - lr * g.
template <typename T>
void sgd_update(Tensor<T>& param, const Tensor<T>& grad, double learning_rate);

}  // namespace mmsel
