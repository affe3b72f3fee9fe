// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include "mmsel/layers.hpp"
#include "mmsel/tensor.hpp"

// Direct-loop serial kernels. They share no code with the im2col/GEMM path in
// layers.cpp and serve as its test oracle and benchmark baseline.
namespace mmsel::reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const int batch = x.dim(0), in_c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int out_c = w.dim(0), k = w.dim(2), pad = k / 2;
  Tensor<T> y({batch, out_c, h, wd});
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out_c; ++o) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
          T acc = b[static_cast<std::size_t>(o)];
          for (int c = 0; c < in_c; ++c) {
            for (int u = 0; u < k; ++u) {
              for (int v = 0; v < k; ++v) {
                const int si = i + u - pad, sj = j + v - pad;
                if (si < 0 || si >= h || sj < 0 || sj >= wd) continue;
                acc += w.at(o, c, u, v) * x.at(n, c, si, sj);
              }
            }
          }
          y.at(n, o, i, j) = acc;
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                             const Tensor<T>& w) {
  const int batch = x.dim(0), in_c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int out_c = w.dim(0), k = w.dim(2), pad = k / 2;
  ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({out_c})};
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out_c; ++o) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
          const T gy = grad_out.at(n, o, i, j);
          g.bias[static_cast<std::size_t>(o)] += gy;
          for (int c = 0; c < in_c; ++c) {
            for (int u = 0; u < k; ++u) {
              for (int v = 0; v < k; ++v) {
                const int si = i + u - pad, sj = j + v - pad;
                if (si < 0 || si >= h || sj < 0 || sj >= wd) continue;
                g.weights.at(o, c, u, v) += gy * x.at(n, c, si, sj);
                g.input.at(n, c, si, sj) += gy * w.at(o, c, u, v);
              }
            }
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const int batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  Tensor<T> y({batch, out});
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out; ++o) {
      T acc = b[static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i) {
        acc += w[static_cast<std::size_t>(o) * in + i] * x[static_cast<std::size_t>(n) * in + i];
      }
      y[static_cast<std::size_t>(n) * out + o] = acc;
    }
  }
  return y;
}

}  // namespace mmsel::reference
