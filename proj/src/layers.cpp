// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#include "mmsel/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace mmsel {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

struct ConvDims {
  int batch, in_c, h, w, out_c, k, pad;
  std::size_t col_rows() const { return static_cast<std::size_t>(in_c) * k * k; }
  std::size_t pixels() const { return static_cast<std::size_t>(h) * w; }
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& w) {
  require(x.rank() == 4, "conv input must be (B,C,H,W)");
  require(w.rank() == 4, "conv weights must be (O,C,K,K)");
  require(w.dim(1) == x.dim(1), "conv channel count mismatch");
  require(w.dim(2) == w.dim(3) && w.dim(2) % 2 == 1, "conv kernel must be odd and square");
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(2) / 2};
}

// col is (C*K*K) x (H*W), row-major.
template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
  for (int c = 0; c < d.in_c; ++c) {
    for (int u = 0; u < d.k; ++u) {
      for (int v = 0; v < d.k; ++v) {
        T* row = col + ((static_cast<std::size_t>(c) * d.k + u) * d.k + v) * d.pixels();
        for (int i = 0; i < d.h; ++i) {
          const int si = i + u - d.pad;
          for (int j = 0; j < d.w; ++j) {
            const int sj = j + v - d.pad;
            row[static_cast<std::size_t>(i) * d.w + j] =
                (si >= 0 && si < d.h && sj >= 0 && sj < d.w)
                    ? x[(static_cast<std::size_t>(c) * d.h + si) * d.w + sj]
                    : T{0};
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvDims& d, T* x) {
  std::fill(x, x + static_cast<std::size_t>(d.in_c) * d.pixels(), T{0});
  for (int c = 0; c < d.in_c; ++c) {
    for (int u = 0; u < d.k; ++u) {
      for (int v = 0; v < d.k; ++v) {
        const T* row = col + ((static_cast<std::size_t>(c) * d.k + u) * d.k + v) * d.pixels();
        for (int i = 0; i < d.h; ++i) {
          const int si = i + u - d.pad;
          if (si < 0 || si >= d.h) continue;
          for (int j = 0; j < d.w; ++j) {
            const int sj = j + v - d.pad;
            if (sj < 0 || sj >= d.w) continue;
            x[(static_cast<std::size_t>(c) * d.h + si) * d.w + sj] +=
                row[static_cast<std::size_t>(i) * d.w + j];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const ConvDims d = conv_dims(x, w);
  require(b.size() == static_cast<std::size_t>(d.out_c), "conv bias size mismatch");
  Tensor<T> y({d.batch, d.out_c, d.h, d.w});
  const ConstMapMat<T> wm(w.data(), d.out_c, static_cast<Eigen::Index>(d.col_rows()));
  const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(b.data(), d.out_c);
  const std::size_t in_stride = static_cast<std::size_t>(d.in_c) * d.pixels();
  const std::size_t out_stride = static_cast<std::size_t>(d.out_c) * d.pixels();

#pragma omp parallel
  {
    std::vector<T> col(d.col_rows() * d.pixels());
#pragma omp for schedule(static)
    for (int n = 0; n < d.batch; ++n) {
      im2col(x.data() + n * in_stride, d, col.data());
      MapMat<T> out(y.data() + n * out_stride, d.out_c, static_cast<Eigen::Index>(d.pixels()));
      const ConstMapMat<T> cm(col.data(), static_cast<Eigen::Index>(d.col_rows()),
                              static_cast<Eigen::Index>(d.pixels()));
      out.noalias() = wm * cm;
      out.colwise() += bias;
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                             const Tensor<T>& w) {
  const ConvDims d = conv_dims(x, w);
  require(grad_out.shape() == std::vector<int>{d.batch, d.out_c, d.h, d.w},
          "conv grad_out shape mismatch");
  ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({d.out_c})};
  const auto cr = static_cast<Eigen::Index>(d.col_rows());
  const auto px = static_cast<Eigen::Index>(d.pixels());
  const ConstMapMat<T> wm(w.data(), d.out_c, cr);
  const std::size_t in_stride = static_cast<std::size_t>(d.in_c) * d.pixels();
  const std::size_t out_stride = static_cast<std::size_t>(d.out_c) * d.pixels();
  const std::size_t w_size = w.size();
  std::vector<T> partial(static_cast<std::size_t>(d.batch) * w_size);

#pragma omp parallel
  {
    std::vector<T> col(d.col_rows() * d.pixels());
    RowMat<T> gcol(cr, px);
#pragma omp for schedule(static)
    for (int n = 0; n < d.batch; ++n) {
      im2col(x.data() + n * in_stride, d, col.data());
      const ConstMapMat<T> cm(col.data(), cr, px);
      const ConstMapMat<T> gy(grad_out.data() + n * out_stride, d.out_c, px);
      MapMat<T>(partial.data() + n * w_size, d.out_c, cr).noalias() = gy * cm.transpose();
      gcol.noalias() = wm.transpose() * gy;
      col2im(gcol.data(), d, g.input.data() + n * in_stride);
    }
  }

  // Fixed summation order keeps the result independent of thread count.
  for (int n = 0; n < d.batch; ++n) {
    const T* p = partial.data() + n * w_size;
    for (std::size_t i = 0; i < w_size; ++i) g.weights[i] += p[i];
    for (int o = 0; o < d.out_c; ++o) {
      const T* row = grad_out.data() + n * out_stride + static_cast<std::size_t>(o) * d.pixels();
      T s{0};
      for (std::size_t i = 0; i < d.pixels(); ++i) s += row[i];
      g.bias[static_cast<std::size_t>(o)] += s;
    }
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& x) {
  require(x.rank() == 4, "pool input must be (B,C,H,W)");
  const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h > 0 && w > 0, "pool input must have positive spatial size");
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  PoolResult<T> r{Tensor<T>({batch, ch, oh, ow}), {}, x.shape()};
  r.argmax.resize(r.output.size());
  const int planes = batch * ch;

#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const std::size_t in_base = static_cast<std::size_t>(p) * h * w;
    const std::size_t out_base = static_cast<std::size_t>(p) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_at = in_base + static_cast<std::size_t>(2 * i) * w + 2 * j;
        bool seen = false;
        for (int u = 0; u < 2; ++u) {
          const int si = 2 * i + u;
          if (si >= h) continue;
          for (int v = 0; v < 2; ++v) {
            const int sj = 2 * j + v;
            if (sj >= w) continue;
            const std::size_t at = in_base + static_cast<std::size_t>(si) * w + sj;
            if (!seen || x[at] > best) {
              best = x[at];
              best_at = at;
              seen = true;
            }
          }
        }
        const std::size_t o = out_base + static_cast<std::size_t>(i) * ow + j;
        r.output[o] = best;
        r.argmax[o] = static_cast<std::uint32_t>(best_at);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const PoolResult<T>& cache) {
  require(grad_out.shape() == cache.output.shape(), "pool grad_out shape mismatch");
  Tensor<T> gx(cache.input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) gx[cache.argmax[o]] += grad_out[o];
  return gx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.values()) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x) {
  require(grad_out.shape() == x.shape(), "relu shape mismatch");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > T{0})) g[i] = T{0};
  }
  return g;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require(x.rank() == 2 && w.rank() == 2, "dense expects (B,In) input and (Out,In) weights");
  require(x.dim(1) == w.dim(1), "dense input length mismatch");
  require(b.size() == static_cast<std::size_t>(w.dim(0)), "dense bias size mismatch");
  const int batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  Tensor<T> y({batch, out});
  MapMat<T> ym(y.data(), batch, out);
  ym.noalias() = ConstMapMat<T>(x.data(), batch, in) * ConstMapMat<T>(w.data(), out, in).transpose();
  ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.data(), out);
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                             const Tensor<T>& w) {
  require(x.rank() == 2 && w.rank() == 2 && x.dim(1) == w.dim(1), "dense shape mismatch");
  const int batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  require(grad_out.shape() == std::vector<int>{batch, out}, "dense grad_out shape mismatch");
  DenseGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({out})};
  const ConstMapMat<T> gy(grad_out.data(), batch, out);
  MapMat<T>(g.input.data(), batch, in).noalias() = gy * ConstMapMat<T>(w.data(), out, in);
  MapMat<T>(g.weights.data(), out, in).noalias() =
      gy.transpose() * ConstMapMat<T>(x.data(), batch, in);
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(g.bias.data(), out) = gy.colwise().sum();
  return g;
}

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double keep_prob, bool training,
                                 Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("keep_prob must lie in (0, 1]");
  }
  DropoutResult<T> r{x, Tensor<T>(x.shape(), T{1})};
  if (!training || keep_prob == 1.0) return r;
  std::bernoulli_distribution keep(keep_prob);
  const T scale = static_cast<T>(1.0 / keep_prob);
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.mask[i] = keep(rng) ? scale : T{0};
    r.output[i] = x[i] * r.mask[i];
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask) {
  require(grad_out.shape() == mask.shape(), "dropout shape mismatch");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require(logits.rank() == 2, "softmax expects (B,W) logits");
  const int batch = logits.dim(0), w = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (int n = 0; n < batch; ++n) {
    const T* z = logits.data() + static_cast<std::size_t>(n) * w;
    T* q = p.data() + static_cast<std::size_t>(n) * w;
    const T m = *std::max_element(z, z + w);
    double total = 0.0;
    for (int c = 0; c < w; ++c) total += std::exp(static_cast<double>(z[c] - m));
    for (int c = 0; c < w; ++c) {
      q[c] = static_cast<T>(std::exp(static_cast<double>(z[c] - m)) / total);
    }
  }
  return p;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    std::span<const std::uint32_t> labels) {
  require(logits.rank() == 2, "loss expects (B,W) logits");
  const int batch = logits.dim(0), w = logits.dim(1);
  require(labels.size() == static_cast<std::size_t>(batch), "label count mismatch");
  LossResult<T> r;
  r.probabilities = softmax(logits);
  r.grad_logits = r.probabilities;
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    const std::uint32_t y = labels[static_cast<std::size_t>(n)];
    if (y >= static_cast<std::uint32_t>(w)) throw std::out_of_range("label outside class range");
    const T* z = logits.data() + static_cast<std::size_t>(n) * w;
    const T m = *std::max_element(z, z + w);
    double lse = 0.0;
    for (int c = 0; c < w; ++c) lse += std::exp(static_cast<double>(z[c] - m));
    total += std::log(lse) - static_cast<double>(z[y] - m);
    const auto arg = std::max_element(z, z + w) - z;
    if (arg == static_cast<std::ptrdiff_t>(y)) ++r.correct;
    T* g = r.grad_logits.data() + static_cast<std::size_t>(n) * w;
    g[y] -= T{1};
    for (int c = 0; c < w; ++c) g[c] /= static_cast<T>(batch);
  }
  r.loss = batch > 0 ? total / batch : 0.0;
  return r;
}

template <typename T>
void sgd_update(Tensor<T>& param, const Tensor<T>& grad, double learning_rate) {
  require(param.shape() == grad.shape(), "sgd shape mismatch");
  const T lr = static_cast<T>(learning_rate);
  for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

#define MMSEL_INSTANTIATE_LAYERS(T)                                                      \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&,             \
                                        const Tensor<T>&);                              \
  template PoolResult<T> maxpool2x2_forward(const Tensor<T>&);                          \
  template Tensor<T> maxpool2x2_backward(const Tensor<T>&, const PoolResult<T>&);       \
  template Tensor<T> relu_forward(const Tensor<T>&);                                    \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&,             \
                                        const Tensor<T>&);                              \
  template DropoutResult<T> dropout_forward(const Tensor<T>&, double, bool, Rng&);      \
  template Tensor<T> dropout_backward(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> softmax(const Tensor<T>&);                                         \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&,                        \
                                               std::span<const std::uint32_t>);         \
  template void sgd_update(Tensor<T>&, const Tensor<T>&, double);

MMSEL_INSTANTIATE_LAYERS(float)
MMSEL_INSTANTIATE_LAYERS(double)

#undef MMSEL_INSTANTIATE_LAYERS

}  // namespace mmsel
