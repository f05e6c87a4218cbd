#pragma once

// Dense-layer kernels used by the model. Linear forward/backward parallelize
// over independent output rows with OpenMP; every output element is
// accumulated in the same index order regardless of thread count, so results
// are bit-identical for 1..P threads. The naive serial versions live in
// reference_kernels.hpp and are only used by tests and the benchmark.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gatedclip/error.hpp"
#include "gatedclip/rng.hpp"
#include "gatedclip/tensor.hpp"

namespace gatedclip {

enum class Mode { train, eval };

namespace kernels {

// Below this many multiply-adds the OpenMP fork costs more than it saves.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

template <typename T>
struct LinearGrads {
  Matrix<T> grad_x;  // empty when not requested
  Matrix<T> grad_w;
  std::vector<T> grad_b;
};

/// y[n] = W x[n] + b
template <typename T>
Matrix<T> linear_forward(MatrixView<const T> x, MatrixView<const T> w, std::span<const T> b) {
  if (x.cols != w.cols || b.size() != w.rows) {
    throw ShapeError("linear_forward: x is " + std::to_string(x.rows) + "x" +
                     std::to_string(x.cols) + ", W is " + std::to_string(w.rows) + "x" +
                     std::to_string(w.cols) + ", b has " + std::to_string(b.size()));
  }
  const std::size_t n_rows = x.rows, n_out = w.rows, n_in = w.cols;
  Matrix<T> y(n_rows, n_out);
  const auto total = static_cast<std::int64_t>(n_rows);
#pragma omp parallel for schedule(static) if (n_rows * n_out * n_in >= kParallelThreshold)
  for (std::int64_t n = 0; n < total; ++n) {
    const T* xr = x.data.data() + static_cast<std::size_t>(n) * n_in;
    T* yr = &y(static_cast<std::size_t>(n), 0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const T* wr = w.data.data() + o * n_in;
      T acc = T{0};
      for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * xr[i];
      yr[o] = acc + b[o];
    }
  }
  return y;
}

/// grad_x = grad_y W, grad_W = grad_yᵀ x, grad_b = column sums of grad_y.
template <typename T>
LinearGrads<T> linear_backward(MatrixView<const T> grad_y, MatrixView<const T> x,
                               MatrixView<const T> w, bool want_grad_x = true) {
  if (grad_y.rows != x.rows || grad_y.cols != w.rows || x.cols != w.cols) {
    throw ShapeError("linear_backward: inconsistent shapes");
  }
  const std::size_t n_rows = x.rows, n_out = w.rows, n_in = w.cols;
  const bool parallel = n_rows * n_out * n_in >= kParallelThreshold;
  LinearGrads<T> g;

  if (want_grad_x) {
    g.grad_x = Matrix<T>(n_rows, n_in);
    const auto total = static_cast<std::int64_t>(n_rows);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t n = 0; n < total; ++n) {
      T* gx = &g.grad_x(static_cast<std::size_t>(n), 0);
      const T* gy = grad_y.data.data() + static_cast<std::size_t>(n) * n_out;
      for (std::size_t o = 0; o < n_out; ++o) {
        const T s = gy[o];
        if (s == T{0}) continue;
        const T* wr = w.data.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) gx[i] += s * wr[i];
      }
    }
  }

  g.grad_w = Matrix<T>(n_out, n_in);
  const auto total_out = static_cast<std::int64_t>(n_out);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t o = 0; o < total_out; ++o) {
    T* gw = &g.grad_w(static_cast<std::size_t>(o), 0);
    for (std::size_t n = 0; n < n_rows; ++n) {
      const T s = grad_y.data[n * n_out + static_cast<std::size_t>(o)];
      if (s == T{0}) continue;
      const T* xr = x.data.data() + n * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gw[i] += s * xr[i];
    }
  }

  g.grad_b.assign(n_out, T{0});
  for (std::size_t n = 0; n < n_rows; ++n) {
    for (std::size_t o = 0; o < n_out; ++o) g.grad_b[o] += grad_y.data[n * n_out + o];
  }
  return g;
}

template <typename T>
Matrix<T> relu(const Matrix<T>& x) {
  Matrix<T> y(x.rows(), x.cols());
  auto src = x.flat();
  auto dst = y.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
  return y;
}

// Subgradient at exactly 0 is 0.
template <typename T>
Matrix<T> relu_backward(const Matrix<T>& grad_y, const Matrix<T>& x) {
  if (grad_y.rows() != x.rows() || grad_y.cols() != x.cols()) {
    throw ShapeError("relu_backward: shape mismatch");
  }
  Matrix<T> gx(x.rows(), x.cols());
  auto gy = grad_y.flat();
  auto xs = x.flat();
  auto out = gx.flat();
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] > T{0} ? gy[i] : T{0};
  return gx;
}

/// Kept-element mask of one dropout application. `scale` is 1/(1-rate) in
/// train mode and exactly 1 in eval mode.
template <typename T>
struct DropoutMask {
  std::vector<std::uint8_t> keep;
  double rate = 0.0;
  T scale = T{1};
};

template <typename T>
struct DropoutResult {
  Matrix<T> y;
  DropoutMask<T> mask;
};

/// Inverted dropout. Eval mode (or rate 0) is the identity.
template <typename T>
DropoutResult<T> dropout_forward(const Matrix<T>& x, double rate, Mode mode, std::uint64_t key) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  DropoutResult<T> r;
  r.mask.keep.assign(x.size(), 1);
  r.mask.rate = rate;
  if (mode == Mode::eval || rate == 0.0) {
    r.y = x;
    return r;
  }
  r.mask.scale = static_cast<T>(1.0 / (1.0 - rate));
  auto engine = rng::make_engine(key);
  std::bernoulli_distribution keep_dist(1.0 - rate);
  r.y = Matrix<T>(x.rows(), x.cols());
  auto src = x.flat();
  auto dst = r.y.flat();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const bool keep = keep_dist(engine);
    r.mask.keep[i] = keep ? 1 : 0;
    dst[i] = keep ? src[i] * r.mask.scale : T{0};
  }
  return r;
}

template <typename T>
Matrix<T> dropout_backward(const Matrix<T>& grad_y, const DropoutMask<T>& mask) {
  if (grad_y.size() != mask.keep.size()) throw ShapeError("dropout_backward: shape mismatch");
  Matrix<T> gx(grad_y.rows(), grad_y.cols());
  auto gy = grad_y.flat();
  auto out = gx.flat();
  for (std::size_t i = 0; i < gy.size(); ++i) out[i] = mask.keep[i] ? gy[i] * mask.scale : T{0};
  return gx;
}

/// Logistic function, evaluated so that neither branch overflows.
template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) {
    return T{1} / (T{1} + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace kernels
}  // namespace gatedclip
