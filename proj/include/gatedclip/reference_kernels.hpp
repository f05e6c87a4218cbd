#pragma once

// Serial textbook versions of the linear kernels. Not used on the training
// path; tests compare the OpenMP kernels against these and the benchmark
// times both.

#include <cstddef>
#include <span>

#include "gatedclip/kernels.hpp"

namespace gatedclip::reference {

template <typename T>
Matrix<T> linear_forward(MatrixView<const T> x, MatrixView<const T> w, std::span<const T> b) {
  if (x.cols != w.cols || b.size() != w.rows) throw ShapeError("reference::linear_forward");
  Matrix<T> y(x.rows, w.rows);
  for (std::size_t n = 0; n < x.rows; ++n)
    for (std::size_t o = 0; o < w.rows; ++o) {
      T acc = b[o];
      for (std::size_t i = 0; i < w.cols; ++i) acc += w(o, i) * x(n, i);
      y(n, o) = acc;
    }
  return y;
}

template <typename T>
kernels::LinearGrads<T> linear_backward(MatrixView<const T> grad_y, MatrixView<const T> x,
                                        MatrixView<const T> w) {
  if (grad_y.rows != x.rows || grad_y.cols != w.rows || x.cols != w.cols) {
    throw ShapeError("reference::linear_backward");
  }
  kernels::LinearGrads<T> g;
  g.grad_x = Matrix<T>(x.rows, x.cols);
  g.grad_w = Matrix<T>(w.rows, w.cols);
  g.grad_b.assign(w.rows, T{0});
  for (std::size_t n = 0; n < x.rows; ++n)
    for (std::size_t o = 0; o < w.rows; ++o) {
      const T s = grad_y(n, o);
      g.grad_b[o] += s;
      for (std::size_t i = 0; i < x.cols; ++i) {
        g.grad_x(n, i) += s * w(o, i);
        g.grad_w(o, i) += s * x(n, i);
      }
    }
  return g;
}

}  // namespace gatedclip::reference
