#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "gatedclip/tensor.hpp"

namespace gatedclip {

inline constexpr std::uint8_t kUnlabeled = 255;

struct LossBreakdown {
  double total = 0.0;
  double cls = 0.0;
  double contrastive = 0.0;
  double lambda = 0.0;
};

template <typename T>
struct CrossEntropyResult {
  T loss{};
  Matrix<T> grad_logits;
};

/// Mean softmax cross-entropy over the batch. grad = (softmax − onehot) / N.
template <typename T>
CrossEntropyResult<T> cross_entropy(const Matrix<T>& logits, std::span<const std::uint8_t> labels) {
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) throw ShapeError("cross_entropy: label count does not match logits");
  if (n == 0) throw std::invalid_argument("cross_entropy: empty batch");
  CrossEntropyResult<T> r{T{0}, Matrix<T>(n, k)};
  const T inv_n = T{1} / static_cast<T>(n);
  T total = T{0};
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == kUnlabeled) {
      throw std::invalid_argument("cross_entropy: unlabeled example at row " + std::to_string(i));
    }
    if (labels[i] >= k) throw std::invalid_argument("cross_entropy: label out of range");
    auto row = logits.row(i);
    const T mx = *std::max_element(row.begin(), row.end());
    T sum = T{0};
    for (auto v : row) sum += std::exp(v - mx);
    const T log_z = mx + std::log(sum);
    total += log_z - row[labels[i]];
    for (std::size_t c = 0; c < k; ++c) {
      const T p = std::exp(row[c] - log_z);
      r.grad_logits(i, c) = (p - (c == labels[i] ? T{1} : T{0})) * inv_n;
    }
  }
  r.loss = total * inv_n;
  return r;
}

/// Row-wise softmax probability of `cls`.
template <typename T>
std::vector<double> class_probability(const Matrix<T>& logits, std::size_t cls = 1) {
  std::vector<double> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto v : row) sum += std::exp(static_cast<double>(v) - mx);
    out[i] = std::exp(static_cast<double>(row[cls]) - mx) / sum;
  }
  return out;
}

inline constexpr double kDegenerateNorm = 1e-8;

class DegenerateVectorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename T>
struct ContrastiveResult {
  T loss{};
  Matrix<T> grad_h_image;
  Matrix<T> grad_h_text;
};

/// loss = mean over rows of (1 − cos(h_I, h_T)).
template <typename T>
ContrastiveResult<T> contrastive_alignment(const Matrix<T>& h_image, const Matrix<T>& h_text) {
  if (h_image.rows() != h_text.rows() || h_image.cols() != h_text.cols()) {
    throw ShapeError("contrastive_alignment: shape mismatch");
  }
  const std::size_t n = h_image.rows(), d = h_image.cols();
  if (n == 0) throw std::invalid_argument("contrastive_alignment: empty batch");
  ContrastiveResult<T> r{T{0}, Matrix<T>(n, d), Matrix<T>(n, d)};
  const T inv_n = T{1} / static_cast<T>(n);
  T total = T{0};
  for (std::size_t i = 0; i < n; ++i) {
    auto a = h_image.row(i);
    auto b = h_text.row(i);
    T aa = T{0}, bb = T{0}, ab = T{0};
    for (std::size_t k = 0; k < d; ++k) {
      aa += a[k] * a[k];
      bb += b[k] * b[k];
      ab += a[k] * b[k];
    }
    const T na = std::sqrt(aa), nb = std::sqrt(bb);
    if (na < kDegenerateNorm || nb < kDegenerateNorm) {
      throw DegenerateVectorError("contrastive_alignment: row " + std::to_string(i) +
                                  " has a (near-)zero projection; cosine undefined");
    }
    const T denom = std::max(na * nb, static_cast<T>(1e-12));
    const T cos = std::clamp(ab / denom, T{-1}, T{1});
    total += T{1} - cos;
    // d(1 − cos)/da = −(b / (|a||b|) − cos · a / |a|²)
    const T inv_ab = T{1} / denom;
    const T ca = cos / std::max(aa, static_cast<T>(1e-24));
    const T cb = cos / std::max(bb, static_cast<T>(1e-24));
    for (std::size_t k = 0; k < d; ++k) {
      r.grad_h_image(i, k) = -(b[k] * inv_ab - ca * a[k]) * inv_n;
      r.grad_h_text(i, k) = -(a[k] * inv_ab - cb * b[k]) * inv_n;
    }
  }
  r.loss = total * inv_n;
  return r;
}

template <typename T>
struct TotalLossResult {
  LossBreakdown breakdown;
  Matrix<T> grad_logits;
  Matrix<T> grad_h_image;
  Matrix<T> grad_h_text;
};

/// cls + lambda · contrastive. Projection gradients are the lambda-scaled
/// contrastive gradients; logits gradients come from the classification term.
template <typename T>
TotalLossResult<T> total_loss(const Matrix<T>& logits, std::span<const std::uint8_t> labels,
                              const Matrix<T>& h_image, const Matrix<T>& h_text, double lambda) {
  auto ce = cross_entropy(logits, labels);
  auto con = contrastive_alignment(h_image, h_text);
  TotalLossResult<T> r;
  r.breakdown.cls = static_cast<double>(ce.loss);
  r.breakdown.contrastive = static_cast<double>(con.loss);
  r.breakdown.lambda = lambda;
  r.breakdown.total = r.breakdown.cls + lambda * r.breakdown.contrastive;
  r.grad_logits = std::move(ce.grad_logits);
  r.grad_h_image = std::move(con.grad_h_image);
  r.grad_h_text = std::move(con.grad_h_text);
  const T scale = static_cast<T>(lambda);
  for (auto& v : r.grad_h_image.flat()) v *= scale;
  for (auto& v : r.grad_h_text.flat()) v *= scale;
  return r;
}

}  // namespace gatedclip
