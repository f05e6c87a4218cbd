#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gatedclip/tensor.hpp"

namespace gatedclip {

/// One trainable tensor and its gradient buffer. Matrices have shape
/// {rows, cols}; bias vectors have shape {len}.
template <typename T>
struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> values;
  std::vector<T> grad;

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }
  std::size_t numel() const { return values.size(); }

  MatrixView<const T> view() const { return {values, rows(), cols()}; }
  std::span<const T> span() const { return values; }
};

/// Ordered parameter collection. Iteration order is the insertion order chosen
/// by the model architecture; optimizer state and checkpoints follow it.
template <typename T>
class ParameterSet {
 public:
  void add(std::string name, std::vector<std::size_t> shape, std::vector<T> values) {
    if (find(name) != npos) throw std::invalid_argument("duplicate parameter name: " + name);
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    if (shape.empty() || shape.size() > 2 || n != values.size()) {
      throw ShapeError("parameter " + name + ": shape does not match value count");
    }
    ParamTensor<T> p{std::move(name), std::move(shape), std::move(values), {}};
    p.grad.assign(p.values.size(), T{0});
    tensors_.push_back(std::move(p));
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find(std::string_view name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name == name) return i;
    return npos;
  }
  bool contains(std::string_view name) const { return find(name) != npos; }

  ParamTensor<T>& at(std::string_view name) {
    const auto i = find(name);
    if (i == npos) throw std::out_of_range("no parameter named " + std::string(name));
    return tensors_[i];
  }
  const ParamTensor<T>& at(std::string_view name) const {
    return const_cast<ParameterSet*>(this)->at(name);
  }

  std::size_t size() const noexcept { return tensors_.size(); }
  ParamTensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const ParamTensor<T>& operator[](std::size_t i) const { return tensors_[i]; }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), T{0});
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& t : tensors_) {
      out.add(t.name, t.shape, std::vector<U>(t.values.begin(), t.values.end()));
      auto& dst = out[out.size() - 1];
      dst.grad.assign(t.grad.begin(), t.grad.end());
    }
    return out;
  }

 private:
  std::vector<ParamTensor<T>> tensors_;
};

template <typename T>
void set_grad(ParamTensor<T>& p, std::span<const T> g) {
  if (g.size() != p.grad.size()) throw ShapeError("gradient size mismatch for " + p.name);
  std::copy(g.begin(), g.end(), p.grad.begin());
}

enum class InitKind {
  he,      // feeds a ReLU: std = sqrt(2 / fan_in)
  xavier,  // feeds a sigmoid or linear output: std = sqrt(1 / fan_in)
};

/// One linear layer of an architecture: weight `out x in` plus bias `out`.
struct LayerSpec {
  std::string weight_name;
  std::string bias_name;
  std::size_t out = 0;
  std::size_t in = 0;
  InitKind init = InitKind::xavier;
};

using Architecture = std::vector<LayerSpec>;

std::size_t count_parameters(const Architecture& arch);

/// Gaussian weights with He/Xavier scaling, zero biases. Weights come from
/// one engine per layer keyed on (seed, layer index).
ParameterSet<float> init_params(const Architecture& arch, std::uint64_t seed);

}  // namespace gatedclip
