#pragma once

// Baseline (averaged embeddings + linear classifier) and GatedCLIP
// (projection heads, sigmoid gate, convex fusion, MLP classifier) graphs with
// hand-written backward passes. Everything is templated on the scalar type so
// the same code trains in float and is gradient-checked in double.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gatedclip/kernels.hpp"
#include "gatedclip/params.hpp"

namespace gatedclip {

enum class ModelKind { baseline, gatedclip };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

struct ModelConfig {
  std::size_t dim_in = 512;
  std::size_t proj_hidden = 256;
  std::size_t proj_out = 128;
  std::size_t gate_hidden = 64;
  std::size_t cls_hidden = 64;
  std::size_t num_classes = 2;
  double dropout_proj = 0.2;
  double dropout_cls = 0.3;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Layer list in ParameterSet order. GatedCLIP has 16 tensors: image head,
/// text head, gate, classifier (weight then bias for each layer).
Architecture architecture(ModelKind kind, const ModelConfig& config);

std::size_t param_count(ModelKind kind, const ModelConfig& config);

ParameterSet<float> init_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed);

namespace names {
inline constexpr std::string_view kImagePrefix = "img_proj";
inline constexpr std::string_view kTextPrefix = "txt_proj";
}  // namespace names

template <typename T>
struct ProjectionCache {
  Matrix<T> input;
  Matrix<T> z1;  // W1 v + b1
  kernels::DropoutMask<T> drop1;
  Matrix<T> y1;  // dropout(relu(z1))
  Matrix<T> z2;  // W2 y1 + b2
  kernels::DropoutMask<T> drop2;
  Matrix<T> h;  // dropout(relu(z2))
};

template <typename T>
struct GateCache {
  Matrix<T> concat;  // [h_I ; h_T]
  Matrix<T> zc;
  Matrix<T> rc;
  Matrix<T> zg;  // N x 1
  std::vector<T> g;
};

template <typename T>
struct ClassifierCache {
  Matrix<T> input;
  Matrix<T> zh;
  kernels::DropoutMask<T> drop;
  Matrix<T> yh;
  Matrix<T> logits;
};

template <typename T>
struct ForwardCache {
  ModelKind kind = ModelKind::gatedclip;
  // gatedclip
  ProjectionCache<T> image;
  ProjectionCache<T> text;
  GateCache<T> gate;
  Matrix<T> h_fused;
  ClassifierCache<T> classifier;
  // baseline
  Matrix<T> averaged;

  Matrix<T> logits;

  const Matrix<T>& h_image() const { return image.h; }
  const Matrix<T>& h_text() const { return text.h; }
};

namespace detail {

inline std::string pname(std::string_view prefix, std::string_view leaf) {
  return std::string(prefix) + "." + std::string(leaf);
}

template <typename T>
void require_rows(const Matrix<T>& a, const Matrix<T>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(what);
}

}  // namespace detail

// ---------------------------------------------------------------- baseline

template <typename T>
ForwardCache<T> baseline_forward(const Matrix<T>& image, const Matrix<T>& text,
                                 const ParameterSet<T>& params) {
  detail::require_rows(image, text, "baseline_forward: image/text shape mismatch");
  ForwardCache<T> cache;
  cache.kind = ModelKind::baseline;
  cache.averaged = Matrix<T>(image.rows(), image.cols());
  auto a = image.flat();
  auto b = text.flat();
  auto h = cache.averaged.flat();
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = (a[i] + b[i]) / T{2};
  const auto& w = params.at("baseline.Wcls");
  const auto& bias = params.at("baseline.bcls");
  cache.logits = kernels::linear_forward<T>(cache.averaged, w.view(), bias.span());
  return cache;
}

template <typename T>
void baseline_backward(const ForwardCache<T>& cache, const Matrix<T>& grad_logits,
                       ParameterSet<T>& params) {
  auto& w = params.at("baseline.Wcls");
  auto& bias = params.at("baseline.bcls");
  auto g = kernels::linear_backward<T>(grad_logits, cache.averaged, w.view(), false);
  set_grad<T>(w, g.grad_w.flat());
  set_grad<T>(bias, g.grad_b);
}

// ---------------------------------------------------------------- components

/// h = Dropout(ReLU(W2 · Dropout(ReLU(W1 v + b1)) + b2)), both dropouts at
/// config.dropout_proj.
template <typename T>
ProjectionCache<T> project(const Matrix<T>& v, const ParameterSet<T>& params,
                           std::string_view prefix, double rate, Mode mode, std::uint64_t key) {
  using detail::pname;
  const auto& w1 = params.at(pname(prefix, "W1"));
  const auto& b1 = params.at(pname(prefix, "b1"));
  const auto& w2 = params.at(pname(prefix, "W2"));
  const auto& b2 = params.at(pname(prefix, "b2"));
  ProjectionCache<T> c;
  c.input = v;
  c.z1 = kernels::linear_forward<T>(v, w1.view(), b1.span());
  auto d1 = kernels::dropout_forward(kernels::relu(c.z1), rate, mode, rng::subkey(key, 0));
  c.y1 = std::move(d1.y);
  c.drop1 = std::move(d1.mask);
  c.z2 = kernels::linear_forward<T>(c.y1, w2.view(), b2.span());
  auto d2 = kernels::dropout_forward(kernels::relu(c.z2), rate, mode, rng::subkey(key, 1));
  c.h = std::move(d2.y);
  c.drop2 = std::move(d2.mask);
  return c;
}

/// Writes gradients of the head's four tensors. The gradient with respect to
/// the frozen input embedding is not needed and not computed.
template <typename T>
void project_backward(const ProjectionCache<T>& c, const Matrix<T>& grad_h,
                      ParameterSet<T>& params, std::string_view prefix) {
  using detail::pname;
  auto& w1 = params.at(pname(prefix, "W1"));
  auto& b1 = params.at(pname(prefix, "b1"));
  auto& w2 = params.at(pname(prefix, "W2"));
  auto& b2 = params.at(pname(prefix, "b2"));
  auto g_z2 = kernels::relu_backward(kernels::dropout_backward(grad_h, c.drop2), c.z2);
  auto l2 = kernels::linear_backward<T>(g_z2, c.y1, w2.view());
  set_grad<T>(w2, l2.grad_w.flat());
  set_grad<T>(b2, l2.grad_b);
  auto g_z1 = kernels::relu_backward(kernels::dropout_backward(l2.grad_x, c.drop1), c.z1);
  auto l1 = kernels::linear_backward<T>(g_z1, c.input, w1.view(), false);
  set_grad<T>(w1, l1.grad_w.flat());
  set_grad<T>(b1, l1.grad_b);
}

/// g = σ(Wg · ReLU(Wc · [h_I; h_T] + bc) + bg), one value per example.
template <typename T>
GateCache<T> gate(const Matrix<T>& h_image, const Matrix<T>& h_text,
                  const ParameterSet<T>& params) {
  detail::require_rows(h_image, h_text, "gate: h_I/h_T shape mismatch");
  const std::size_t n = h_image.rows(), d = h_image.cols();
  GateCache<T> c;
  c.concat = Matrix<T>(n, 2 * d);
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = c.concat.row(r);
    auto hi = h_image.row(r);
    auto ht = h_text.row(r);
    std::copy(hi.begin(), hi.end(), dst.begin());
    std::copy(ht.begin(), ht.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
  }
  const auto& wc = params.at("gate.Wc");
  const auto& bc = params.at("gate.bc");
  const auto& wg = params.at("gate.Wg");
  const auto& bg = params.at("gate.bg");
  c.zc = kernels::linear_forward<T>(c.concat, wc.view(), bc.span());
  c.rc = kernels::relu(c.zc);
  c.zg = kernels::linear_forward<T>(c.rc, wg.view(), bg.span());
  c.g.resize(n);
  for (std::size_t r = 0; r < n; ++r) c.g[r] = kernels::sigmoid(c.zg(r, 0));
  return c;
}

template <typename T>
struct GateInputGrads {
  Matrix<T> grad_h_image;
  Matrix<T> grad_h_text;
};

template <typename T>
GateInputGrads<T> gate_backward(const GateCache<T>& c, std::span<const T> grad_g,
                                ParameterSet<T>& params) {
  const std::size_t n = c.g.size();
  if (grad_g.size() != n) throw ShapeError("gate_backward: grad_g length mismatch");
  auto& wc = params.at("gate.Wc");
  auto& bc = params.at("gate.bc");
  auto& wg = params.at("gate.Wg");
  auto& bg = params.at("gate.bg");
  Matrix<T> g_zg(n, 1);
  for (std::size_t r = 0; r < n; ++r) g_zg(r, 0) = grad_g[r] * c.g[r] * (T{1} - c.g[r]);
  auto lg = kernels::linear_backward<T>(g_zg, c.rc, wg.view());
  set_grad<T>(wg, lg.grad_w.flat());
  set_grad<T>(bg, lg.grad_b);
  auto g_zc = kernels::relu_backward(lg.grad_x, c.zc);
  auto lc = kernels::linear_backward<T>(g_zc, c.concat, wc.view());
  set_grad<T>(wc, lc.grad_w.flat());
  set_grad<T>(bc, lc.grad_b);

  const std::size_t d = c.concat.cols() / 2;
  GateInputGrads<T> out{Matrix<T>(n, d), Matrix<T>(n, d)};
  for (std::size_t r = 0; r < n; ++r) {
    auto src = lc.grad_x.row(r);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(d),
              out.grad_h_image.row(r).begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(d), src.end(),
              out.grad_h_text.row(r).begin());
  }
  return out;
}

/// h_fused[n] = g[n]·h_I[n] + (1 − g[n])·h_T[n]
template <typename T>
Matrix<T> fuse(const Matrix<T>& h_image, const Matrix<T>& h_text, std::span<const T> g) {
  detail::require_rows(h_image, h_text, "fuse: h_I/h_T shape mismatch");
  if (g.size() != h_image.rows()) throw ShapeError("fuse: gate length mismatch");
  Matrix<T> out(h_image.rows(), h_image.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto hi = h_image.row(r);
    auto ht = h_text.row(r);
    auto dst = out.row(r);
    const T w = g[r];
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = w * hi[k] + (T{1} - w) * ht[k];
  }
  return out;
}

/// logits = Wcls · Dropout(ReLU(Wh h + bh)) + bcls
template <typename T>
ClassifierCache<T> classify(const Matrix<T>& h_fused, const ParameterSet<T>& params, double rate,
                            Mode mode, std::uint64_t key) {
  const auto& wh = params.at("cls.Wh");
  const auto& bh = params.at("cls.bh");
  const auto& wcls = params.at("cls.Wcls");
  const auto& bcls = params.at("cls.bcls");
  ClassifierCache<T> c;
  c.input = h_fused;
  c.zh = kernels::linear_forward<T>(h_fused, wh.view(), bh.span());
  auto d = kernels::dropout_forward(kernels::relu(c.zh), rate, mode, key);
  c.yh = std::move(d.y);
  c.drop = std::move(d.mask);
  c.logits = kernels::linear_forward<T>(c.yh, wcls.view(), bcls.span());
  return c;
}

/// Returns the gradient with respect to h_fused.
template <typename T>
Matrix<T> classify_backward(const ClassifierCache<T>& c, const Matrix<T>& grad_logits,
                            ParameterSet<T>& params) {
  auto& wh = params.at("cls.Wh");
  auto& bh = params.at("cls.bh");
  auto& wcls = params.at("cls.Wcls");
  auto& bcls = params.at("cls.bcls");
  auto lo = kernels::linear_backward<T>(grad_logits, c.yh, wcls.view());
  set_grad<T>(wcls, lo.grad_w.flat());
  set_grad<T>(bcls, lo.grad_b);
  auto g_zh = kernels::relu_backward(kernels::dropout_backward(lo.grad_x, c.drop), c.zh);
  auto lh = kernels::linear_backward<T>(g_zh, c.input, wh.view());
  set_grad<T>(wh, lh.grad_w.flat());
  set_grad<T>(bh, lh.grad_b);
  return std::move(lh.grad_x);
}

// ---------------------------------------------------------------- full graph

namespace dropout_stream {
inline constexpr std::uint64_t kImage = 0;
inline constexpr std::uint64_t kText = 1;
inline constexpr std::uint64_t kClassifier = 2;
}  // namespace dropout_stream

template <typename T>
ForwardCache<T> gatedclip_forward(const Matrix<T>& image, const Matrix<T>& text,
                                  const ParameterSet<T>& params, const ModelConfig& config,
                                  Mode mode, std::uint64_t key) {
  detail::require_rows(image, text, "gatedclip_forward: image/text shape mismatch");
  ForwardCache<T> c;
  c.kind = ModelKind::gatedclip;
  c.image = project(image, params, names::kImagePrefix, config.dropout_proj, mode,
                    rng::subkey(key, dropout_stream::kImage));
  c.text = project(text, params, names::kTextPrefix, config.dropout_proj, mode,
                   rng::subkey(key, dropout_stream::kText));
  c.gate = gate(c.image.h, c.text.h, params);
  c.h_fused = fuse<T>(c.image.h, c.text.h, c.gate.g);
  c.classifier = classify(c.h_fused, params, config.dropout_cls, mode,
                          rng::subkey(key, dropout_stream::kClassifier));
  c.logits = c.classifier.logits;
  return c;
}

/// Reverse pass of gatedclip_forward. `grad_h_image_extra` / `grad_h_text_extra`
/// carry gradients that reach the projections directly (the contrastive term);
/// pass empty matrices when there are none.
template <typename T>
void gatedclip_backward(const ForwardCache<T>& c, const Matrix<T>& grad_logits,
                        const Matrix<T>& grad_h_image_extra, const Matrix<T>& grad_h_text_extra,
                        ParameterSet<T>& params) {
  if (c.kind != ModelKind::gatedclip || c.image.h.empty() || c.gate.g.empty()) {
    throw std::invalid_argument("gatedclip_backward: cache is not from gatedclip_forward");
  }
  const std::size_t n = c.h_fused.rows(), d = c.h_fused.cols();
  auto grad_fused = classify_backward(c.classifier, grad_logits, params);

  Matrix<T> grad_hi(n, d), grad_ht(n, d);
  std::vector<T> grad_g(n, T{0});
  for (std::size_t r = 0; r < n; ++r) {
    const T g = c.gate.g[r];
    auto gf = grad_fused.row(r);
    auto hi = c.image.h.row(r);
    auto ht = c.text.h.row(r);
    T acc = T{0};
    for (std::size_t k = 0; k < d; ++k) {
      grad_hi(r, k) = g * gf[k];
      grad_ht(r, k) = (T{1} - g) * gf[k];
      acc += gf[k] * (hi[k] - ht[k]);
    }
    grad_g[r] = acc;
  }

  auto via_gate = gate_backward<T>(c.gate, grad_g, params);
  auto add_into = [](Matrix<T>& dst, const Matrix<T>& src) {
    if (src.empty()) return;
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw ShapeError("gatedclip_backward: extra projection gradient has wrong shape");
    }
    auto s = src.flat();
    auto o = dst.flat();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += s[i];
  };
  add_into(grad_hi, via_gate.grad_h_image);
  add_into(grad_ht, via_gate.grad_h_text);
  add_into(grad_hi, grad_h_image_extra);
  add_into(grad_ht, grad_h_text_extra);

  project_backward(c.image, grad_hi, params, names::kImagePrefix);
  project_backward(c.text, grad_ht, params, names::kTextPrefix);
}

template <typename T>
ForwardCache<T> model_forward(ModelKind kind, const Matrix<T>& image, const Matrix<T>& text,
                              const ParameterSet<T>& params, const ModelConfig& config, Mode mode,
                              std::uint64_t key) {
  return kind == ModelKind::baseline ? baseline_forward(image, text, params)
                                     : gatedclip_forward(image, text, params, config, mode, key);
}

}  // namespace gatedclip
