#include "gatedclip/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gatedclip/error.hpp"

namespace gatedclip::optim {

void OptimHyper::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("AdamW betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("AdamW eps must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max_grad_norm must be positive");
}

void ScheduleConfig::validate() const {
  if (steps_per_epoch < 1) throw std::invalid_argument("steps_per_epoch must be >= 1");
  if (warmup_epochs >= total_epochs) {
    throw std::invalid_argument("warmup_epochs must be smaller than total_epochs");
  }
  if (!(peak_lr > 0.0) || !(min_lr >= 0.0) || min_lr > peak_lr) {
    throw std::invalid_argument("learning rates must satisfy 0 <= min_lr <= peak_lr, peak_lr > 0");
  }
}

double lr_at(std::uint64_t step, const ScheduleConfig& sched) {
  const std::uint64_t warmup = sched.warmup_steps();
  const std::uint64_t total = sched.total_steps();
  if (step < warmup) {
    return sched.peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const double t = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return sched.min_lr + 0.5 * (sched.peak_lr - sched.min_lr) * (1.0 + std::cos(std::numbers::pi * t));
}

double global_grad_norm(const ParameterSet<float>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (float g : p.grad) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + p.name);
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  return std::sqrt(sq);
}

double clip_global_norm(ParameterSet<float>& params, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (norm <= max_norm) return 1.0;
  const double factor = max_norm / norm;
  for (auto& p : params)
    for (auto& g : p.grad) g = static_cast<float>(static_cast<double>(g) * factor);
  return factor;
}

AdamWState AdamWState::zeros_like(const ParameterSet<float>& params) {
  AdamWState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.numel(), 0.0f);
    s.v.emplace_back(p.numel(), 0.0f);
  }
  return s;
}

bool AdamWState::aligned_with(const ParameterSet<float>& params) const {
  if (m.size() != params.size() || v.size() != params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m[i].size() != params[i].numel() || v[i].size() != params[i].numel()) return false;
  }
  return true;
}

void adamw_step(ParameterSet<float>& params, AdamWState& state, const OptimHyper& hyper,
                double lr) {
  if (!state.aligned_with(params)) throw ShapeError("adamw_step: optimizer state not aligned");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  const double b1 = hyper.beta1, b2 = hyper.beta2;

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double g = p.grad[i];
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      const double theta = p.values[i];
      const double updated =
          theta - lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + hyper.weight_decay * theta);
      if (!std::isfinite(updated)) {
        throw NumericError("adamw_step: non-finite update in " + p.name + "[" +
                           std::to_string(i) + "]");
      }
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      p.values[i] = static_cast<float>(updated);
    }
  }
}

}  // namespace gatedclip::optim
