#pragma once

#include <cstdint>
#include <vector>

#include "gatedclip/params.hpp"

namespace gatedclip::optim {

struct OptimHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double max_grad_norm = 1.0;

  void validate() const;
};

struct ScheduleConfig {
  double peak_lr = 1e-4;
  std::uint64_t warmup_epochs = 2;
  std::uint64_t total_epochs = 20;
  std::uint64_t steps_per_epoch = 1;
  double min_lr = 0.0;

  std::uint64_t warmup_steps() const { return warmup_epochs * steps_per_epoch; }
  std::uint64_t total_steps() const { return total_epochs * steps_per_epoch; }
  void validate() const;
};

/// Linear warmup to peak_lr over the first warmup_steps (reaching it on the
/// last warmup step), then half-cosine decay to min_lr over the rest.
double lr_at(std::uint64_t step, const ScheduleConfig& sched);

/// Scales all gradients by max_norm / ‖g‖ when the global L2 norm exceeds
/// max_norm. Returns the factor applied (1 when untouched).
double clip_global_norm(ParameterSet<float>& params, double max_norm);

/// Global L2 norm over every gradient element, accumulated in double.
double global_grad_norm(const ParameterSet<float>& params);

struct AdamWState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t step_count = 0;

  static AdamWState zeros_like(const ParameterSet<float>& params);
  bool aligned_with(const ParameterSet<float>& params) const;
};

/// Decoupled AdamW: θ ← θ − lr·(m̂ / (√v̂ + eps) + weight_decay·θ).
/// Weight decay applies to every tensor, biases included.
void adamw_step(ParameterSet<float>& params, AdamWState& state, const OptimHyper& hyper,
                double lr);

}  // namespace gatedclip::optim
