#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "gatedclip/error.hpp"
#include "gatedclip/params.hpp"

namespace gatedclip {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the analytic gradients already stored in `params` against central
/// differences (L(θ+eps) − L(θ−eps)) / 2eps, element by element. Relative
/// error uses max(|a|, |n|, 1e-12) as the denominator. Values are restored
/// after each probe.
inline GradCheckResult grad_check_detailed(
    const std::function<double(const ParameterSet<double>&)>& loss_fn,
    ParameterSet<double>& params, double eps = 1e-5) {
  GradCheckResult worst;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + eps;
      const double up = loss_fn(params);
      p.values[i] = saved - eps;
      const double down = loss_fn(params);
      p.values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad_check: non-finite loss while probing " + p.name);
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p.grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > worst.max_rel_error) worst = {rel, p.name, i, analytic, numeric};
    }
  }
  return worst;
}

inline double grad_check(const std::function<double(const ParameterSet<double>&)>& loss_fn,
                         ParameterSet<double>& params, double eps = 1e-5) {
  return grad_check_detailed(loss_fn, params, eps).max_rel_error;
}

}  // namespace gatedclip
