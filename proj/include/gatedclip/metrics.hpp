#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace gatedclip::metrics {

struct EvalResult {
  double auroc = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t n_positive = 0;
};

class UndefinedAurocError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mann-Whitney AUROC: fraction of (positive, negative) pairs with the
/// positive scored higher, ties counting one half. O(N log N) via midranks.
/// Labels must be 0 or 1; both classes must be present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Fraction of examples where (score >= threshold) matches label == 1.
double accuracy(std::span<const double> scores, std::span<const std::uint8_t> labels,
                double threshold = 0.5);

EvalResult evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace gatedclip::metrics
