#include "gatedclip/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "gatedclip/error.hpp"

namespace gatedclip::metrics {

namespace {

void check_lengths(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto l : labels) {
    if (l > 1) throw std::invalid_argument("auroc: labels must be 0 or 1");
    n_pos += l;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedAurocError("auroc is undefined unless both classes are present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks, ranks doubled so midranks stay integral.
  std::uint64_t rank_sum_x2 = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j share the midrank (i + 1 + j) / 2.
    const std::uint64_t midrank_x2 = i + 1 + j;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_x2 += midrank_x2;
    i = j;
  }
  const double u = static_cast<double>(rank_sum_x2) / 2.0 -
                   static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy(std::span<const double> scores, std::span<const std::uint8_t> labels,
                double threshold) {
  check_lengths(scores, labels);
  if (scores.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::uint8_t pred = scores[i] >= threshold ? 1 : 0;
    correct += pred == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

EvalResult evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  EvalResult r;
  r.auroc = auroc(scores, labels);
  r.accuracy = accuracy(scores, labels);
  r.n = scores.size();
  r.n_positive = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  return r;
}

}  // namespace gatedclip::metrics
