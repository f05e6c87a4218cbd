// End-to-end checks, one PASS/FAIL line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "../unit/model_fixture.hpp"
#include "gatedclip/gate_analysis.hpp"
#include "gatedclip/metrics.hpp"
#include "gatedclip/trainer.hpp"

using namespace gatedclip;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void check(int id, const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %d. %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// One seeded set split into train (first 4000) and validation (last 1000).
std::pair<Dataset, Dataset> synthetic_split(SyntheticMode mode) {
  SyntheticConfig s;
  s.n = 5000;
  s.mode = mode;
  s.alpha = 0.5;
  s.noise_sigma = 0.1;
  s.seed = 7;
  auto all = generate_synthetic(s);
  Dataset train = all, val = all;
  train.records.assign(all.records.begin(), all.records.begin() + 4000);
  val.records.assign(all.records.begin() + 4000, all.records.end());
  return {std::move(train), std::move(val)};
}

Outcome param_accounting() {
  const auto n = param_count(ModelKind::gatedclip, ModelConfig{});
  return {n == 353347, "param_count = " + std::to_string(n)};
}

Outcome gradient_correctness() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = testing::make_tiny_problem(seed, 6);
    worst = std::max(worst, testing::check_full_model(p, 0.01).max_rel_error);
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  Matrix<double> logits(6, 2), a(6, 5), b(6, 5);
  for (auto* m : {&logits, &a, &b})
    for (auto& v : m->flat()) v = d(rng);
  std::vector<std::uint8_t> labels{0, 1, 1, 0, 1, 0};

  ParameterSet<double> ce;
  ce.add("logits", {6, 2}, logits.storage());
  ce.at("logits").grad = cross_entropy<double>(logits, labels).grad_logits.storage();
  worst = std::max(worst, grad_check(
                              [&](const ParameterSet<double>& ps) {
                                return cross_entropy<double>(Matrix<double>(6, 2, ps.at("logits").values), labels).loss;
                              },
                              ce));

  ParameterSet<double> con;
  con.add("a", {6, 5}, a.storage());
  con.add("b", {6, 5}, b.storage());
  const auto r = contrastive_alignment<double>(a, b);
  con.at("a").grad = r.grad_h_image.storage();
  con.at("b").grad = r.grad_h_text.storage();
  worst = std::max(worst, grad_check(
                              [](const ParameterSet<double>& ps) {
                                return contrastive_alignment<double>(Matrix<double>(6, 5, ps.at("a").values),
                                                                     Matrix<double>(6, 5, ps.at("b").values))
                                    .loss;
                              },
                              con));
  return {worst < 1e-5, fmt("max relative error %.3g", worst)};
}

Outcome auroc_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 400;
    const int levels = 1 + static_cast<int>(rng() % 25);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % levels);
      y[i] = rng() % 2;
    }
    y[0] = 0;
    y[1] = 1;
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    worst = std::max(worst, std::abs(metrics::auroc(s, y) - wins / pairs));
  }
  return {worst <= 1e-12, fmt("max |rank - pairwise| = %.3g over 200 instances", worst)};
}

Outcome baseline_gap() {
  const auto [train_ds, val_ds] = synthetic_split(SyntheticMode::xor_);
  TrainConfig cfg;
  cfg.seed = 7;
  const auto gated = train(train_ds, val_ds, cfg);
  cfg.model_kind = ModelKind::baseline;
  const auto base = train(train_ds, val_ds, cfg);
  return {gated.best_val_auroc >= 0.85 && base.best_val_auroc <= 0.65,
          fmt("gatedclip %.4f (>= 0.85), baseline %.4f (<= 0.65)", gated.best_val_auroc, base.best_val_auroc)};
}

Outcome gate_directionality() {
  const auto [train_ds, val_ds] = synthetic_split(SyntheticMode::single_modality);
  TrainConfig cfg;
  cfg.seed = 7;
  const auto r = train(train_ds, val_ds, cfg);
  const auto report = gate_report(val_ds, r.params, ModelKind::gatedclip, cfg.model);
  const double img = report.group_means.at("meta:image_signal");
  const double txt = report.group_means.at("meta:text_signal");
  return {img - txt > 0.1, fmt("mean g image_signal %.4f, text_signal %.4f, difference %.4f", img, txt, img - txt)};
}

Outcome init_sanity() {
  SyntheticConfig s;
  s.n = 1000;
  s.seed = 11;
  const auto ds = generate_synthetic(s);
  const auto params = init_model(ModelKind::gatedclip, ModelConfig{}, 0);
  const double ce = evaluate(ds, params, ModelKind::gatedclip, ModelConfig{}).loss.cls;
  return {std::abs(ce - std::log(2.0)) <= 0.15, fmt("mean CE %.4f vs ln 2 = %.4f", ce, std::log(2.0))};
}

Outcome determinism() {
  SyntheticConfig s;
  s.n = 1250;
  s.seed = 13;
  auto all = generate_synthetic(s);
  Dataset train_ds = all, val_ds = all;
  train_ds.records.assign(all.records.begin(), all.records.begin() + 1000);
  val_ds.records.assign(all.records.begin() + 1000, all.records.end());
  const auto dir = std::filesystem::temp_directory_path() / "gatedclip_acceptance";
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.patience = 5;
  cfg.seed = 3;
  cfg.out_dir = dir / "run_a";
  train(train_ds, val_ds, cfg);
  cfg.out_dir = dir / "run_b";
  train(train_ds, val_ds, cfg);

  std::ifstream a(dir / "run_a" / "metrics.jsonl"), b(dir / "run_b" / "metrics.jsonl");
  std::string la, lb;
  double worst = 0;
  std::size_t lines = 0;
  while (true) {
    const bool ga = static_cast<bool>(std::getline(a, la)), gb = static_cast<bool>(std::getline(b, lb));
    if (ga != gb) return {false, "metrics.jsonl line counts differ"};
    if (!ga) break;
    ++lines;
    const auto ja = nlohmann::json::parse(la), jb = nlohmann::json::parse(lb);
    if (ja.size() != jb.size()) return {false, "field sets differ"};
    for (const auto& [key, va] : ja.items()) {
      if (!jb.contains(key)) return {false, "field " + key + " missing"};
      worst = std::max(worst, std::abs(va.get<double>() - jb.at(key).get<double>()));
    }
  }
  return {lines > 0 && worst <= 1e-6, fmt("%g epochs compared, max field difference %.3g", double(lines), worst)};
}

Outcome loss_bounds() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> d;
  double lo = 2, hi = 0, worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 16, k = 2 + rng() % 64;
    const double scale = std::pow(10.0, static_cast<double>(rng() % 7) - 3.0);
    Matrix<float> a(n, k), b(n, k), logits(n, 2);
    for (auto& v : a.flat()) v = static_cast<float>(scale * d(rng));
    for (auto& v : b.flat()) v = static_cast<float>(trial % 5 == 0 ? -scale * d(rng) : scale * d(rng));
    for (auto& v : logits.flat()) v = static_cast<float>(3 * d(rng));
    if (trial % 7 == 0) b = a;
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng() % 2;
    const auto r = total_loss<float>(logits, labels, a, b, 0.01);
    lo = std::min(lo, r.breakdown.contrastive);
    hi = std::max(hi, r.breakdown.contrastive);
    worst = std::max(worst, std::abs(r.breakdown.total - (r.breakdown.cls + 0.01 * r.breakdown.contrastive)));
  }
  return {lo >= 0 && hi <= 2 && worst <= 1e-7,
          fmt("contrastive range [%.4g, %.4g], max decomposition error %.3g", lo, hi, worst)};
}

Outcome schedule() {
  optim::ScheduleConfig s;
  s.total_epochs = 20;
  s.steps_per_epoch = 125;
  const auto w = s.warmup_steps();
  const auto mid = w + (s.total_steps() - w) / 2;
  const double at_boundary = optim::lr_at(w - 1, s);
  const double at_mid = optim::lr_at(mid, s);
  const double jump = std::abs(optim::lr_at(w, s) - at_boundary);
  return {at_boundary == s.peak_lr && at_mid == 0.5 * s.peak_lr && jump <= 1e-12,
          fmt("lr(boundary) %.17g, lr(mid) %.17g, boundary jump %.3g", at_boundary, at_mid, jump)};
}

}  // namespace

int main() {
  check(1, "parameter accounting", param_accounting);
  check(2, "gradient correctness", gradient_correctness);
  check(3, "AUROC oracle equivalence", auroc_oracle);
  check(4, "baseline gap on synthetic XOR", baseline_gap);
  check(5, "gate directionality", gate_directionality);
  check(6, "initialization sanity", init_sanity);
  check(7, "determinism", determinism);
  check(8, "loss bounds", loss_bounds);
  check(9, "schedule conformance", schedule);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
