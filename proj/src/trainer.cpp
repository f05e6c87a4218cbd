#include "gatedclip/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "gatedclip/checkpoint.hpp"
#include "gatedclip/error.hpp"
#include "gatedclip/rng.hpp"

namespace gatedclip {

void TrainConfig::validate() const {
  model.validate();
  hyper.validate();
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (eval_batch_size < 1) throw std::invalid_argument("eval_batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1 (nothing to train)");
  if (patience > max_epochs) throw std::invalid_argument("patience must not exceed max_epochs");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw std::invalid_argument("flip_prob must be in [0, 1]");
  if (schedule.warmup_epochs >= max_epochs) {
    throw std::invalid_argument("warmup_epochs must be smaller than max_epochs");
  }
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  static const std::set<std::string> known = {
      "model_kind", "dim_in", "proj_hidden", "proj_out", "gate_hidden", "cls_hidden",
      "num_classes", "dropout_proj", "dropout_cls", "beta1", "beta2", "eps", "weight_decay",
      "max_grad_norm", "peak_lr", "warmup_epochs", "min_lr", "batch_size", "max_epochs",
      "patience", "lambda", "flip_prob", "seed", "eval_batch_size", "out_dir"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown train config key '" + key + "'");
  }
  auto take = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  if (j.contains("model_kind")) c.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
  take("dim_in", c.model.dim_in);
  take("proj_hidden", c.model.proj_hidden);
  take("proj_out", c.model.proj_out);
  take("gate_hidden", c.model.gate_hidden);
  take("cls_hidden", c.model.cls_hidden);
  take("num_classes", c.model.num_classes);
  take("dropout_proj", c.model.dropout_proj);
  take("dropout_cls", c.model.dropout_cls);
  take("beta1", c.hyper.beta1);
  take("beta2", c.hyper.beta2);
  take("eps", c.hyper.eps);
  take("weight_decay", c.hyper.weight_decay);
  take("max_grad_norm", c.hyper.max_grad_norm);
  take("peak_lr", c.schedule.peak_lr);
  take("warmup_epochs", c.schedule.warmup_epochs);
  take("min_lr", c.schedule.min_lr);
  take("batch_size", c.batch_size);
  take("max_epochs", c.max_epochs);
  take("patience", c.patience);
  take("lambda", c.lambda);
  take("flip_prob", c.flip_prob);
  take("seed", c.seed);
  take("eval_batch_size", c.eval_batch_size);
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j = model_config_to_json(c.model);
  j["model_kind"] = to_string(c.model_kind);
  j["beta1"] = c.hyper.beta1;
  j["beta2"] = c.hyper.beta2;
  j["eps"] = c.hyper.eps;
  j["weight_decay"] = c.hyper.weight_decay;
  j["max_grad_norm"] = c.hyper.max_grad_norm;
  j["peak_lr"] = c.schedule.peak_lr;
  j["warmup_epochs"] = c.schedule.warmup_epochs;
  j["min_lr"] = c.schedule.min_lr;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["lambda"] = c.lambda;
  j["flip_prob"] = c.flip_prob;
  j["seed"] = c.seed;
  j["eval_batch_size"] = c.eval_batch_size;
  j["out_dir"] = c.out_dir.string();
  return j;
}

nlohmann::json epoch_log_to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"train_total", log.train_total},
          {"train_cls", log.train_cls},
          {"train_contrastive", log.train_contrastive},
          {"val_auroc", log.val_auroc},
          {"val_accuracy", log.val_accuracy},
          {"val_loss", log.val_loss},
          {"lr", log.lr}};
}

namespace {

EvalReport forward_all(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                       const ModelConfig& config, std::size_t batch_size, bool with_loss,
                       double lambda) {
  EvalReport report;
  report.scores.reserve(ds.size());
  double cls_sum = 0.0, con_sum = 0.0;
  for (const auto& batch : make_batches(ds, {batch_size, false, 0.0, 0, 0})) {
    auto cache = model_forward<float>(kind, batch.image, batch.text, params, config, Mode::eval, 0);
    const auto probs = class_probability(cache.logits, 1);
    report.scores.insert(report.scores.end(), probs.begin(), probs.end());
    if (kind == ModelKind::gatedclip) {
      report.gates.insert(report.gates.end(), cache.gate.g.begin(), cache.gate.g.end());
    }
    if (with_loss) {
      const double rows = static_cast<double>(batch.size());
      cls_sum += static_cast<double>(cross_entropy(cache.logits, std::span(batch.labels)).loss) * rows;
      if (kind == ModelKind::gatedclip) {
        con_sum += static_cast<double>(contrastive_alignment(cache.h_image(), cache.h_text()).loss) * rows;
      }
    }
  }
  if (with_loss) {
    const double n = static_cast<double>(ds.size());
    report.loss.cls = cls_sum / n;
    report.loss.contrastive = con_sum / n;
    report.loss.lambda = kind == ModelKind::gatedclip ? lambda : 0.0;
    report.loss.total = report.loss.cls + report.loss.lambda * report.loss.contrastive;
  }
  return report;
}

std::vector<std::uint8_t> labels_of(const Dataset& ds) {
  std::vector<std::uint8_t> labels;
  labels.reserve(ds.size());
  for (const auto& r : ds.records) labels.push_back(r.label);
  return labels;
}

}  // namespace

EvalReport evaluate(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                    const ModelConfig& config, double lambda, std::size_t batch_size) {
  if (ds.records.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (!ds.all_labeled()) throw std::invalid_argument("evaluate: dataset contains unlabeled records");
  auto report = forward_all(ds, params, kind, config, batch_size, true, lambda);
  const auto labels = labels_of(ds);
  report.metrics = metrics::evaluate_scores(report.scores, labels);
  return report;
}

EvalReport predict(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                   const ModelConfig& config, std::size_t batch_size) {
  if (ds.records.empty()) throw std::invalid_argument("predict: empty dataset");
  return forward_all(ds, params, kind, config, batch_size, false, 0.0);
}

TrainResult train(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& config) {
  config.validate();
  if (train_ds.records.empty() || val_ds.records.empty()) {
    throw std::invalid_argument("train: training and validation sets must be non-empty");
  }
  if (!train_ds.all_labeled() || !val_ds.all_labeled()) {
    throw std::invalid_argument("train: datasets must be fully labeled");
  }
  if (train_ds.dim != val_ds.dim || train_ds.dim != config.model.dim_in) {
    throw ShapeError("train: dataset dim does not match model dim_in");
  }
  if (val_ds.count_label(0) == 0 || val_ds.count_label(1) == 0) {
    throw std::invalid_argument("train: validation set needs both classes for AUROC");
  }

  const bool gated = config.model_kind == ModelKind::gatedclip;
  optim::ScheduleConfig schedule = config.schedule;
  schedule.total_epochs = config.max_epochs;
  schedule.steps_per_epoch = (train_ds.size() + config.batch_size - 1) / config.batch_size;
  schedule.validate();

  TrainResult result;
  auto params = init_model(config.model_kind, config.model, config.seed);
  auto state = optim::AdamWState::zeros_like(params);
  ParameterSet<float> best_params = params;
  double best_auroc = -1.0;

  std::ofstream metrics_out, timing_out;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    metrics_out.open(config.out_dir / "metrics.jsonl", std::ios::trunc);
    timing_out.open(config.out_dir / "timing.jsonl", std::ios::trunc);
    if (!metrics_out || !timing_out) {
      throw FormatError(FormatErrc::io, "cannot create logs in " + config.out_dir.string());
    }
    result.best_checkpoint_path = config.out_dir / "best.ckpt";
  }

  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = make_batches(
        train_ds, {config.batch_size, true, config.flip_prob, config.seed, epoch});
    double sum_total = 0.0, sum_cls = 0.0, sum_con = 0.0;
    double lr = 0.0;

    for (const auto& batch : batches) {
      params.zero_grad();
      const auto key = rng::derive_key(config.seed, rng::Purpose::dropout, step);
      auto cache = model_forward<float>(config.model_kind, batch.image, batch.text, params,
                                        config.model, Mode::train, key);
      LossBreakdown loss;
      if (gated) {
        auto tl = total_loss<float>(cache.logits, batch.labels, cache.h_image(), cache.h_text(),
                                    config.lambda);
        loss = tl.breakdown;
        if (std::isfinite(loss.total)) {
          gatedclip_backward(cache, tl.grad_logits, tl.grad_h_image, tl.grad_h_text, params);
        }
      } else {
        auto ce = cross_entropy<float>(cache.logits, batch.labels);
        loss.cls = loss.total = ce.loss;
        if (std::isfinite(loss.total)) baseline_backward(cache, ce.grad_logits, params);
      }
      if (!std::isfinite(loss.total)) {
        throw NumericError("non-finite loss at step " + std::to_string(step));
      }
      optim::clip_global_norm(params, config.hyper.max_grad_norm);
      lr = optim::lr_at(step, schedule);
      result.lr_trace.push_back(lr);
      optim::adamw_step(params, state, config.hyper, lr);

      const double rows = static_cast<double>(batch.size());
      sum_total += loss.total * rows;
      sum_cls += loss.cls * rows;
      sum_con += loss.contrastive * rows;
      ++step;
    }

    const double n = static_cast<double>(train_ds.size());
    const auto val = evaluate(val_ds, params, config.model_kind, config.model, config.lambda,
                              config.eval_batch_size);
    EpochLog log;
    log.epoch = epoch;
    log.train_total = sum_total / n;
    log.train_cls = sum_cls / n;
    log.train_contrastive = sum_con / n;
    log.val_auroc = val.metrics.auroc;
    log.val_accuracy = val.metrics.accuracy;
    log.val_loss = val.loss.total;
    log.lr = lr;
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.logs.push_back(log);

    if (log.val_auroc > best_auroc) {
      best_auroc = log.val_auroc;
      result.best_epoch = epoch;
      best_params = params;
      if (!config.out_dir.empty()) {
        Checkpoint ckpt{config.model_kind, config.model, params, state,
                        {{"epoch", epoch}, {"val_auroc", log.val_auroc}, {"seed", config.seed}}};
        save_checkpoint(ckpt, result.best_checkpoint_path);
      }
    }
    if (metrics_out.is_open()) {
      metrics_out << epoch_log_to_json(log).dump() << '\n' << std::flush;
      timing_out << nlohmann::json{{"epoch", epoch}, {"wall_seconds", log.wall_seconds}}.dump()
                 << '\n' << std::flush;
    }
    result.epochs_run = epoch;
    if (epoch - result.best_epoch >= config.patience) break;
  }

  result.best_val_auroc = best_auroc;
  if (!config.out_dir.empty()) {
    result.params = load_checkpoint(result.best_checkpoint_path, config.model_kind, config.model).params;
  } else {
    result.params = std::move(best_params);
  }
  return result;
}

}  // namespace gatedclip
