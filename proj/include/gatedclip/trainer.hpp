#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "gatedclip/embedding_store.hpp"
#include "gatedclip/metrics.hpp"
#include "gatedclip/model.hpp"
#include "gatedclip/objective.hpp"
#include "gatedclip/optim.hpp"

namespace gatedclip {

struct TrainConfig {
  ModelKind model_kind = ModelKind::gatedclip;
  ModelConfig model;
  optim::OptimHyper hyper;
  // peak_lr, warmup_epochs and min_lr are read from here; total_epochs and
  // steps_per_epoch are derived from max_epochs and the training set.
  optim::ScheduleConfig schedule;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 7;
  double lambda = 0.01;
  double flip_prob = 0.5;
  std::uint64_t seed = 0;
  std::size_t eval_batch_size = 256;
  // When empty, nothing is written and the best parameters are kept in memory.
  std::filesystem::path out_dir;

  void validate() const;
};

/// Flat JSON mirroring TrainConfig field names (see configs/default.json).
/// Unknown keys are rejected; missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json train_config_to_json(const TrainConfig& c);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_total = 0.0;
  double train_cls = 0.0;
  double train_contrastive = 0.0;
  double val_auroc = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // learning rate of the epoch's last step
  double wall_seconds = 0.0;
};

/// metrics.jsonl line: every EpochLog field except wall_seconds, which goes to
/// timing.jsonl so that reruns produce byte-identical metrics files.
nlohmann::json epoch_log_to_json(const EpochLog& log);

struct TrainResult {
  std::size_t best_epoch = 0;
  double best_val_auroc = 0.0;
  std::size_t epochs_run = 0;
  std::vector<EpochLog> logs;
  std::filesystem::path best_checkpoint_path;  // empty without out_dir
  std::vector<double> lr_trace;                // learning rate used at every step
  ParameterSet<float> params;                  // restored best parameters
};

TrainResult train(const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& config);

struct EvalReport {
  metrics::EvalResult metrics;
  LossBreakdown loss;         // mean over the dataset, lambda applied
  std::vector<double> scores;  // class-1 probabilities in dataset order
  std::vector<double> gates;   // gatedclip only
};

/// Eval-mode pass over every record (no dropout, no flip, dataset order).
EvalReport evaluate(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                    const ModelConfig& config, double lambda = 0.01,
                    std::size_t batch_size = 256);

/// Class-1 probabilities (and gate values for gatedclip) without needing labels.
EvalReport predict(const Dataset& ds, const ParameterSet<float>& params, ModelKind kind,
                   const ModelConfig& config, std::size_t batch_size = 256);

}  // namespace gatedclip
