#include "gatedclip/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"

#include "gatedclip/checkpoint.hpp"
#include "gatedclip/embedding_store.hpp"
#include "gatedclip/gate_analysis.hpp"
#include "gatedclip/trainer.hpp"

namespace gatedclip::cli {

namespace {

struct GenArgs {
  std::string out;
  std::size_t n = 0;
  std::string mode = "xor";
  std::uint32_t dim = 512;
  double alpha = 0.5;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string train, val, config, model, out_dir;
  std::optional<std::uint64_t> seed;
};

struct DataArgs {
  std::string data, checkpoint, out;
};

int run_gen(const GenArgs& a, std::ostream& out) {
  SyntheticConfig cfg;
  cfg.n = a.n;
  cfg.dim = a.dim;
  cfg.mode = parse_synthetic_mode(a.mode);
  cfg.alpha = a.alpha;
  cfg.noise_sigma = a.noise;
  cfg.seed = a.seed;
  const auto ds = generate_synthetic(cfg);
  write_embedding_file(ds, a.out);
  out << "wrote " << ds.size() << " records (dim " << ds.dim << ", mode " << a.mode << ") to "
      << a.out << '\n';
  return kExitOk;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw std::runtime_error("cannot open config " + a.config);
    cfg = train_config_from_json(nlohmann::json::parse(in));
  }
  if (!a.model.empty()) cfg.model_kind = parse_model_kind(a.model);
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.seed) cfg.seed = *a.seed;
  if (cfg.out_dir.empty()) throw std::invalid_argument("train needs --out-dir (or out_dir in the config)");

  const auto train_ds = read_embedding_file(a.train);
  const auto val_ds = read_embedding_file(a.val);
  const auto result = train(train_ds, val_ds, cfg);
  for (const auto& log : result.logs) out << epoch_log_to_json(log).dump() << '\n';
  out << "best epoch " << result.best_epoch << " val_auroc " << std::setprecision(6)
      << result.best_val_auroc << " after " << result.epochs_run << " epochs; checkpoint "
      << result.best_checkpoint_path.string() << '\n';
  return kExitOk;
}

int run_eval(const DataArgs& a, std::ostream& out) {
  const auto ds = read_embedding_file(a.data);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto report = evaluate(ds, ckpt.params, ckpt.kind, ckpt.config);
  nlohmann::json j = {{"model_kind", to_string(ckpt.kind)},
                      {"auroc", report.metrics.auroc},
                      {"accuracy", report.metrics.accuracy},
                      {"n", report.metrics.n},
                      {"n_positive", report.metrics.n_positive},
                      {"loss", report.loss.total},
                      {"loss_cls", report.loss.cls},
                      {"loss_contrastive", report.loss.contrastive}};
  out << j.dump() << '\n';
  return kExitOk;
}

int run_predict(const DataArgs& a, std::ostream& out) {
  const auto ds = read_embedding_file(a.data);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto report = predict(ds, ckpt.params, ckpt.kind, ckpt.config);
  std::ofstream csv(a.out, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot open " + a.out);
  csv << "id,score\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", report.scores[i]);
    csv << ds.records[i].id << ',' << buf << '\n';
  }
  if (!csv.flush()) throw std::runtime_error("write to " + a.out + " failed");
  out << "wrote " << ds.size() << " predictions to " << a.out << '\n';
  return kExitOk;
}

int run_gates(const DataArgs& a, std::ostream& out) {
  const auto ds = read_embedding_file(a.data);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto report = gate_report(ds, ckpt.params, ckpt.kind, ckpt.config);
  export_gate_csv(report, a.out);
  out << std::fixed << std::setprecision(4) << "gate mean " << report.overall_mean << " std "
      << report.overall_std << '\n';
  for (const auto& [key, mean] : report.group_means) {
    out << "  " << key << " n=" << report.group_counts.at(key) << " mean " << mean << '\n';
  }
  return kExitOk;
}

int run_inspect(const DataArgs& a, std::ostream& out) {
  FileInfo info;
  const auto ds = read_embedding_file(a.data, &info);
  std::size_t flipped = 0;
  std::map<std::string, std::size_t> tags;
  for (const auto& r : ds.records) {
    flipped += r.flipped_image_emb.has_value();
    tags[std::string(to_string(r.meta_tag))] += 1;
  }
  out << "version " << info.version << '\n'
      << "count " << ds.size() << '\n'
      << "dim " << ds.dim << '\n'
      << "flipped " << flipped << '\n'
      << "label_0 " << ds.count_label(0) << '\n'
      << "label_1 " << ds.count_label(1) << '\n'
      << "unlabeled " << ds.count_label(kUnlabeled) << '\n';
  if (ds.has_meta_tags) {
    for (const auto& [tag, n] : tags) out << "meta_" << tag << ' ' << n << '\n';
  }
  return kExitOk;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gated multimodal classification head: training and evaluation on precomputed embeddings",
               "gatedclip"};
  app.require_subcommand(1, 1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic embedding dataset");
  gen_cmd->add_option("--out", gen.out, "Output GCEB path")->required();
  gen_cmd->add_option("--n", gen.n, "Number of records")->required();
  gen_cmd->add_option("--mode", gen.mode, "xor or single_modality")
      ->check(CLI::IsMember({"xor", "single_modality"}));
  gen_cmd->add_option("--dim", gen.dim, "Embedding dimension")->capture_default_str();
  gen_cmd->add_option("--alpha", gen.alpha, "Signal strength")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Per-coordinate noise sigma")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Seed")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--train", tr.train, "Training GCEB file")->required();
  train_cmd->add_option("--val", tr.val, "Validation GCEB file")->required();
  train_cmd->add_option("--config", tr.config, "Flat JSON train config");
  train_cmd->add_option("--model", tr.model, "baseline or gatedclip")
      ->check(CLI::IsMember({"baseline", "gatedclip"}));
  train_cmd->add_option("--out-dir", tr.out_dir, "Directory for metrics.jsonl and best.ckpt");
  train_cmd->add_option("--seed", tr.seed, "Seed (overrides the config)");

  DataArgs ev, pr, ga, in;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled dataset");
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();

  auto* predict_cmd = app.add_subcommand("predict", "Write id,score CSV of class-1 probabilities");
  predict_cmd->add_option("--data", pr.data)->required();
  predict_cmd->add_option("--checkpoint", pr.checkpoint)->required();
  predict_cmd->add_option("--out", pr.out)->required();

  auto* gates_cmd = app.add_subcommand("analyze-gates", "Export per-example gate values");
  gates_cmd->add_option("--data", ga.data)->required();
  gates_cmd->add_option("--checkpoint", ga.checkpoint)->required();
  gates_cmd->add_option("--out", ga.out)->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "Print a summary of a GCEB file");
  inspect_cmd->add_option("data,--data", in.data, "GCEB file")->required();

  if (args.size() <= 1) {
    err << app.help();
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen, out);
    if (*train_cmd) return run_train(tr, out);
    if (*eval_cmd) return run_eval(ev, out);
    if (*predict_cmd) return run_predict(pr, out);
    if (*gates_cmd) return run_gates(ga, out);
    if (*inspect_cmd) return run_inspect(in, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace gatedclip::cli
