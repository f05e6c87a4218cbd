#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "gatedclip/cli.hpp"
#include "json.hpp"
#include "test_util.hpp"

using gatedclip::testing::temp_path;
namespace cli = gatedclip::cli;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "gatedclip");
  std::ostringstream out, err;
  const int code = cli::parse_and_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"inspect", "x.gceb", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen-synthetic", "--out", "x", "--n", "4", "--mode", "nope"}).code, cli::kExitUsage);
}

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  for (const char* sub : {"gen-synthetic", "train", "eval", "predict", "analyze-gates", "inspect"}) {
    EXPECT_EQ(run({sub, "--help"}).code, cli::kExitOk) << sub;
  }
}

TEST(Cli, RuntimeErrorExitsTwo) {
  const auto r = run({"inspect", temp_path("missing.gceb").string()});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, GenerateAndInspect) {
  const auto path = temp_path("cli_synth.gceb").string();
  ASSERT_EQ(run({"gen-synthetic", "--out", path, "--n", "100", "--seed", "3"}).code, 0);
  const auto r = run({"inspect", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("version 2\n"), std::string::npos);
  EXPECT_NE(r.out.find("count 100\n"), std::string::npos);
  EXPECT_NE(r.out.find("dim 512\n"), std::string::npos);
  EXPECT_NE(r.out.find("label_0 50\n"), std::string::npos);
}

TEST(Cli, TrainEvalPredictGates) {
  const auto train_path = temp_path("cli_train.gceb").string();
  const auto val_path = temp_path("cli_val.gceb").string();
  ASSERT_EQ(run({"gen-synthetic", "--out", train_path, "--n", "64", "--dim", "16", "--seed", "1"}).code, 0);
  ASSERT_EQ(run({"gen-synthetic", "--out", val_path, "--n", "32", "--dim", "16", "--seed", "2",
                 "--mode", "single_modality"}).code, 0);
  const auto cfg_path = temp_path("cli_cfg.json");
  {
    std::ofstream cfg(cfg_path);
    cfg << nlohmann::json{{"dim_in", 16}, {"proj_hidden", 32}, {"proj_out", 32}, {"gate_hidden", 4},
                          {"cls_hidden", 4}, {"max_epochs", 3}, {"patience", 3},
                          {"warmup_epochs", 1}, {"batch_size", 16}}.dump();
  }
  const auto dir_a = temp_path("cli_run_a").string();
  const auto dir_b = temp_path("cli_run_b").string();
  for (const auto& dir : {dir_a, dir_b}) {
    const auto r = run({"train", "--train", train_path, "--val", val_path, "--config",
                        cfg_path.string(), "--out-dir", dir, "--seed", "9"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir_a + "/metrics.jsonl"), slurp(dir_b + "/metrics.jsonl"));

  const auto ckpt = dir_a + "/best.ckpt";
  const auto ev = run({"eval", "--data", val_path, "--checkpoint", ckpt});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto j = nlohmann::json::parse(ev.out);
  EXPECT_EQ(j.at("n"), 32);
  EXPECT_GE(j.at("auroc").get<double>(), 0.0);

  const auto pred_path = temp_path("cli_pred.csv").string();
  ASSERT_EQ(run({"predict", "--data", val_path, "--checkpoint", ckpt, "--out", pred_path}).code, 0);
  std::ifstream pred(pred_path);
  std::string line;
  std::size_t n = 0;
  std::getline(pred, line);
  EXPECT_EQ(line, "id,score");
  while (std::getline(pred, line)) ++n;
  EXPECT_EQ(n, 32u);

  const auto gates_path = temp_path("cli_gates.csv").string();
  const auto g = run({"analyze-gates", "--data", val_path, "--checkpoint", ckpt, "--out", gates_path});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_NE(g.out.find("meta:image_signal"), std::string::npos);

  const auto mismatch = run({"eval", "--data", train_path, "--checkpoint", temp_path("nope.ckpt").string()});
  EXPECT_EQ(mismatch.code, cli::kExitRuntime);
}
