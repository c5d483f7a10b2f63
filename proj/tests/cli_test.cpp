#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bandit_icl/digest.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/experiment.hpp"

using namespace bandit_icl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(BANDIT_ICL_TEST_DATA_DIR) / "cli_scratch" / name;
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BANDIT_ICL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path kSmoke = fs::path(BANDIT_ICL_SOURCE_DIR) / "configs" / "smoke.ini";

std::string parse_error_of(const std::string& text) {
  try {
    parse_config_text(text).validate();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalFileGetsDefaults) {
  const ExperimentConfig c = parse_config_text("[env]\nfamily = linear\n");
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.tau, 0.05);
  EXPECT_DOUBLE_EQ(c.demonstrator.alpha, 1.0);
  EXPECT_DOUBLE_EQ(c.demonstrator.lambda, 1.0);
  EXPECT_DOUBLE_EQ(c.adam_beta1, 0.9);
  EXPECT_DOUBLE_EQ(c.adam_beta2, 0.999);
  EXPECT_DOUBLE_EQ(c.adam_eps, 1e-8);
  EXPECT_DOUBLE_EQ(c.model.learning_rate, 1.5e-4);
  EXPECT_EQ(c.model.n_layers, 4);
  EXPECT_EQ(c.model.n_heads, 4);
  EXPECT_EQ(c.model.d_embd, 32);
  EXPECT_EQ(c.model.context_len, c.env.horizon + 1);
  EXPECT_EQ(c.loss, LossMode::PreDeToR);
}

TEST(Config, ParsesSmokeFile) {
  const ExperimentConfig c = parse_config(kSmoke);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.env.seed, 7u);
  EXPECT_EQ(c.model.seed, 7u);
  EXPECT_EQ(c.num_pretrain_tasks, 50u);
  EXPECT_EQ(c.env.horizon, 10);
  EXPECT_EQ(c.model.context_len, 11);
  EXPECT_EQ(c.baselines.size(), 5u);
}

TEST(Config, UnknownKeyNamed) {
  const std::string msg = parse_error_of("[model]\nlearnig_rate = 0.1\n");
  EXPECT_NE(msg.find("model.learnig_rate"), std::string::npos) << msg;
  EXPECT_NE(parse_error_of("[nope]\nx = 1\n"), "");
  EXPECT_NE(parse_error_of("[env]\nhorizon = 5\nhorizon = 6\n").find("env.horizon"), std::string::npos);
  EXPECT_NE(parse_error_of("[env]\nhorizon = five\n").find("env.horizon"), std::string::npos);
}

TEST(Config, HorizonMustFitContext) {
  const std::string msg = parse_error_of("[env]\nhorizon = 30\n[model]\ncontext_len = 26\n");
  EXPECT_NE(msg.find("context_len"), std::string::npos) << msg;
  EXPECT_EQ(parse_error_of("[env]\nhorizon = 25\n[model]\ncontext_len = 26\n"), "");
}

TEST(Config, CanonicalIgnoresWorkersAndOutput) {
  ExperimentConfig a = parse_config(kSmoke);
  ExperimentConfig b = a;
  b.workers = 4;
  b.out_dir = "elsewhere";
  EXPECT_EQ(a.canonical(), b.canonical());
  b.set_seed(8);
  EXPECT_NE(a.canonical(), b.canonical());
  EXPECT_EQ(parse_config_text(a.canonical()).canonical(), a.canonical());
}

TEST(Cli, SmokeRunIsCompleteAndReproducible) {
  const fs::path a = scratch("smoke_a"), b = scratch("smoke_b");
  fs::remove_all(a);
  fs::remove_all(b);
  ASSERT_EQ(run_cli("run --config " + kSmoke.string() + " --out " + a.string()), 0);
  ASSERT_EQ(run_cli("run --config " + kSmoke.string() + " --out " + b.string() + " --workers 2"), 0);
  const RunPaths pa{a};
  for (const fs::path& f : {pa.pretrain_data(), pa.test_data(), pa.checkpoint(), pa.report_csv(), pa.report_svg(),
                            pa.manifest(), pa.curve("predetor"), pa.curve("mlin")}) {
    EXPECT_TRUE(fs::exists(f)) << f;
  }
  EXPECT_EQ(read_file(pa.manifest()), read_file(RunPaths{b}.manifest()));
  const std::string manifest = read_file(pa.manifest());
  for (const char* artifact : {"pretrain.dataset", "model.ckpt", "report.csv", "curves/ts.csv"}) {
    EXPECT_NE(manifest.find(artifact), std::string::npos) << artifact;
  }
}

TEST(Cli, EvalOnlyReusesCheckpoint) {
  const fs::path dir = scratch("eval_only");
  fs::remove_all(dir);
  ASSERT_EQ(run_cli("gen-data --config " + kSmoke.string() + " --out " + dir.string()), 0);
  ASSERT_EQ(run_cli("train --config " + kSmoke.string() + " --out " + dir.string()), 0);
  const RunPaths paths{dir};
  const std::string ckpt = file_digest(paths.checkpoint());
  fs::remove(paths.pretrain_data());
  ASSERT_EQ(run_cli("eval --config " + kSmoke.string() + " --out " + dir.string()), 0);
  EXPECT_FALSE(fs::exists(paths.pretrain_data()));
  EXPECT_EQ(file_digest(paths.checkpoint()), ckpt);
  EXPECT_TRUE(fs::exists(paths.curve("predetor_tau")));
  const std::string manifest = read_file(paths.manifest());
  EXPECT_NE(manifest.find("\"train\""), std::string::npos);
  EXPECT_NE(manifest.find("\"eval\""), std::string::npos);
}

TEST(Cli, EvalWithoutCheckpointFails) {
  const fs::path dir = scratch("no_ckpt");
  fs::remove_all(dir);
  EXPECT_EQ(run_cli("eval --config " + kSmoke.string() + " --out " + dir.string()), 2);
}

TEST(Cli, ExitCodes) {
  const fs::path bad = scratch("bad.ini");
  write_file(bad, "[model]\nbogus = 1\n");
  EXPECT_EQ(run_cli("gen-data --config " + bad.string() + " --out " + scratch("bad_out").string()), 1);
  write_file(bad, "[env]\nhorizon = 40\n[model]\ncontext_len = 20\n");
  EXPECT_EQ(run_cli("gen-data --config " + bad.string()), 1);
  EXPECT_EQ(run_cli("frobnicate --config " + kSmoke.string()), 1);
  EXPECT_EQ(run_cli("train"), 1);
}
