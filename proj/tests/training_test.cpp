#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "bandit_icl/datagen.hpp"
#include "bandit_icl/digest.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/training.hpp"

using namespace bandit_icl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(BANDIT_ICL_TEST_DATA_DIR) / "training_scratch";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<Trajectory> linear_data(std::uint64_t tasks, int horizon, std::uint64_t seed) {
  FamilyConfig cfg;
  cfg.family = Family::Linear;
  cfg.d = 2;
  cfg.num_arms = 4;
  cfg.horizon = horizon;
  cfg.seed = seed;
  const TaskWorld world = make_world(cfg);
  GenerateOptions opt;
  opt.num_tasks = tasks;
  return generate_dataset(world, DemonstratorConfig{}, opt).trajectories;
}

TransformerConfig small_model(int horizon) {
  TransformerConfig c;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_embd = 16;
  c.num_arms = 4;
  c.context_len = horizon + 1;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  c.max_epochs = 5;
  c.seed = 3;
  return c;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& p, const std::string& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

void expect_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(Train, OverfitsEightTrajectories) {
  const auto data = linear_data(8, 10, 1);
  TransformerConfig cfg = small_model(10);
  cfg.n_layers = 4;
  cfg.n_heads = 4;
  cfg.d_embd = 32;
  cfg.max_epochs = 600;
  const TrainResult r = train(data, cfg, TrainOptions{});
  EXPECT_EQ(r.validation_size, 0u);
  EXPECT_FALSE(r.early_stopped);
  ASSERT_EQ(r.curve.size(), 600u);
  EXPECT_LT(r.curve.back().train_loss, 0.2 * r.initial_loss)
      << "initial " << r.initial_loss << " final " << r.curve.back().train_loss;
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto data = linear_data(20, 10, 2);
  TransformerConfig cfg = small_model(10);
  cfg.max_epochs = 0;
  const TrainResult r = train(data, cfg, TrainOptions{});
  EXPECT_TRUE(r.curve.empty());
  EXPECT_TRUE(r.params == TransformerParams<float>::init(cfg, cfg.seed));
}

TEST(Train, DeterministicAcrossRunsAndWorkerCounts) {
  const auto data = linear_data(60, 10, 3);
  const TransformerConfig cfg = small_model(10);
  std::vector<std::string> digests;
  for (int workers : {1, 1, 3}) {
    TrainOptions opt;
    opt.workers = workers;
    const TrainResult r = train(data, cfg, opt);
    const fs::path p = scratch("det_" + std::to_string(digests.size()) + ".ckpt");
    save_checkpoint(p, Checkpoint{r.params, LossMode::PreDeToR, "{}"});
    digests.push_back(file_digest(p));
  }
  EXPECT_EQ(digests[0], digests[1]);
  EXPECT_EQ(digests[0], digests[2]);
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  const auto data = linear_data(60, 10, 4);
  TransformerConfig cfg = small_model(10);
  cfg.max_epochs = 200;
  cfg.learning_rate = 3e-3;
  const TrainResult r = train(data, cfg, TrainOptions{});
  EXPECT_EQ(r.validation_size, 6u);
  EXPECT_EQ(r.train_size, 54u);
  ASSERT_TRUE(r.early_stopped);
  ASSERT_GE(r.best_epoch, 1);
  const double best = r.curve[static_cast<std::size_t>(r.best_epoch - 1)].validation_loss;
  for (const auto& e : r.curve) EXPECT_GE(e.validation_loss, best - 1e-5 - 1e-12);
  EXPECT_EQ(static_cast<int>(r.curve.size()), r.best_epoch + cfg.patience);
}

TEST(Train, MemorizationLossDecreasesAfterWarmup) {
  const auto data = linear_data(4, 8, 5);
  TransformerConfig cfg = small_model(8);
  cfg.max_epochs = 60;
  cfg.batch_size = 4;
  const TrainResult r = train(data, cfg, TrainOptions{});
  ASSERT_EQ(r.curve.size(), 60u);
  std::vector<double> smooth;
  for (std::size_t e = 3; e + 3 <= r.curve.size(); ++e) {
    smooth.push_back((r.curve[e].train_loss + r.curve[e + 1].train_loss + r.curve[e + 2].train_loss) / 3.0);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_LT(smooth[i], smooth[i - 1]) << "window " << i;
}

TEST(Train, AllModesReduceLoss) {
  const auto data = linear_data(16, 10, 6);
  for (LossMode mode : {LossMode::PreDeToR, LossMode::DPT, LossMode::AD}) {
    TransformerConfig cfg = small_model(10);
    cfg.max_epochs = 40;
    TrainOptions opt;
    opt.mode = mode;
    opt.validation_fraction = 0.0;
    const TrainResult r = train(data, cfg, opt);
    EXPECT_LT(r.curve.back().train_loss, r.initial_loss) << to_string(mode);
  }
}

TEST(Train, RejectsBadDatasets) {
  const TransformerConfig cfg = small_model(10);
  expect_kind(ErrorKind::EmptyDataset, [&] { train({}, cfg, TrainOptions{}); });
  auto data = linear_data(10, 10, 7);
  data[3].actions.pop_back();
  data[3].rewards.pop_back();
  expect_kind(ErrorKind::HeterogeneousShapes, [&] { train(data, cfg, TrainOptions{}); });
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TransformerConfig cfg = small_model(10);
  const auto fresh = TransformerParams<float>::init(cfg, 11);
  save_checkpoint(scratch("fresh.ckpt"), Checkpoint{fresh, LossMode::DPT, R"({"note":"x"})"});
  const Checkpoint back = load_checkpoint(scratch("fresh.ckpt"));
  EXPECT_TRUE(back.params == fresh);
  EXPECT_EQ(back.mode, LossMode::DPT);
  EXPECT_EQ(back.params.config(), cfg);
  EXPECT_NE(back.metadata_json.find("note"), std::string::npos);

  cfg.max_epochs = 3;
  const TrainResult r = train(linear_data(20, 10, 8), cfg, TrainOptions{});
  save_checkpoint(scratch("trained.ckpt"), Checkpoint{r.params, LossMode::PreDeToR, "{}"});
  const auto loaded = load_checkpoint(scratch("trained.ckpt")).params;
  EXPECT_TRUE(loaded == r.params);
  EXPECT_TRUE(std::equal(loaded.data().begin(), loaded.data().end(), r.params.data().begin()));
}

TEST(Checkpoint, CorruptionDetected) {
  const auto params = TransformerParams<float>::init(small_model(10), 12);
  const fs::path p = scratch("corrupt.ckpt");
  save_checkpoint(p, Checkpoint{params, LossMode::PreDeToR, "{}"});
  const std::string good = read_bytes(p);
  write_bytes(p, good.substr(0, good.size() / 2));
  expect_kind(ErrorKind::CorruptCheckpoint, [&] { load_checkpoint(p); });
  std::string flipped = good;
  flipped[flipped.size() / 2] ^= 0x40;
  write_bytes(p, flipped);
  expect_kind(ErrorKind::CorruptCheckpoint, [&] { load_checkpoint(p); });
  write_bytes(p, "BICLCKPT");
  expect_kind(ErrorKind::CorruptCheckpoint, [&] { load_checkpoint(p); });
}

TEST(Checkpoint, ConfigJsonRoundTrip) {
  TransformerConfig cfg = small_model(12);
  cfg.min_delta = 3e-7;
  cfg.seed = 1ULL << 60;
  EXPECT_EQ(config_from_json(config_to_json(cfg)), cfg);
}
