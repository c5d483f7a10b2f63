#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/experiment.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bool is_validation(bandit_icl::ErrorKind kind) {
  using bandit_icl::ErrorKind;
  return kind == ErrorKind::Validation || kind == ErrorKind::ParseError || kind == ErrorKind::InvalidArgument ||
         kind == ErrorKind::ContextOverflow;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context bandit experiments: data generation, pretraining, deployment and reports"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "collect pretraining and test trajectories"},
      {"train", "pretrain the transformer on the pretraining set"},
      {"eval", "deploy the checkpoint online on the test tasks"},
      {"baseline", "run the classical bandit baselines on the test tasks"},
      {"report", "aggregate regret curves into CSV and SVG"},
      {"run", "all stages in order"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--workers", workers, "override run.workers")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "override run.out");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    bandit_icl::ExperimentConfig cfg = bandit_icl::parse_config(config_path);
    if (seed) cfg.set_seed(*seed);
    if (workers) cfg.workers = *workers;
    if (out_dir) cfg.out_dir = *out_dir;
    cfg.validate();

    if (stage == "run") {
      bandit_icl::run_experiment(cfg);
      return 0;
    }
    if (stage == "gen-data") bandit_icl::stage_gen_data(cfg);
    if (stage == "train") bandit_icl::stage_train(cfg);
    if (stage == "eval") bandit_icl::stage_eval(cfg);
    if (stage == "baseline") bandit_icl::stage_baseline(cfg);
    if (stage == "report") bandit_icl::stage_report(cfg);
    bandit_icl::write_run_manifest(cfg, {stage});
    return 0;
  } catch (const bandit_icl::Error& e) {
    std::cerr << "bandit-icl " << stage << ": " << e.what() << "\n";
    return is_validation(e.kind()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "bandit-icl " << stage << ": " << e.what() << "\n";
    return kExitRuntime;
  }
}
