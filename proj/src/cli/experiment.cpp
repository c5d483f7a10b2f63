#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bandit_icl/digest.hpp"
#include "bandit_icl/error.hpp"
#include "bandit_icl/eval.hpp"
#include "bandit_icl/experiment.hpp"
#include "json.hpp"

namespace bandit_icl {
namespace {

TaskWorld build_world(const ExperimentConfig& cfg) {
  if (cfg.env.family == Family::Histogram) {
    const RatingsData ratings = ingest_ratings_csv(cfg.ratings_csv, cfg.env.num_arms, cfg.ratings_min_interactions,
                                                   cfg.env.noise_std());
    return make_world(cfg.env, &ratings, cfg.test_users);
  }
  return make_world(cfg.env);
}

void require(const std::filesystem::path& path, const char* stage) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::Io, std::string(stage) + ": missing input " + path.string() + " (run the earlier stage)");
  }
}

template <typename F>
void labelled(const char* stage, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  }
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_curves(const std::filesystem::path& path, const std::vector<EpisodeResult>& episodes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  for (const auto& e : episodes) {
    const auto curve = cumulative_regret(e);
    out << e.trajectory.task_id;
    for (double v : curve) out << ',' << fmt17(v);
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<std::vector<double>> read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> curves;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // task id
    std::vector<double> curve;
    while (std::getline(ss, cell, ',')) curve.push_back(std::stod(cell));
    curves.push_back(std::move(curve));
  }
  return curves;
}

void stage_gen_data(const ExperimentConfig& cfg) {
  labelled("gen-data", [&] {
    const RunPaths paths{cfg.out_dir};
    std::filesystem::create_directories(paths.root);
    const TaskWorld world = build_world(cfg);
    GenerateOptions opts;
    opts.num_tasks = cfg.num_pretrain_tasks;
    opts.first_task_id = 0;
    opts.trajectories_per_task = cfg.trajectories_per_task;
    opts.format = cfg.dataset_format;
    opts.workers = cfg.workers;
    const DatasetManifest m = generate_pretraining_set(world, cfg.demonstrator, opts, paths.pretrain_data());
    std::cerr << "gen-data: " << m.num_trajectories << " pretraining trajectories, coverage "
              << m.coverage_fraction << "\n";
    opts.num_tasks = cfg.num_test_tasks;
    opts.first_task_id = kTestTaskIdBase;
    opts.trajectories_per_task = 1;
    write_dataset(paths.test_data(), generate_dataset(world, cfg.demonstrator, opts), cfg.dataset_format);
  });
}

void stage_train(const ExperimentConfig& cfg) {
  labelled("train", [&] {
    const RunPaths paths{cfg.out_dir};
    require(paths.pretrain_data(), "train");
    const Dataset data = read_dataset(paths.pretrain_data());
    TrainOptions opts;
    opts.mode = cfg.loss;
    opts.dpt_target = cfg.dpt_target;
    opts.workers = cfg.workers;
    opts.validation_fraction = cfg.validation_fraction;
    opts.adam_beta1 = cfg.adam_beta1;
    opts.adam_beta2 = cfg.adam_beta2;
    opts.adam_eps = cfg.adam_eps;
    opts.on_epoch = [](const EpochStats& s) {
      std::cerr << "train: epoch " << s.epoch << " loss " << s.train_loss << " validation " << s.validation_loss
                << "\n";
    };
    const TrainResult res = train(data.trajectories, cfg.model, opts);
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& s : res.curve) {
      curve.push_back({{"epoch", s.epoch},
                       {"train_loss", s.train_loss},
                       {"validation_loss", std::isnan(s.validation_loss) ? nlohmann::json() : nlohmann::json(s.validation_loss)}});
    }
    const nlohmann::json meta = {{"dataset_sha256", file_digest(paths.pretrain_data())},
                                 {"initial_loss", res.initial_loss},
                                 {"best_epoch", res.best_epoch},
                                 {"early_stopped", res.early_stopped},
                                 {"train_size", res.train_size},
                                 {"validation_size", res.validation_size},
                                 {"curve", curve}};
    save_checkpoint(paths.checkpoint(), Checkpoint{res.params, cfg.loss, meta.dump()});
  });
}

void stage_eval(const ExperimentConfig& cfg) {
  labelled("eval", [&] {
    const RunPaths paths{cfg.out_dir};
    require(paths.checkpoint(), "eval");
    const Checkpoint ckpt = load_checkpoint(paths.checkpoint());
    if (ckpt.mode != cfg.loss) fail(ErrorKind::Validation, "checkpoint was trained with a different loss");
    const TaskWorld world = build_world(cfg);
    std::filesystem::create_directories(paths.curves_dir());
    bool wrote_prediction_error = false;
    for (const auto& name : cfg.policies) {
      const PolicyKind policy = parse_policy(name, cfg.tau);
      const auto episodes = run_model_on_tests(ckpt.params, policy, world, cfg.num_test_tasks, cfg.workers);
      write_curves(paths.curve(name), episodes);
      if (cfg.prediction_error && policy.uses_reward_head() && !wrote_prediction_error && !episodes.empty()) {
        const auto rep = prediction_error(episodes, checkpoint_predictor(ckpt.params));
        nlohmann::json per_arm = nlohmann::json::array();
        for (std::size_t a = 0; a < rep.per_arm.size(); ++a) {
          per_arm.push_back({{"arm", a},
                             {"count", rep.counts[a]},
                             {"squared_error", rep.per_arm[a] ? nlohmann::json(*rep.per_arm[a]) : nlohmann::json()}});
        }
        std::ofstream(paths.prediction_error()) << nlohmann::json{{"policy", name}, {"overall", rep.overall},
                                                                  {"per_arm", per_arm}}
                                                       .dump(2)
                                                << "\n";
        wrote_prediction_error = true;
      }
    }
  });
}

void stage_baseline(const ExperimentConfig& cfg) {
  labelled("baseline", [&] {
    const RunPaths paths{cfg.out_dir};
    const TaskWorld world = build_world(cfg);
    std::filesystem::create_directories(paths.curves_dir());
    std::optional<Dataset> pretrain;
    auto load_pretrain = [&]() -> const Dataset& {
      if (!pretrain) {
        require(paths.pretrain_data(), "baseline");
        pretrain = read_dataset(paths.pretrain_data());
      }
      return *pretrain;
    };
    for (const auto& name : cfg.baselines) {
      BaselineSpec spec;
      spec.name = name;
      spec.demo = cfg.demonstrator;
      spec.sigma_theta_sq = cfg.sigma_theta_sq;
      spec.estr.rank = cfg.env.rank;
      spec.estr.horizon = cfg.env.horizon;
      spec.estr.explore_rounds = cfg.estr_explore_rounds;
      spec.estr.lambda_perp = cfg.estr_lambda_perp;
      if (name == "mlin") {
        const Dataset& d = load_pretrain();
        std::vector<ActionSet> sets;
        sets.reserve(d.trajectories.size());
        for (const auto& t : d.trajectories) sets.push_back(make_task(world, t.task_id).actions);
        spec.mlin = mlin_fit(d.trajectories, sets, cfg.mlin_k > 0 ? cfg.mlin_k : world.base_actions.dim(), 1.0);
      }
      if (name == "bayes_greedy" && std::filesystem::exists(paths.pretrain_data())) {
        const Dataset& d = load_pretrain();
        std::vector<double> sums(static_cast<std::size_t>(cfg.env.num_arms), 0.0);
        std::vector<double> counts(sums.size(), 0.0);
        for (const auto& t : d.trajectories) {
          for (std::size_t i = 0; i < t.actions.size(); ++i) {
            sums[static_cast<std::size_t>(t.actions[i])] += t.rewards[i];
            counts[static_cast<std::size_t>(t.actions[i])] += 1.0;
          }
        }
        spec.pooled_means.resize(sums.size());
        for (std::size_t a = 0; a < sums.size(); ++a) spec.pooled_means[a] = counts[a] > 0 ? sums[a] / counts[a] : 0.0;
      }
      write_curves(paths.curve(name), run_baseline_on_tests(spec, world, cfg.num_test_tasks, cfg.workers));
    }
  });
}

void stage_report(const ExperimentConfig& cfg) {
  labelled("report", [&] {
    const RunPaths paths{cfg.out_dir};
    std::vector<RegretReport> reports;
    std::vector<std::string> labels = cfg.policies;
    labels.insert(labels.end(), cfg.baselines.begin(), cfg.baselines.end());
    for (const auto& label : labels) {
      if (!std::filesystem::exists(paths.curve(label))) continue;
      RegretReport rep = aggregate(read_curves(paths.curve(label)), label, std::string(to_string(cfg.env.family)),
                                   to_string(cfg.demonstrator.kind));
      rep.config_json = nlohmann::json(cfg.canonical()).dump();
      reports.push_back(std::move(rep));
    }
    std::filesystem::create_directories(paths.root);
    emit_report(reports, paths.report_csv(), paths.report_svg(),
                std::string("cumulative regret (") + std::string(to_string(cfg.env.family)) + ")");
    for (const auto& r : reports) {
      std::cerr << "report: " << r.policy << " final regret " << r.final_mean() << " +- "
                << (r.stderr_.empty() ? 0.0 : r.stderr_.back()) << "\n";
    }
  });
}

void run_experiment(const ExperimentConfig& cfg) {
  stage_gen_data(cfg);
  stage_train(cfg);
  stage_eval(cfg);
  stage_baseline(cfg);
  stage_report(cfg);
  write_run_manifest(cfg, {"gen-data", "train", "eval", "baseline", "report"});
}

void write_run_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& stages) {
  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root);
  std::vector<std::filesystem::path> files = {paths.pretrain_data(), paths.test_data(), paths.checkpoint(),
                                              paths.report_csv(),    paths.report_svg(), paths.prediction_error()};
  for (const auto& label : cfg.policies) files.push_back(paths.curve(label));
  for (const auto& label : cfg.baselines) files.push_back(paths.curve(label));
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& f : files) {
    if (std::filesystem::exists(f)) {
      artifacts[std::filesystem::relative(f, paths.root).generic_string()] = file_digest(f);
    }
  }
  // Stages run separately against the same config accumulate in one manifest.
  std::vector<std::string> all_stages;
  if (std::filesystem::exists(paths.manifest())) {
    std::ifstream in(paths.manifest());
    const nlohmann::json prev = nlohmann::json::parse(in, nullptr, false);
    if (!prev.is_discarded() && prev.value("config", std::string()) == cfg.canonical() && prev.contains("stages")) {
      for (const auto& s : prev["stages"]) all_stages.push_back(s.get<std::string>());
    }
  }
  for (const auto& s : stages) {
    if (std::find(all_stages.begin(), all_stages.end(), s) == all_stages.end()) all_stages.push_back(s);
  }
  const nlohmann::json manifest = {{"seed", cfg.seed},
                                   {"config", cfg.canonical()},
                                   {"stages", all_stages},
                                   {"artifacts", artifacts}};
  std::ofstream out(paths.manifest(), std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + paths.manifest().string());
  out << manifest.dump(2) << "\n";
}

}  // namespace bandit_icl
