#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bandit_icl/error.hpp"
#include "bandit_icl/experiment.hpp"

namespace bandit_icl {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorKind::ParseError, "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    bad_value(key, v, std::is_integral_v<T> ? "an integer" : "a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool canonical = true;
};

template <typename T, typename Obj>
Field number_field(T Obj::*member, Obj ExperimentConfig::*owner) {
  return {[=](ExperimentConfig& c, const std::string& k, const std::string& v) {
            (c.*owner).*member = parse_number<T>(k, v);
          },
          [=](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return num((c.*owner).*member);
            else return std::to_string((c.*owner).*member);
          }};
}

template <typename T>
Field top_number(T ExperimentConfig::*member) {
  return {[=](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [=](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return num(c.*member);
            else return std::to_string(c.*member);
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    using C = ExperimentConfig;
    f["run.seed"] = top_number(&C::seed);
    f["run.workers"] = top_number(&C::workers);
    f["run.workers"].canonical = false;
    f["run.out"] = {[](C& c, const std::string&, const std::string& v) { c.out_dir = v; },
                    [](const C& c) { return c.out_dir.string(); }, false};
    f["run.num_pretrain_tasks"] = top_number(&C::num_pretrain_tasks);
    f["run.num_test_tasks"] = top_number(&C::num_test_tasks);
    f["run.trajectories_per_task"] = top_number(&C::trajectories_per_task);
    f["run.dataset_format"] = {[](C& c, const std::string& k, const std::string& v) {
                                 if (v == "binary") c.dataset_format = DatasetFormat::Binary;
                                 else if (v == "text") c.dataset_format = DatasetFormat::Text;
                                 else bad_value(k, v, "binary or text");
                               },
                               [](const C& c) {
                                 return std::string(c.dataset_format == DatasetFormat::Binary ? "binary" : "text");
                               }};

    f["env.family"] = {[](C& c, const std::string& k, const std::string& v) {
                         try {
                           c.env.family = parse_family(v);
                         } catch (const Error&) {
                           bad_value(k, v, "a family name");
                         }
                       },
                       [](const C& c) { return std::string(to_string(c.env.family)); }};
    f["env.dim"] = number_field(&FamilyConfig::d, &C::env);
    f["env.dim2"] = number_field(&FamilyConfig::d2, &C::env);
    f["env.rank"] = number_field(&FamilyConfig::rank, &C::env);
    f["env.num_arms"] = number_field(&FamilyConfig::num_arms, &C::env);
    f["env.noise_variance"] = number_field(&FamilyConfig::noise_variance, &C::env);
    f["env.horizon"] = number_field(&FamilyConfig::horizon, &C::env);
    f["env.num_new_actions"] = number_field(&FamilyConfig::num_new_actions_per_task, &C::env);
    f["env.ratings_csv"] = {[](C& c, const std::string&, const std::string& v) { c.ratings_csv = v; },
                            [](const C& c) { return c.ratings_csv.string(); }};
    f["env.ratings_min_interactions"] = top_number(&C::ratings_min_interactions);
    f["env.test_users"] = top_number(&C::test_users);

    f["demonstrator.kind"] = {[](C& c, const std::string& k, const std::string& v) {
                                try {
                                  c.demonstrator.kind = parse_demonstrator(v);
                                } catch (const Error&) {
                                  bad_value(k, v, "ts, linucb, linucb_soft or uniform");
                                }
                              },
                              [](const C& c) { return to_string(c.demonstrator.kind); }};
    f["demonstrator.alpha"] = number_field(&DemonstratorConfig::alpha, &C::demonstrator);
    f["demonstrator.lambda"] = number_field(&DemonstratorConfig::lambda, &C::demonstrator);
    f["demonstrator.tau"] = number_field(&DemonstratorConfig::tau, &C::demonstrator);
    f["demonstrator.ts_sigma_sq"] = number_field(&DemonstratorConfig::ts_sigma_sq, &C::demonstrator);

    f["model.n_layers"] = number_field(&TransformerConfig::n_layers, &C::model);
    f["model.n_heads"] = number_field(&TransformerConfig::n_heads, &C::model);
    f["model.d_embd"] = number_field(&TransformerConfig::d_embd, &C::model);
    f["model.context_len"] = number_field(&TransformerConfig::context_len, &C::model);
    f["model.learning_rate"] = number_field(&TransformerConfig::learning_rate, &C::model);
    f["model.batch_size"] = number_field(&TransformerConfig::batch_size, &C::model);
    f["model.max_epochs"] = number_field(&TransformerConfig::max_epochs, &C::model);
    f["model.patience"] = number_field(&TransformerConfig::patience, &C::model);
    f["model.min_delta"] = number_field(&TransformerConfig::min_delta, &C::model);
    f["model.loss"] = {[](C& c, const std::string& k, const std::string& v) {
                         try {
                           c.loss = parse_loss_mode(v);
                         } catch (const Error&) {
                           bad_value(k, v, "predetor, dpt or ad");
                         }
                       },
                       [](const C& c) { return to_string(c.loss); }};
    f["model.dpt_target"] = {[](C& c, const std::string& k, const std::string& v) {
                               if (v == "approx") c.dpt_target = DptTarget::ApproxOptimal;
                               else if (v == "true") c.dpt_target = DptTarget::TrueOptimal;
                               else bad_value(k, v, "approx or true");
                             },
                             [](const C& c) {
                               return std::string(c.dpt_target == DptTarget::ApproxOptimal ? "approx" : "true");
                             }};
    f["model.validation_fraction"] = top_number(&C::validation_fraction);
    f["model.adam_beta1"] = top_number(&C::adam_beta1);
    f["model.adam_beta2"] = top_number(&C::adam_beta2);
    f["model.adam_eps"] = top_number(&C::adam_eps);

    f["deploy.policies"] = {[](C& c, const std::string&, const std::string& v) { c.policies = parse_list(v); },
                            [](const C& c) { return join(c.policies); }};
    f["deploy.tau"] = top_number(&C::tau);
    f["deploy.baselines"] = {[](C& c, const std::string&, const std::string& v) { c.baselines = parse_list(v); },
                             [](const C& c) { return join(c.baselines); }};
    f["deploy.estr_explore_rounds"] = top_number(&C::estr_explore_rounds);
    f["deploy.estr_lambda_perp"] = top_number(&C::estr_lambda_perp);
    f["deploy.mlin_k"] = top_number(&C::mlin_k);
    f["deploy.sigma_theta_sq"] = top_number(&C::sigma_theta_sq);
    f["deploy.prediction_error"] = {
        [](C& c, const std::string& k, const std::string& v) { c.prediction_error = parse_bool(k, v); },
        [](const C& c) { return std::string(c.prediction_error ? "true" : "false"); }};
    return f;
  }();
  return table;
}

const std::set<std::string> kBaselines = {"ts",  "linucb", "linucb_soft", "uniform", "mlin",
                                          "estr", "estr_oracle", "bayes_greedy"};

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, field] : fields()) {
    if (field.canonical) out += key + " = " + field.get(*this) + "\n";
  }
  return out;
}

void ExperimentConfig::validate() const {
  env.validate();
  model.validate();
  if (workers < 1) fail(ErrorKind::Validation, "run.workers must be >= 1");
  if (trajectories_per_task < 1) fail(ErrorKind::Validation, "run.trajectories_per_task must be >= 1");
  if (model.num_arms != env.num_arms) fail(ErrorKind::Validation, "model arm count must equal env.num_arms");
  if (env.horizon > model.context_len - 1) {
    fail(ErrorKind::Validation, "env.horizon (" + std::to_string(env.horizon) + ") must be <= model.context_len - 1 (" +
                                    std::to_string(model.context_len - 1) + ")");
  }
  if (!(tau > 0.0)) fail(ErrorKind::Validation, "deploy.tau must be > 0");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    fail(ErrorKind::Validation, "model.validation_fraction must be in [0, 1)");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
    fail(ErrorKind::Validation, "model.adam_* out of range");
  }
  if (env.family == Family::Histogram && ratings_csv.empty()) {
    fail(ErrorKind::Validation, "env.ratings_csv is required for the histogram family");
  }
  if (!ratings_csv.empty() && !std::filesystem::exists(ratings_csv)) {
    fail(ErrorKind::Validation, "env.ratings_csv does not exist: " + ratings_csv.string());
  }
  std::set<std::string> labels;
  for (const auto& p : policies) {
    const PolicyKind kind = parse_policy(p, tau);
    if (kind.training_mode() != loss) {
      fail(ErrorKind::Validation, "deploy.policies: '" + p + "' needs a model trained with loss " +
                                      to_string(kind.training_mode()));
    }
    if (!labels.insert(p).second) fail(ErrorKind::Validation, "deploy.policies: duplicate '" + p + "'");
  }
  for (const auto& b : baselines) {
    if (!kBaselines.count(b)) fail(ErrorKind::Validation, "deploy.baselines: unknown baseline '" + b + "'");
    if (!labels.insert(b).second) fail(ErrorKind::Validation, "deploy.baselines: duplicate '" + b + "'");
    if ((b == "estr" || b == "estr_oracle") && env.family != Family::Bilinear && env.family != Family::Latent) {
      fail(ErrorKind::Validation, "deploy.baselines: '" + b + "' needs the bilinear or latent family");
    }
    if (b == "estr_oracle" && env.family != Family::Latent) {
      fail(ErrorKind::Validation, "deploy.baselines: estr_oracle needs the latent family");
    }
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = (section.empty() ? "" : section + ".") + trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": duplicate config key '" + key + "'");
    }
    it->second.set(cfg, key, value);
  }
  cfg.model.num_arms = cfg.env.num_arms;
  if (!seen.count("model.context_len")) cfg.model.context_len = cfg.env.horizon + 1;
  cfg.set_seed(cfg.seed);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace bandit_icl
