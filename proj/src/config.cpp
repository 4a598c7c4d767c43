#include "padamp/harness.hpp"

#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>

namespace padamp {

ConfigMap parse_config(std::istream& is) {
  ConfigMap map;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = text::trim(view.substr(0, eq));
    const auto value = text::trim(view.substr(eq + 1));
    if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
    map[std::string(key)] = std::string(value);
  }
  return map;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config file '" + path + "'");
  return parse_config(is);
}

HyperParams table1_defaults(OptimizerKind kind) {
  HyperParams hp;
  switch (kind) {
    case OptimizerKind::kPadamP:
    case OptimizerKind::kAdamP:
      hp.lr = 1e-3;
      hp.beta2 = 0.999;
      hp.weight_decay = 1e-2;
      break;
    case OptimizerKind::kAdam:
    case OptimizerKind::kAmsGrad:
    case OptimizerKind::kPadam:
      hp.lr = 1e-3;
      hp.beta2 = 0.99;
      hp.weight_decay = 1e-4;
      break;
    case OptimizerKind::kSgdm:
      hp.lr = 0.1;
      hp.weight_decay = 5e-4;
      hp.momentum = 0.9;
      break;
  }
  return hp;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    return text::parse_double(v);
  } catch (const Error&) {
    throw Error("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != static_cast<double>(static_cast<std::int64_t>(x)))
    throw Error("config key '" + key + "': expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw Error("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::int64_t> to_int_list(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  if (text::trim(v).empty()) return out;
  for (const auto& cell : text::split(v, ',')) out.push_back(to_int(key, std::string(text::trim(cell))));
  return out;
}

// p values may be written as fractions ("1/8")
double to_fraction(const std::string& key, const std::string& v) {
  const auto slash = v.find('/');
  if (slash == std::string::npos) return to_double(key, v);
  const double num = to_double(key, std::string(text::trim(v.substr(0, slash))));
  const double den = to_double(key, std::string(text::trim(v.substr(slash + 1))));
  if (den == 0) throw Error("config key '" + key + "': zero denominator");
  return num / den;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"optimizer.kind", [](auto&, auto&, auto&) {}},  // handled first
      {"hp.lr", [](auto& c, auto& k, auto& v) { c.hp.lr = to_double(k, v); }},
      {"hp.beta1", [](auto& c, auto& k, auto& v) { c.hp.beta1 = to_double(k, v); }},
      {"hp.beta2", [](auto& c, auto& k, auto& v) { c.hp.beta2 = to_double(k, v); }},
      {"hp.lambda", [](auto& c, auto& k, auto& v) { c.hp.beta1_decay = to_double(k, v); }},
      {"hp.beta1_mode",
       [](auto& c, auto& k, auto& v) {
         if (v == "constant") c.hp.beta1_mode = Beta1Mode::kConstant;
         else if (v == "geometric") c.hp.beta1_mode = Beta1Mode::kGeometric;
         else throw Error("config key '" + k + "': expected constant|geometric");
       }},
      {"hp.delta", [](auto& c, auto& k, auto& v) { c.hp.delta = to_double(k, v); }},
      {"hp.epsilon", [](auto& c, auto& k, auto& v) { c.hp.epsilon = to_double(k, v); }},
      {"hp.p", [](auto& c, auto& k, auto& v) { c.hp.p = to_fraction(k, v); }},
      {"hp.weight_decay", [](auto& c, auto& k, auto& v) { c.hp.weight_decay = to_double(k, v); }},
      {"hp.momentum", [](auto& c, auto& k, auto& v) { c.hp.momentum = to_double(k, v); }},
      {"hp.eps_mode",
       [](auto& c, auto& k, auto& v) {
         if (v == "inside") c.hp.eps_mode = EpsMode::kInsidePower;
         else if (v == "outside") c.hp.eps_mode = EpsMode::kOutsidePower;
         else throw Error("config key '" + k + "': expected inside|outside");
       }},
      {"hp.trigger",
       [](auto& c, auto& k, auto& v) {
         if (v == "lr_scaled") c.hp.trigger = TriggerMode::kLrScaled;
         else if (v == "fixed") c.hp.trigger = TriggerMode::kFixed;
         else throw Error("config key '" + k + "': expected lr_scaled|fixed");
       }},
      {"hp.trigger_lr",
       [](auto& c, auto& k, auto& v) {
         if (v == "scheduled") c.hp.trigger_lr = TriggerLr::kScheduled;
         else if (v == "base") c.hp.trigger_lr = TriggerLr::kBase;
         else throw Error("config key '" + k + "': expected scheduled|base");
       }},
      {"hp.projection", [](auto& c, auto& k, auto& v) { c.hp.projection = to_bool(k, v); }},
      {"hp.decay_skips_projected",
       [](auto& c, auto& k, auto& v) { c.hp.decay_skips_projected = to_bool(k, v); }},
      {"objective.name", [](auto& c, auto&, auto& v) { c.objective.name = v; }},
      {"objective.dim", [](auto& c, auto& k, auto& v) { c.objective.dim = to_int(k, v); }},
      {"objective.condition",
       [](auto& c, auto& k, auto& v) { c.objective.condition = to_double(k, v); }},
      {"objective.minimizer_scale",
       [](auto& c, auto& k, auto& v) { c.objective.minimizer_scale = to_double(k, v); }},
      {"objective.init_scale",
       [](auto& c, auto& k, auto& v) { c.objective.init_scale = to_double(k, v); }},
      {"objective.d", [](auto& c, auto& k, auto& v) { c.objective.d = to_int(k, v); }},
      {"objective.n", [](auto& c, auto& k, auto& v) { c.objective.n = to_int(k, v); }},
      {"objective.hidden", [](auto& c, auto& k, auto& v) { c.objective.hidden = to_int(k, v); }},
      {"objective.classes", [](auto& c, auto& k, auto& v) { c.objective.classes = to_int(k, v); }},
      {"objective.separation",
       [](auto& c, auto& k, auto& v) { c.objective.separation = to_double(k, v); }},
      {"objective.var_floor",
       [](auto& c, auto& k, auto& v) { c.objective.var_floor = to_double(k, v); }},
      {"objective.data_seed",
       [](auto& c, auto& k, auto& v) {
         c.objective.data_seed = static_cast<std::uint64_t>(to_int(k, v));
       }},
      {"objective.data_csv", [](auto& c, auto&, auto& v) { c.objective.data_csv = v; }},
      {"schedule.family", [](auto& c, auto&, auto& v) { c.schedule.family = parse_lr_family(v); }},
      {"schedule.power", [](auto& c, auto& k, auto& v) { c.schedule.power = to_double(k, v); }},
      {"schedule.milestones",
       [](auto& c, auto& k, auto& v) { c.schedule.milestones = to_int_list(k, v); }},
      {"schedule.factor", [](auto& c, auto& k, auto& v) { c.schedule.factor = to_double(k, v); }},
      {"schedule.every", [](auto& c, auto& k, auto& v) { c.schedule.every = to_int(k, v); }},
      {"p_schedule.epoch",
       [](auto& c, auto& k, auto& v) { c.p_schedule.decay_epoch = to_int(k, v); }},
      {"p_schedule.p", [](auto& c, auto& k, auto& v) { c.p_schedule.decayed = to_fraction(k, v); }},
      {"run.steps", [](auto& c, auto& k, auto& v) { c.steps = to_int(k, v); }},
      {"run.epochs", [](auto& c, auto& k, auto& v) { c.epochs = to_int(k, v); }},
      {"run.steps_per_epoch", [](auto& c, auto& k, auto& v) { c.steps_per_epoch = to_int(k, v); }},
      {"run.batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = to_int(k, v); }},
      {"run.seed",
       [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"run.eval_window", [](auto& c, auto& k, auto& v) { c.eval_window = to_int(k, v); }},
      {"run.eval_every", [](auto& c, auto& k, auto& v) { c.eval_every = to_int(k, v); }},
      {"run.out", [](auto& c, auto&, auto& v) { c.output_path = v; }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

ExperimentConfig build_config(const ConfigMap& map) {
  ExperimentConfig cfg;
  if (auto it = map.find("optimizer.kind"); it != map.end())
    cfg.optimizer = parse_optimizer_kind(it->second);
  cfg.hp = table1_defaults(cfg.optimizer);
  const auto& table = setters();
  for (const auto& [key, value] : map) {
    auto it = table.find(key);
    if (it == table.end()) throw Error("unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.p_schedule.initial = cfg.hp.p;
  cfg.schedule.base = cfg.hp.lr;
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.hp);
  LrSchedule s = cfg.schedule;
  s.base = cfg.hp.lr;
  validate(s);
  PSchedule ps = cfg.p_schedule;
  ps.initial = cfg.hp.p;
  validate(ps);
  if (cfg.steps < 0 || cfg.epochs < 0) throw Error("config: budget must be non-negative");
  if (cfg.steps == 0 && cfg.epochs == 0) throw Error("config: budget must be >= 1 step");
  if (cfg.steps > 0 && cfg.epochs > 0) throw Error("config: set run.steps or run.epochs, not both");
  if (cfg.batch_size < 1) throw Error("config: batch_size must be >= 1");
  if (cfg.steps_per_epoch < 1) throw Error("config: steps_per_epoch must be >= 1");
  if (cfg.eval_window < 1 || cfg.eval_every < 1)
    throw Error("config: eval_window and eval_every must be >= 1");
  static const std::vector<std::string> objectives = {"quadratic", "rosenbrock", "scale_invariant",
                                                      "logistic", "mlp"};
  if (std::find(objectives.begin(), objectives.end(), cfg.objective.name) == objectives.end())
    throw Error("config: unknown objective '" + cfg.objective.name + "'");
}

std::unique_ptr<Objective> make_objective(const ObjectiveConfig& cfg) {
  if (cfg.name == "quadratic") {
    VectorXd minimizer(cfg.dim);
    for (Eigen::Index i = 0; i < cfg.dim; ++i)
      minimizer(i) = cfg.minimizer_scale * std::sin(static_cast<double>(i + 1));
    return std::make_unique<Quadratic>(
        Quadratic::with_condition(cfg.dim, cfg.condition, minimizer, cfg.init_scale));
  }
  if (cfg.name == "rosenbrock") return std::make_unique<Rosenbrock>();
  if (cfg.name == "scale_invariant") return std::make_unique<ScaleInvariantObjective>(cfg.dim);
  if (cfg.name == "logistic") {
    if (!cfg.data_csv.empty())
      return std::make_unique<LogisticRegression>(read_dataset_csv(cfg.data_csv));
    return std::make_unique<LogisticRegression>(LogisticOptions{cfg.d, cfg.n, cfg.separation},
                                                cfg.data_seed);
  }
  if (cfg.name == "mlp") {
    MlpOptions opts{cfg.d, cfg.hidden, cfg.classes, cfg.n, cfg.separation, cfg.var_floor};
    if (!cfg.data_csv.empty()) return std::make_unique<TinyMlp>(opts, read_dataset_csv(cfg.data_csv));
    return std::make_unique<TinyMlp>(opts, cfg.data_seed);
  }
  throw Error("unknown objective '" + cfg.name + "'");
}

std::string default_output_dir() {
  if (const char* env = std::getenv("PADAMP_OUT_DIR"); env && *env) return env;
  return "padamp_out";
}

}  // namespace padamp
