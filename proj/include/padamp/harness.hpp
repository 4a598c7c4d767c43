#pragma once

#include "padamp/core.hpp"
#include "padamp/diagnostics.hpp"
#include "padamp/objectives.hpp"
#include "padamp/schedules.hpp"
#include "padamp/state.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace padamp {

/// Flat dotted-key configuration, e.g. {"optimizer.kind": "padamp"}.
using ConfigMap = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment. Duplicate keys: last wins.
ConfigMap parse_config(std::istream& is);
ConfigMap load_config_file(const std::string& path);

/// Every key build_config understands.
const std::vector<std::string>& known_config_keys();

struct ObjectiveConfig {
  std::string name = "quadratic";  // quadratic | rosenbrock | scale_invariant | logistic | mlp
  Eigen::Index dim = 20;
  double condition = 100.0;
  double minimizer_scale = 1.0;
  double init_scale = 1.0;
  Eigen::Index d = 10;
  Eigen::Index n = 512;
  Eigen::Index hidden = 16;
  Eigen::Index classes = 3;
  double separation = 4.0;
  double var_floor = 1e-5;
  std::uint64_t data_seed = 0;
  std::string data_csv;  // import instead of generating
};

struct ExperimentConfig {
  OptimizerKind optimizer = OptimizerKind::kPadamP;
  HyperParams hp;
  ObjectiveConfig objective;
  LrSchedule schedule;  // base is taken from hp.lr
  PSchedule p_schedule;
  std::int64_t steps = 0;
  std::int64_t epochs = 0;
  std::int64_t steps_per_epoch = 1;  // analytic objectives only
  Eigen::Index batch_size = 128;
  std::uint64_t seed = 0;
  std::int64_t eval_window = 32;
  std::int64_t eval_every = 50;
  std::string output_path;
};

/// Learning rate, beta2, weight decay and momentum used for each optimizer
/// in the reference image-classification protocol.
HyperParams table1_defaults(OptimizerKind kind);

/// Applies optimizer defaults first, then every other key. Unknown keys and
/// malformed values are errors.
ExperimentConfig build_config(const ConfigMap& map);

/// Throws Error before any compute if the configuration cannot run.
void validate(const ExperimentConfig& cfg);

std::unique_ptr<Objective> make_objective(const ObjectiveConfig& cfg);

struct RunSummary {
  double final_loss = 0.0;
  std::optional<double> final_accuracy;
  double min_grad_sq_estimate = 0.0;
  double wall_seconds = 0.0;
  bool diagnostics_passed = false;
};

struct RunResult {
  std::vector<std::string> group_names;
  std::vector<StepRecord> records;
  ConvergenceTrace convergence;
  DiagnosticsReport diagnostics;
  RunSummary summary;
  ParamSet final_params;
};

/// Runs `cfg` against an already-built objective from `initial`. No files
/// are written.
RunResult run_with(const ExperimentConfig& cfg, const Objective& objective, ParamSet initial);

/// Builds the objective, runs, and writes outputs when cfg.output_path is set.
RunResult run(const ExperimentConfig& cfg);

/// Header then one row per step: t, epoch, eta_t, p_now, loss, grad_norm_sq,
/// per group <name>.param_norm/.cos_sim/.projected/.effective_step_norm, then
/// lemma2_residual, lemma3_margin, lemma4_margin, lemma5_margin.
void write_steps_csv(const RunResult& result, std::ostream& os);

struct StepsTable {
  std::vector<std::string> group_names;
  std::vector<StepRecord> records;
};

StepsTable read_steps_csv(std::istream& is);

void write_convergence_csv(const ConvergenceTrace& trace, std::ostream& os);
void write_summary_csv(const RunSummary& summary, std::ostream& os);

/// steps.csv, convergence.csv, diagnostics.csv, summary.csv (and dataset.csv
/// for dataset objectives) under `dir`.
void write_outputs(const RunResult& result, const Objective& objective, const std::string& dir);

struct SweepEntry {
  std::string value;
  ExperimentConfig config;
  RunResult result;
};

/// One run per value of `axis`; results stay in value order regardless of
/// which worker finishes first. Writes per-run outputs and sweep_summary.csv
/// when the base config has an output path.
std::vector<SweepEntry> sweep(const ConfigMap& base, const std::string& axis,
                              const std::vector<std::string>& values, int jobs = 1);

/// Rows sorted by final loss (ties keep value order).
void write_sweep_summary(const std::vector<SweepEntry>& entries, const std::string& axis,
                         std::ostream& os);

/// PADAMP_OUT_DIR or "padamp_out".
std::string default_output_dir();

}  // namespace padamp
