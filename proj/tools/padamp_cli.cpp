// Command-line front end: run, sweep, norm-sim, check, grad-check.

#include "padamp/diagnostics.hpp"
#include "padamp/harness.hpp"
#include "padamp/objectives.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--steps", f.steps, "Step budget");
  cmd->add_option("--out", f.out, "Output directory (default: $PADAMP_OUT_DIR or ./padamp_out)");
}

padamp::ConfigMap gather_config(const std::string& file, const std::vector<std::string>& sets,
                                const CommonFlags& f) {
  padamp::ConfigMap map;
  if (!file.empty()) map = padamp::load_config_file(file);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw padamp::Error("--set expects key=value, got '" + kv + "'");
    map[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (f.seed) map["run.seed"] = std::to_string(*f.seed);
  if (f.steps) {
    map["run.steps"] = std::to_string(*f.steps);
    map.erase("run.epochs");
  }
  map["run.out"] = !f.out.empty() ? f.out : map.count("run.out") ? map["run.out"]
                                                                : padamp::default_output_dir();
  return map;
}

std::string out_dir(const CommonFlags& f) {
  return f.out.empty() ? padamp::default_output_dir() : f.out;
}

std::ofstream open_in_dir(const std::string& dir, const std::string& file) {
  std::filesystem::create_directories(dir);
  std::ofstream os(std::filesystem::path(dir) / file, std::ios::binary);
  if (!os) throw padamp::Error("cannot write " + file + " under '" + dir + "'");
  return os;
}

void print_report(const padamp::DiagnosticsReport& rep) {
  for (const auto& r : rep.rows)
    std::cout << "  " << r.name << " = " << r.value << " [" << padamp::to_string(r.status) << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PadamP optimizer experiments and diagnostics"};
  app.require_subcommand(1);

  // run
  CommonFlags run_flags;
  std::string run_config;
  std::vector<std::string> run_sets;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("-c,--config", run_config, "Key-value config file");
  run_cmd->add_option("--set", run_sets, "Override a config key (key=value)");
  add_common(run_cmd, run_flags);

  // sweep
  CommonFlags sweep_flags;
  std::string sweep_config, sweep_axis;
  std::vector<std::string> sweep_sets, sweep_values;
  int sweep_jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of a config key");
  sweep_cmd->add_option("-c,--config", sweep_config, "Key-value config file");
  sweep_cmd->add_option("--set", sweep_sets, "Override a config key (key=value)");
  sweep_cmd->add_option("--axis", sweep_axis, "Config key to vary")->required();
  sweep_cmd->add_option("--values", sweep_values, "Values for the axis")->required()->delimiter(',');
  sweep_cmd->add_option("--jobs", sweep_jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_common(sweep_cmd, sweep_flags);

  // norm-sim
  CommonFlags sim_flags;
  double sim_beta = 0.9, sim_eta = 0.1, sim_theta0 = 1.0;
  std::int64_t sim_pulse = 200;
  auto* sim_cmd = app.add_subcommand("norm-sim", "Weight-norm growth with and without momentum");
  sim_cmd->add_option("--beta", sim_beta, "Momentum coefficient");
  sim_cmd->add_option("--eta", sim_eta, "Learning rate");
  sim_cmd->add_option("--theta0", sim_theta0, "Initial squared weight norm");
  sim_cmd->add_option("--pulse", sim_pulse, "Number of leading unit-norm updates");
  add_common(sim_cmd, sim_flags);

  // check
  CommonFlags check_flags;
  std::string check_csv, check_kind = "padamp";
  auto* check_cmd = app.add_subcommand("check", "Replay a steps.csv through the lemma checks");
  check_cmd->add_option("csv", check_csv, "steps.csv to check")->required();
  check_cmd->add_option("--optimizer", check_kind, "Optimizer that produced the file");
  add_common(check_cmd, check_flags);

  // grad-check
  CommonFlags gc_flags;
  std::string gc_objective = "mlp";
  std::vector<std::string> gc_sets;
  double gc_h = 1e-5;
  std::int64_t gc_points = 20;
  auto* gc_cmd = app.add_subcommand("grad-check", "Finite-difference audit of an objective");
  gc_cmd->add_option("--objective", gc_objective, "Objective name");
  gc_cmd->add_option("--set", gc_sets, "Objective config key (key=value)");
  gc_cmd->add_option("--points", gc_points, "Random points to test");
  gc_cmd->add_option("--fd-step", gc_h, "Central-difference step");
  add_common(gc_cmd, gc_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const auto cfg = padamp::build_config(gather_config(run_config, run_sets, run_flags));
      const auto result = padamp::run(cfg);
      std::cout << "run complete: " << result.records.size() << " steps, final loss "
                << result.summary.final_loss << ", min E|g|^2 estimate "
                << result.summary.min_grad_sq_estimate << ", " << result.summary.wall_seconds
                << " s\n";
      print_report(result.diagnostics);
      std::cout << "outputs in " << cfg.output_path << "\n";
      return result.diagnostics.passed() ? 0 : 2;
    }

    if (*sweep_cmd) {
      const auto base = gather_config(sweep_config, sweep_sets, sweep_flags);
      const auto entries = padamp::sweep(base, sweep_axis, sweep_values, sweep_jobs);
      padamp::write_sweep_summary(entries, sweep_axis, std::cout);
      bool ok = true;
      for (const auto& e : entries) ok = ok && e.result.diagnostics.passed();
      return ok ? 0 : 2;
    }

    if (*sim_cmd) {
      const std::int64_t steps = sim_flags.steps.value_or(100000);
      if (sim_pulse < 1 || sim_pulse > steps) throw padamp::Error("--pulse must lie in [1, steps]");
      std::vector<double> norms(static_cast<std::size_t>(steps), 0.0);
      std::fill(norms.begin(), norms.begin() + sim_pulse, 1.0);
      const auto trace = padamp::simulate_norm_growth(norms, sim_beta, sim_eta, sim_theta0);
      auto os = open_in_dir(out_dir(sim_flags), "norm_growth.csv");
      os << "t,norm_sq_gd,norm_sq_gdm,ratio\n";
      for (const auto& e : trace)
        os << e.t << ',' << e.norm_sq_gd << ',' << e.norm_sq_gdm << ',' << e.ratio << '\n';
      const double limit = padamp::norm_growth_limit(sim_beta);
      std::cout << "final ratio " << trace.back().ratio << ", limit " << limit
                << ", relative error " << std::abs(trace.back().ratio - limit) / limit << "\n";
      return 0;
    }

    if (*check_cmd) {
      std::ifstream is(check_csv);
      if (!is) throw padamp::Error("cannot open '" + check_csv + "'");
      const auto table = padamp::read_steps_csv(is);
      const auto rep =
          padamp::diagnose(table.records, padamp::parse_optimizer_kind(check_kind));
      if (!check_flags.out.empty()) {
        auto os = open_in_dir(check_flags.out, "check.csv");
        padamp::write_report_csv(rep, os);
      }
      std::cout << table.records.size() << " steps checked\n";
      print_report(rep);
      if (!rep.passed()) {
        std::cerr << "lemma check failed\n";
        return 1;
      }
      return 0;
    }

    if (*gc_cmd) {
      padamp::ConfigMap map;
      map["objective.name"] = gc_objective;
      for (const auto& kv : gc_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw padamp::Error("--set expects key=value");
        map[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      map["run.steps"] = "1";
      const auto cfg = padamp::build_config(map);
      const auto obj = padamp::make_objective(cfg.objective);
      const std::int64_t points = gc_flags.steps.value_or(gc_points);
      padamp::Rng rng = padamp::seeded_rng(gc_flags.seed.value_or(0));
      auto os = open_in_dir(out_dir(gc_flags), "grad_check.csv");
      os << "point,relative_error\n";
      double worst = 0.0;
      for (std::int64_t i = 0; i < points; ++i) {
        const auto params = obj->initial_params(rng);
        const auto analytic = obj->full_grad(params);
        const auto numeric = padamp::finite_difference_grad(*obj, params, {}, gc_h);
        const double err = padamp::relative_error(analytic, numeric);
        worst = std::max(worst, err);
        os << i << ',' << err << '\n';
      }
      std::cout << obj->name() << ": worst relative error over " << points << " points = "
                << worst << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
