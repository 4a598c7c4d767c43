// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Thresholds are fixed here and not read from the environment.

#include "padamp/diagnostics.hpp"
#include "padamp/geometry.hpp"
#include "padamp/harness.hpp"
#include "padamp/objectives.hpp"
#include "padamp/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace padamp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// Every optimizer run made by the suite, for the lemma 3-5 sweep.
struct RunLog {
  std::string label;
  OptimizerKind kind;
  std::vector<StepRecord> records;
};
std::vector<RunLog> g_runs;

void log_run(const std::string& label, OptimizerKind kind, const std::vector<StepRecord>& recs) {
  g_runs.push_back({label, kind, recs});
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

VectorXd random_vector(Eigen::Index n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

ParamSet random_params(const Objective& obj, Rng& rng) {
  ParamSet ps;
  for (const auto& g : obj.layout()) ps.push_back({g.name, random_vector(g.dim, rng)});
  return ps;
}

double rel_diff(const ParamSet& a, const ParamSet& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i].values - b[i].values).squaredNorm();
    den += std::max(a[i].values.squaredNorm(), b[i].values.squaredNorm());
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path work_dir() {
  const char* env = std::getenv("PADAMP_OUT_DIR");
  fs::path dir = env && *env ? fs::path(env) : fs::temp_directory_path();
  dir /= "padamp_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------- criteria

Outcome norm_growth_ratio() {
  Outcome o{1, "norm-growth ratio reaches 1+2b/(1-b)"};
  o.pass = true;
  for (double beta : {0.5, 0.9, 0.99}) {
    Stopwatch sw;
    std::vector<double> a(100000, 0.0);
    std::fill(a.begin(), a.begin() + 200, 1.0);
    const auto trace = simulate_norm_growth(a, beta, 0.1, 1.0);
    const double secs = sw.seconds();
    const double limit = norm_growth_limit(beta);
    const double err = std::abs(trace.back().ratio - limit) / limit;
    o.pass = o.pass && err < 0.01 && secs < 1.0;
    o.detail += "b=" + fmt(beta) + " ratio " + fmt(trace.back().ratio) + " (rel err " + fmt(err) +
                ", " + fmt(secs) + " s) ";
  }
  o.detail += "| tol 1%, < 1 s each";
  return o;
}

Outcome lemma2_identity() {
  Outcome o{2, "lemma 2 identity on the tiny MLP"};
  Stopwatch sw;
  double worst = 0.0;
  for (const char* mode : {"constant", "geometric"}) {
    const auto cfg = build_config({{"objective.name", "mlp"},
                                   {"hp.beta1_mode", mode},
                                   {"hp.lambda", "0.99"},
                                   {"run.steps", "10000"},
                                   {"run.seed", "1"}});
    const auto r = run(cfg);
    log_run(std::string("lemma2/") + mode, cfg.optimizer, r.records);
    for (const auto& rec : r.records) worst = std::max(worst, rec.lemma2_residual);
  }
  const double secs = sw.seconds();
  o.pass = worst < 1e-10 && secs < 30.0;
  o.detail = "max residual/(1+|m|) " + fmt(worst) + " over 2x10^4 steps in " + fmt(secs) +
             " s | tol 1e-10, < 30 s";
  return o;
}

Outcome all_optimizer_runs() {
  // one run per optimizer so that every kind is represented in criterion 3
  for (const char* kind : {"padamp", "adamp", "padam", "adam", "amsgrad", "sgdm"}) {
    const auto cfg = build_config({{"objective.name", "mlp"},
                                   {"optimizer.kind", kind},
                                   {"run.batch_size", "32"},
                                   {"run.steps", "2000"},
                                   {"run.seed", "2"}});
    log_run(std::string("mlp/") + kind, cfg.optimizer, run(cfg).records);
  }
  Outcome o{3, "lemma 3-5 slacks non-negative at every step"};
  double l3 = std::numeric_limits<double>::infinity(), l4 = l3, l5 = l3;
  std::size_t steps = 0, runs = 0;
  for (const auto& log : g_runs) {
    if (log.kind == OptimizerKind::kSgdm) continue;
    ++runs;
    for (const auto& r : log.records) {
      l3 = std::min(l3, r.lemma3_margin);
      l4 = std::min(l4, r.lemma4_margin);
      l5 = std::min(l5, r.lemma5_margin);
      ++steps;
    }
  }
  o.pass = runs > 0 && l3 >= 0 && l4 >= 0 && l5 >= 0;
  o.detail = "min slack L3 " + fmt(l3) + ", L4 " + fmt(l4) + ", L5 " + fmt(l5) + " over " +
             std::to_string(runs) + " adaptive runs / " + std::to_string(steps) +
             " steps | tol >= 0";
  return o;
}

Outcome reduction_equivalence() {
  Outcome o{4, "PadamP reduces to Adam (p=1/2) and to momentum (p->0)"};
  Rng rng = seeded_rng(4);
  double worst_adam = 0.0;
  for (int stream = 0; stream < 20; ++stream) {
    HyperParams hp;
    hp.projection = false;
    const Eigen::Index n = 1 + stream * 7;
    ParamSet a{{"w", random_vector(n, rng)}}, b = a;
    auto sa = new_state(a, hp, OptimizerKind::kPadamP);
    auto sb = new_state(b, hp, OptimizerKind::kAdam);
    for (int t = 0; t < 100; ++t) {
      const GradientSet g{random_vector(n, rng, std::exp(random_vector(1, rng)(0)))};
      a = padamp_step(sa, a, g, 1e-3, 0.5).new_params;
      b = adam_step(sb, b, g, 1e-3).new_params;
      worst_adam = std::max(worst_adam, rel_diff(a, b));
    }
  }
  double worst_sgdm = 0.0;
  for (int stream = 0; stream < 20; ++stream) {
    HyperParams hp;
    hp.projection = false;
    ParamSet p{{"w", random_vector(16, rng)}};
    auto s = new_state(p, hp);
    for (int t = 1; t <= 100; ++t) {
      const auto out = padamp_step(s, p, GradientSet{random_vector(16, rng)}, 1e-3, 1e-8);
      const VectorXd dir = (p[0].values - out.new_params[0].values) / 1e-3;
      const VectorXd m_hat = s.m[0] / (1 - std::pow(hp.beta1, t));
      worst_sgdm = std::max(worst_sgdm, (dir - m_hat).norm() / m_hat.norm());
      p = out.new_params;
    }
  }
  o.pass = worst_adam <= 1e-12 && worst_sgdm <= 1e-6;
  o.detail = "Adam max rel diff " + fmt(worst_adam) + " (tol 1e-12), p=1e-8 direction vs m_hat " +
             fmt(worst_sgdm) + " (tol 1e-6)";
  return o;
}

Outcome projection_geometry() {
  Outcome o{5, "tangent projection geometry on 10^4 random pairs"};
  Rng rng = seeded_rng(5);
  std::uniform_int_distribution<int> dim(2, 1000);
  std::uniform_real_distribution<double> log_scale(-6.0, 6.0);
  double orth = 0, idem = 0, contr = 0, scale = 0;
  for (int k = 0; k < 10000; ++k) {
    const Eigen::Index n = dim(rng);
    const VectorXd theta = random_vector(n, rng, std::exp(log_scale(rng)));
    const VectorXd x = random_vector(n, rng, std::exp(log_scale(rng)));
    const VectorXd q = project_tangent(theta, x);
    const double xn = x.norm();
    orth = std::max(orth, std::abs(theta.dot(q)) / (theta.norm() * xn));
    idem = std::max(idem, (project_tangent(theta, q) - q).norm() / xn);
    contr = std::max(contr, (q.norm() - xn) / xn);
    const double c = std::exp(log_scale(rng));
    scale = std::max(scale, (project_tangent(c * theta, x) - q).norm() / xn);
  }
  o.pass = orth < 1e-12 && idem < 1e-12 && contr < 1e-12 && scale < 1e-12;
  o.detail = "orthogonality " + fmt(orth) + ", idempotence " + fmt(idem) + ", contraction excess " +
             fmt(contr) + ", scale invariance " + fmt(scale) + " | tol 1e-12 (relative to |x|)";
  return o;
}

Outcome scale_invariance_suite() {
  Outcome o{6, "scale invariance and projected norm growth"};
  Stopwatch sw;
  Rng rng = seeded_rng(6);
  std::uniform_real_distribution<double> log_c(-3.0, 3.0);

  ScaleInvariantObjective si(64);
  double si_loss = 0, si_orth = 0;
  for (int k = 0; k < 100; ++k) {
    const ParamSet p = random_params(si, rng);
    ParamSet pc = p;
    pc[0].values *= std::exp(log_c(rng));
    si_loss = std::max(si_loss, std::abs(si.loss(pc) - si.loss(p)));
    const VectorXd g = si.grad(p)[0];
    si_orth = std::max(si_orth, std::abs(p[0].values.dot(g)) / (p[0].values.norm() * g.norm()));
  }

  TinyMlp mlp(MlpOptions{}, 6);
  const Eigen::Index h = mlp.options().hidden, d = mlp.options().d_in;
  double mlp_loss = 0, mlp_orth = 0;
  for (int k = 0; k < 20; ++k) {
    const ParamSet p = mlp.initial_params(rng);
    const auto batch = sample_batch(512, 64, rng);
    const double base = mlp.loss(p, batch);
    const VectorXd g = mlp.grad(p, batch)[0];
    for (Eigen::Index row = 0; row < h; ++row) {
      ParamSet q = p;
      const double c = std::exp(log_c(rng));
      Eigen::VectorXd w(d), gr(d);
      for (Eigen::Index col = 0; col < d; ++col) {
        q[0].values(row + col * h) *= c;
        w(col) = p[0].values(row + col * h);
        gr(col) = g(row + col * h);
      }
      mlp_loss = std::max(mlp_loss, std::abs(mlp.loss(q, batch) - base));
      if (gr.norm() > 0) mlp_orth = std::max(mlp_orth, std::abs(w.dot(gr)) / (w.norm() * gr.norm()));
    }
  }

  auto final_norm = [&](const std::string& objective, bool projection, const std::string& group,
                        int seed) {
    ConfigMap map{{"objective.name", objective}, {"objective.dim", "64"},
                  {"hp.weight_decay", "0"},      {"hp.projection", projection ? "true" : "false"},
                  {"run.steps", "2000"},         {"run.seed", std::to_string(seed)},
                  {"run.batch_size", "32"}};
    const auto cfg = build_config(map);
    const auto r = run(cfg);
    if (seed == 6)
      log_run("norm/" + objective + (projection ? "/proj" : "/noproj"), cfg.optimizer, r.records);
    for (const auto& g : r.final_params)
      if (g.name == group) return g.values.norm();
    throw Error("group not found");
  };
  // The norm bound gates on the scale-invariant objective over several seeds; MLP W1 is reported only.
  constexpr int kSeeds = 6;
  int si_held = 0, mlp_held = 0;
  double si_worst = -1e300, mlp_worst = -1e300;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const double si_gap = final_norm("scale_invariant", true, "w", seed) -
                          final_norm("scale_invariant", false, "w", seed);
    const double mlp_gap = final_norm("mlp", true, "W1", seed) - final_norm("mlp", false, "W1", seed);
    si_held += si_gap <= 0;
    mlp_held += mlp_gap <= 0;
    si_worst = std::max(si_worst, si_gap);
    mlp_worst = std::max(mlp_worst, mlp_gap);
  }
  const double secs = sw.seconds();

  o.pass = si_loss < 1e-10 && si_orth < 1e-8 && mlp_loss < 1e-10 && mlp_orth < 1e-8 &&
           si_held == kSeeds && secs < 60.0;
  o.detail = "rescale |dloss| " + fmt(std::max(si_loss, mlp_loss)) + " (tol 1e-10), radial cos " +
             fmt(std::max(si_orth, mlp_orth)) + " (tol 1e-8), |theta_T| on <= off for " +
             std::to_string(si_held) + "/" + std::to_string(kSeeds) + " seeds (worst on-off " +
             fmt(si_worst) + "), MLP W1 info " + std::to_string(mlp_held) + "/" +
             std::to_string(kSeeds) + " (worst " + fmt(mlp_worst) + "), " + fmt(secs) + " s (< 60 s)";
  return o;
}

Outcome gradient_oracle() {
  Outcome o{7, "finite-difference gradient oracle"};
  VectorXd xs(20);
  for (int i = 0; i < 20; ++i) xs(i) = std::sin(i + 1.0);
  const Quadratic quad = Quadratic::with_condition(20, 100.0, xs);
  const Rosenbrock rosen;
  const ScaleInvariantObjective si(64);
  const LogisticRegression logistic(LogisticOptions{}, 7);
  const TinyMlp mlp(MlpOptions{}, 7);

  struct Case {
    const Objective* obj;
    double tol;
    Eigen::Index batch;
  };
  const Case cases[] = {{&quad, 1e-6, 0}, {&rosen, 1e-6, 0}, {&si, 1e-6, 0},
                        {&logistic, 1e-6, 32}, {&mlp, 1e-4, 32}};
  Rng rng = seeded_rng(7);
  o.pass = true;
  for (const auto& c : cases) {
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      const ParamSet p = random_params(*c.obj, rng);
      std::vector<Eigen::Index> idx;
      if (c.batch > 0) idx = sample_batch(c.obj->dataset()->size(), c.batch, rng);
      worst = std::max(worst, relative_error(c.obj->grad(p, idx), finite_difference_grad(*c.obj, p, idx)));
    }
    o.pass = o.pass && worst < c.tol;
    o.detail += c.obj->name() + " " + fmt(worst) + " (tol " + fmt(c.tol) + ") ";
  }
  o.detail += "| 20 points each";
  return o;
}

Outcome convergence_diagnostic() {
  Outcome o{8, "running-min E|g|^2 under a valid schedule"};
  Stopwatch sw;
  const ConfigMap theorem{{"schedule.family", "power_law"}, {"schedule.power", "0.75"},
                          {"hp.lr", "1e-3"},              {"hp.beta1_mode", "geometric"},
                          {"hp.lambda", "0.99"},          {"hp.weight_decay", "0"}};
  ConfigMap quad = theorem;
  quad.insert({{"objective.name", "quadratic"},
               {"objective.dim", "20"},
               {"objective.condition", "100"},
               {"objective.minimizer_scale", "1e-3"},
               {"objective.init_scale", "0"},
               {"run.steps", "10000"}});
  ConfigMap logi = theorem;
  logi.insert({{"objective.name", "logistic"},
               {"objective.d", "10"},
               {"objective.n", "512"},
               {"run.batch_size", "32"},
               {"run.steps", "20000"}});
  const auto qcfg = build_config(quad);
  const auto qr = run(qcfg);
  log_run("convergence/quadratic", qcfg.optimizer, qr.records);
  const auto lcfg = build_config(logi);
  const auto lr = run(lcfg);
  log_run("convergence/logistic", lcfg.optimizer, lr.records);
  const double secs = sw.seconds();
  const double q = qr.convergence.final_min(), l = lr.convergence.final_min();
  const bool monotone = qr.diagnostics.find("running_min_non_increasing")->status == CheckStatus::kPass &&
                        lr.diagnostics.find("running_min_non_increasing")->status == CheckStatus::kPass;
  o.pass = q < 1e-6 && l < 1e-3 && monotone && secs < 120.0;
  o.detail = "quadratic " + fmt(q) + " (tol 1e-6), logistic " + fmt(l) + " (tol 1e-3), " +
             fmt(secs) + " s (< 120 s)";
  return o;
}

Outcome protocol_smoke(const fs::path& dir) {
  Outcome o{9, "p sweep on the tiny MLP with reference defaults"};
  const fs::path out = dir / "p_sweep";
  const ConfigMap base{{"objective.name", "mlp"}, {"run.epochs", "20"}, {"run.out", out.string()}};
  const auto entries = sweep(base, "hp.p", {"1/4", "1/5", "1/8"}, 2);
  bool diag = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    log_run("sweep/p=" + entries[i].value, entries[i].config.optimizer, entries[i].result.records);
    diag = diag && entries[i].result.diagnostics.passed();
  }
  std::size_t summaries = 0, rows = 0;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.path().filename() == "sweep_summary.csv") ++summaries;
  {
    std::ifstream is(out / "sweep_summary.csv");
    std::string line;
    while (std::getline(is, line)) ++rows;
  }
  o.pass = entries.size() == 3 && summaries == 1 && rows == 4 && diag;
  o.detail = std::to_string(entries.size()) + " runs of " +
             std::to_string(entries.empty() ? 0 : entries[0].result.records.size()) + " steps, " +
             std::to_string(summaries) + " summary file with " + std::to_string(rows - 1) +
             " rows, diagnostics " + (diag ? "all pass" : "FAILED");
  return o;
}

Outcome determinism(const fs::path& dir) {
  Outcome o{10, "byte-identical CSV on rerun"};
  const char* files[] = {"steps.csv", "convergence.csv", "diagnostics.csv", "summary.csv"};
  std::size_t compared = 0, mismatched = 0;
  auto compare = [&](const fs::path& a, const fs::path& b) {
    for (const char* f : files) {
      ++compared;
      if (!fs::exists(a / f) || slurp(a / f) != slurp(b / f)) ++mismatched;
    }
  };
  for (const char* objective : {"mlp", "logistic", "rosenbrock"}) {
    for (const char* tag : {"a", "b"}) {
      auto cfg = build_config({{"objective.name", objective},
                               {"run.steps", "500"},
                               {"run.seed", "10"},
                               {"run.batch_size", "32"},
                               {"run.out", (dir / "det" / objective / tag).string()}});
      const auto r = run(cfg);
      if (tag[0] == 'a') log_run(std::string("determinism/") + objective, cfg.optimizer, r.records);
    }
    compare(dir / "det" / objective / "a", dir / "det" / objective / "b");
  }
  const ConfigMap base{{"objective.name", "mlp"}, {"run.steps", "100"}, {"run.batch_size", "32"}};
  auto serial = base, parallel = base;
  serial["run.out"] = (dir / "det" / "sweep1").string();
  parallel["run.out"] = (dir / "det" / "sweep3").string();
  sweep(serial, "run.seed", {"1", "2", "3"}, 1);
  sweep(parallel, "run.seed", {"1", "2", "3"}, 3);
  for (int i = 0; i < 3; ++i)
    compare(dir / "det" / "sweep1" / ("run_" + std::to_string(i)),
            dir / "det" / "sweep3" / ("run_" + std::to_string(i)));
  ++compared;
  if (slurp(dir / "det" / "sweep1" / "sweep_summary.csv") !=
      slurp(dir / "det" / "sweep3" / "sweep_summary.csv"))
    ++mismatched;
  o.pass = mismatched == 0;
  o.detail = std::to_string(compared - mismatched) + "/" + std::to_string(compared) +
             " files identical (3 objectives rerun, sweep with 1 vs 3 workers)";
  return o;
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, norm_growth_ratio},
      {2, lemma2_identity},
      {4, reduction_equivalence},
      {5, projection_geometry},
      {6, scale_invariance_suite},
      {7, gradient_oracle},
      {8, convergence_diagnostic},
      {9, [&] { return protocol_smoke(dir); }},
      {10, [&] { return determinism(dir); }},
      {3, all_optimizer_runs},  // last: sweeps the telemetry of every run above
  };
  std::vector<Outcome> outcomes;
  for (const auto& [id, check] : criteria) {
    try {
      outcomes.push_back(check());
    } catch (const std::exception& e) {
      outcomes.push_back({id, "criterion aborted", false, e.what()});
    }
  }
  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int failed = 0;
  for (const auto& o : outcomes) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << o.id << "] " << o.name << ": " << o.detail
              << "\n";
    failed += !o.pass;
  }
  std::cout << (outcomes.size() - failed) << "/" << outcomes.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
