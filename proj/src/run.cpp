#include "padamp/harness.hpp"
#include "padamp/optimizers.hpp"

#include "text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

namespace padamp {

namespace {

using text::format_double;

// Mean of |g|^2 over `window` fresh minibatches; the exact |grad f|^2 for
// objectives without data.
double grad_sq_estimate(const Objective& obj, const ParamSet& params, Eigen::Index batch_size,
                        std::int64_t window, Rng& rng) {
  const SyntheticDataset* data = obj.dataset();
  if (!data) return squared_norm(obj.full_grad(params));
  const Eigen::Index b = std::min(batch_size, data->size());
  double sum = 0;
  for (std::int64_t i = 0; i < window; ++i) {
    const auto batch = sample_batch(data->size(), b, rng);
    sum += squared_norm(obj.grad(params, batch));
  }
  return sum / static_cast<double>(window);
}

}  // namespace

RunResult run_with(const ExperimentConfig& cfg, const Objective& objective, ParamSet params) {
  validate(cfg);
  objective.check_params(params);
  const auto started = std::chrono::steady_clock::now();

  Rng rng = seeded_rng(cfg.seed);
  Rng eval_rng = seeded_rng(derive_seed(cfg.seed, 1));

  const SyntheticDataset* data = objective.dataset();
  std::optional<BatchSampler> sampler;
  std::int64_t steps_per_epoch = cfg.steps_per_epoch;
  if (data) {
    sampler.emplace(data->size(), cfg.batch_size);
    steps_per_epoch = sampler->batches_per_epoch();
  }
  const std::int64_t budget = cfg.steps > 0 ? cfg.steps : cfg.epochs * steps_per_epoch;

  LrSchedule schedule = cfg.schedule;
  schedule.base = cfg.hp.lr;
  schedule.steps_per_epoch = steps_per_epoch;
  PSchedule p_schedule = cfg.p_schedule;
  p_schedule.initial = cfg.hp.p;

  RunResult result;
  for (const auto& g : params) result.group_names.push_back(g.name);
  result.records.reserve(static_cast<std::size_t>(budget));

  OptimizerState state = new_state(params, cfg.hp, cfg.optimizer);
  std::vector<std::int64_t> eval_steps;
  std::vector<double> estimates;
  auto checkpoint = [&](std::int64_t completed) {
    eval_steps.push_back(completed);
    estimates.push_back(grad_sq_estimate(objective, params, cfg.batch_size, cfg.eval_window, eval_rng));
  };

  for (std::int64_t t = 1; t <= budget; ++t) {
    if ((t - 1) % cfg.eval_every == 0) checkpoint(t - 1);
    std::vector<Eigen::Index> batch;
    if (sampler) batch = sampler->next(rng);
    Evaluation eval = objective.evaluate(params, batch);
    if (!std::isfinite(eval.loss))
      throw Error("non-finite loss at step " + std::to_string(t));
    const std::int64_t epoch = (t - 1) / steps_per_epoch;
    const double eta = schedule_lr(t, schedule);
    const double p_now = schedule_p(epoch, p_schedule);
    StepOutput out = step(state, params, eval.grad, eta, p_now);
    out.record.loss = eval.loss;
    out.record.epoch = epoch;
    result.records.push_back(std::move(out.record));
    params = std::move(out.new_params);
  }
  checkpoint(budget);

  result.convergence = track_convergence(eval_steps, estimates);
  result.diagnostics =
      diagnose(result.records, cfg.optimizer, &result.convergence, &schedule, cfg.hp.beta1_mode);
  result.summary.final_loss = objective.loss(params);
  result.summary.final_accuracy = objective.accuracy(params);
  result.summary.min_grad_sq_estimate = result.convergence.final_min();
  result.summary.diagnostics_passed = result.diagnostics.passed();
  result.final_params = std::move(params);
  result.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

RunResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto objective = make_objective(cfg.objective);
  Rng init_rng = seeded_rng(derive_seed(cfg.seed, 2));
  RunResult result = run_with(cfg, *objective, objective->initial_params(init_rng));
  if (!cfg.output_path.empty()) write_outputs(result, *objective, cfg.output_path);
  return result;
}

// -------------------------------------------------------------------- CSV

void write_steps_csv(const RunResult& result, std::ostream& os) {
  os << "t,epoch,eta_t,p_now,loss,grad_norm_sq";
  for (const auto& name : result.group_names)
    os << ',' << name << ".param_norm," << name << ".cos_sim," << name << ".projected," << name
       << ".effective_step_norm";
  os << ",lemma2_residual,lemma3_margin,lemma4_margin,lemma5_margin\n";
  for (const auto& r : result.records) {
    os << r.t << ',' << r.epoch << ',' << format_double(r.eta_t) << ',' << format_double(r.p_now)
       << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm_sq);
    for (const auto& g : r.groups)
      os << ',' << format_double(g.param_norm) << ',' << format_double(g.cos_sim) << ','
         << (g.projected ? 1 : 0) << ',' << format_double(g.effective_step_norm);
    os << ',' << format_double(r.lemma2_residual) << ',' << format_double(r.lemma3_margin) << ','
       << format_double(r.lemma4_margin) << ',' << format_double(r.lemma5_margin) << '\n';
  }
}

StepsTable read_steps_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("steps csv: empty input");
  const auto header = text::split(text::trim(line), ',');
  static const std::vector<std::string> lead = {"t", "epoch", "eta_t", "p_now", "loss",
                                                "grad_norm_sq"};
  static const std::vector<std::string> tail = {"lemma2_residual", "lemma3_margin",
                                                "lemma4_margin", "lemma5_margin"};
  const std::size_t fixed = lead.size() + tail.size();
  if (header.size() < fixed || (header.size() - fixed) % 4 != 0 ||
      !std::equal(lead.begin(), lead.end(), header.begin()) ||
      !std::equal(tail.begin(), tail.end(), header.end() - static_cast<long>(tail.size())))
    throw Error("steps csv: unexpected header");
  StepsTable table;
  const std::size_t groups = (header.size() - fixed) / 4;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::string& col = header[lead.size() + 4 * g];
    const auto dot = col.rfind(".param_norm");
    if (dot == std::string::npos) throw Error("steps csv: malformed group column '" + col + "'");
    table.group_names.push_back(col.substr(0, dot));
  }
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(text::trim(line), ',');
    if (cells.size() != header.size())
      throw Error("steps csv: row " + std::to_string(row) + " has the wrong number of cells");
    auto num = [&](std::size_t i) { return text::parse_double(cells[i]); };
    StepRecord r;
    r.t = static_cast<std::int64_t>(num(0));
    r.epoch = static_cast<std::int64_t>(num(1));
    r.eta_t = num(2);
    r.p_now = num(3);
    r.loss = num(4);
    r.grad_norm_sq = num(5);
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t base = lead.size() + 4 * g;
      r.groups.push_back({num(base), num(base + 1), num(base + 2) != 0, num(base + 3)});
    }
    const std::size_t base = lead.size() + 4 * groups;
    r.lemma2_residual = num(base);
    r.lemma3_margin = num(base + 1);
    r.lemma4_margin = num(base + 2);
    r.lemma5_margin = num(base + 3);
    table.records.push_back(std::move(r));
  }
  return table;
}

void write_convergence_csv(const ConvergenceTrace& trace, std::ostream& os) {
  os << "step,grad_sq_estimate,running_min\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i)
    os << trace.steps[i] << ',' << format_double(trace.estimate[i]) << ','
       << format_double(trace.running_min[i]) << '\n';
}

void write_summary_csv(const RunSummary& s, std::ostream& os) {
  os << "final_loss,final_accuracy,min_grad_sq_estimate,diagnostics\n";
  os << format_double(s.final_loss) << ','
     << (s.final_accuracy ? format_double(*s.final_accuracy) : std::string()) << ','
     << format_double(s.min_grad_sq_estimate) << ',' << (s.diagnostics_passed ? "pass" : "fail")
     << '\n';
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

void write_outputs(const RunResult& result, const Objective& objective, const std::string& dir) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  {
    auto os = open_out(root / "steps.csv");
    write_steps_csv(result, os);
  }
  {
    auto os = open_out(root / "convergence.csv");
    write_convergence_csv(result.convergence, os);
  }
  {
    auto os = open_out(root / "diagnostics.csv");
    write_report_csv(result.diagnostics, os);
  }
  {
    auto os = open_out(root / "summary.csv");
    write_summary_csv(result.summary, os);
  }
  if (const auto* data = objective.dataset()) {
    auto os = open_out(root / "dataset.csv");
    write_dataset_csv(*data, os);
  }
}

// ------------------------------------------------------------------ sweep

std::vector<SweepEntry> sweep(const ConfigMap& base, const std::string& axis,
                              const std::vector<std::string>& values, int jobs) {
  if (values.empty()) throw Error("sweep: empty value list");
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), axis) == keys.end())
    throw Error("sweep: unknown axis '" + axis + "'");

  std::vector<SweepEntry> entries(values.size());
  const ExperimentConfig base_cfg = build_config(base);
  for (std::size_t i = 0; i < values.size(); ++i) {
    ConfigMap map = base;
    map[axis] = values[i];
    entries[i].value = values[i];
    entries[i].config = build_config(map);
    if (!base_cfg.output_path.empty())
      entries[i].config.output_path =
          (std::filesystem::path(base_cfg.output_path) / ("run_" + std::to_string(i))).string();
    validate(entries[i].config);
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        entries[i].result = run(entries[i].config);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(entries.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  if (!base_cfg.output_path.empty()) {
    std::filesystem::create_directories(base_cfg.output_path);
    auto os = open_out(std::filesystem::path(base_cfg.output_path) / "sweep_summary.csv");
    write_sweep_summary(entries, axis, os);
  }
  return entries;
}

void write_sweep_summary(const std::vector<SweepEntry>& entries, const std::string& axis,
                         std::ostream& os) {
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].result.summary.final_loss < entries[b].result.summary.final_loss;
  });
  os << "run,axis,value,final_loss,final_accuracy,min_grad_sq_estimate,diagnostics\n";
  for (auto i : order) {
    const auto& s = entries[i].result.summary;
    os << i << ',' << axis << ',' << entries[i].value << ',' << format_double(s.final_loss) << ','
       << (s.final_accuracy ? format_double(*s.final_accuracy) : std::string()) << ','
       << format_double(s.min_grad_sq_estimate) << ',' << (s.diagnostics_passed ? "pass" : "fail")
       << '\n';
  }
}

}  // namespace padamp
