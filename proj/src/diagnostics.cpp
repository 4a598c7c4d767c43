#include "padamp/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace padamp {

std::vector<NormGrowthTrace> simulate_norm_growth(std::span<const double> update_norms_sq,
                                                  double beta, double eta,
                                                  double theta0_norm_sq) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error("simulate_norm_growth: beta must lie in (0, 1)");
  if (!(eta > 0.0)) throw Error("simulate_norm_growth: eta must be positive");
  double total = 0.0;
  for (double a : update_norms_sq) {
    if (!(a >= 0.0) || !std::isfinite(a))
      throw Error("simulate_norm_growth: update norms must be finite and non-negative");
    total += a;
  }
  if (total == 0.0) throw Error("simulate_norm_growth: update norms sum to zero, ratio undefined");

  const double eta_sq = eta * eta;
  std::vector<NormGrowthTrace> trace;
  trace.reserve(update_norms_sq.size() + 1);
  NormGrowthTrace cur{0, theta0_norm_sq, theta0_norm_sq, 1.0};
  trace.push_back(cur);
  // carry = sum_{k<t} beta^(t-k) |p_k|^2
  double carry = 0.0;
  for (std::size_t t = 0; t < update_norms_sq.size(); ++t) {
    const double a = update_norms_sq[t];
    cur.t = static_cast<std::int64_t>(t) + 1;
    cur.norm_sq_gd += eta_sq * a;
    cur.norm_sq_gdm += eta_sq * a + 2.0 * eta_sq * carry;
    carry = beta * (carry + a);
    const double gd_growth = cur.norm_sq_gd - theta0_norm_sq;
    cur.ratio = gd_growth > 0 ? (cur.norm_sq_gdm - theta0_norm_sq) / gd_growth : 1.0;
    trace.push_back(cur);
  }
  return trace;
}

LemmaReport check_lemma3_4_5(std::span<const VectorXd> grads, const HyperParams& hp, double p,
                             SecondMomentMode mode, std::span<const VectorXd> thetas) {
  validate_power(p);
  if (!thetas.empty() && thetas.size() != grads.size())
    throw Error("check_lemma3_4_5: theta history must match the gradient history");
  LemmaReport report;
  if (grads.empty()) return report;
  const Eigen::Index d = grads.front().size();
  VectorXd m = VectorXd::Zero(d), v = VectorXd::Zero(d), gmax = VectorXd::Zero(d);
  double v_scalar = 0.0;
  double c1 = 0.0;
  const double eps = hp.epsilon;
  for (std::size_t s = 0; s < grads.size(); ++s) {
    const VectorXd& g = grads[s];
    if (g.size() != d) throw Error("check_lemma3_4_5: gradient dimension changes mid-stream");
    const auto t = static_cast<std::int64_t>(s) + 1;
    const double b1 = beta1_at(t, hp);
    const VectorXd m_prev = m;
    m = b1 * m + (1 - b1) * g;
    c1 = std::max(c1, g.norm());
    report.lemma2_max = std::max(report.lemma2_max, check_lemma2(m, m_prev, g, b1) / (1 + m.norm()));

    if (mode == SecondMomentMode::kElementwise) {
      v = hp.beta2 * v + (1 - hp.beta2) * g.cwiseAbs2();
      gmax = gmax.cwiseMax(g.cwiseAbs2());
      const VectorXd theta = thetas.empty() ? VectorXd::Zero(d) : thetas[s];
      report.slacks.merge(lemma_slacks(theta, m, m_prev, v, g, gmax, c1, p, eps));
    } else {
      // one shared second moment built from |g_t|^2
      v_scalar = hp.beta2 * v_scalar + (1 - hp.beta2) * g.squaredNorm();
      const VectorXd vv = VectorXd::Constant(d, v_scalar);
      const VectorXd bound = VectorXd::Constant(d, c1 * c1);
      const VectorXd theta = thetas.empty() ? VectorXd::Zero(d) : thetas[s];
      report.slacks.merge(lemma_slacks(theta, m, m_prev, vv, g, bound, c1, p, eps));
    }
  }
  report.steps = static_cast<std::int64_t>(grads.size());
  return report;
}

ScheduleVerdict validate_schedule(const LrSchedule& s) {
  if (!(s.base > 0)) throw Error("validate_schedule: base rate must be positive");
  ScheduleVerdict v;
  v.positive = true;
  switch (s.family) {
    case LrFamily::kConstant:
      v.non_increasing = true;
      v.sum_diverges = true;
      v.squares_summable = false;
      v.at_most_one = s.base <= 1;
      v.reason = "constant rate: sum of squares diverges";
      break;
    case LrFamily::kPowerLaw:
      v.non_increasing = s.power >= 0;
      v.sum_diverges = s.power <= 1;
      v.squares_summable = 2 * s.power > 1;
      v.at_most_one = s.base <= 1;
      if (!v.sum_diverges) v.reason = "exponent > 1: sum of rates converges";
      else if (!v.squares_summable) v.reason = "exponent <= 1/2: sum of squares diverges";
      break;
    case LrFamily::kPiecewise:
      v.non_increasing = s.factor <= 1;
      v.sum_diverges = true;
      v.squares_summable = false;
      v.at_most_one = s.base <= 1;
      v.reason = "piecewise-constant decay: rate is constant after the last milestone";
      break;
    case LrFamily::kStep:
      v.non_increasing = s.factor <= 1;
      v.sum_diverges = s.factor >= 1;
      v.squares_summable = s.factor < 1;
      v.at_most_one = s.base <= 1;
      v.reason = s.factor < 1 ? "geometric step decay: sum of rates converges"
                              : "factor 1: constant rate";
      break;
  }
  if (!v.non_increasing) v.reason = "rate increases over time";
  else if (v.valid()) v.reason.clear();
  else if (!v.at_most_one && v.reason.empty()) v.reason = "base rate exceeds 1";
  return v;
}

double ConvergenceTrace::final_min() const {
  return running_min.empty() ? std::numeric_limits<double>::quiet_NaN() : running_min.back();
}

ConvergenceTrace track_convergence(std::span<const std::int64_t> steps,
                                   std::span<const double> estimates) {
  if (steps.size() != estimates.size())
    throw Error("track_convergence: steps and estimates differ in length");
  ConvergenceTrace trace;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    best = std::min(best, estimates[i]);
    trace.steps.push_back(steps[i]);
    trace.estimate.push_back(estimates[i]);
    trace.running_min.push_back(best);
  }
  return trace;
}

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kInfo: return "info";
    case CheckStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

bool DiagnosticsReport::passed() const {
  return std::none_of(rows.begin(), rows.end(),
                      [](const CheckRow& r) { return r.status == CheckStatus::kFail; });
}

const CheckRow* DiagnosticsReport::find(std::string_view name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

DiagnosticsReport diagnose(std::span<const StepRecord> records, OptimizerKind kind,
                           const ConvergenceTrace* convergence, const LrSchedule* schedule,
                           Beta1Mode beta1_mode) {
  DiagnosticsReport rep;
  auto pass_if = [](bool ok) { return ok ? CheckStatus::kPass : CheckStatus::kFail; };
  const double inf = std::numeric_limits<double>::infinity();

  double lemma2 = 0.0, l3 = inf, l4 = inf, l5 = inf, c1 = 0.0;
  bool finite = true;
  for (const auto& r : records) {
    lemma2 = std::max(lemma2, r.lemma2_residual);
    l3 = std::min(l3, r.lemma3_margin);
    l4 = std::min(l4, r.lemma4_margin);
    l5 = std::min(l5, r.lemma5_margin);
    c1 = std::max(c1, std::sqrt(r.grad_norm_sq));
    finite = finite && std::isfinite(r.loss) && std::isfinite(r.grad_norm_sq) &&
             std::isfinite(r.lemma2_residual);
    for (const auto& g : r.groups) finite = finite && std::isfinite(g.param_norm);
  }
  if (records.empty()) l3 = l4 = l5 = 0.0;

  const bool adaptive = kind != OptimizerKind::kSgdm;
  const auto lemma_status = [&](bool ok) { return adaptive ? pass_if(ok) : CheckStatus::kSkipped; };
  rep.rows.push_back({"lemma2_max_residual", lemma2, lemma_status(lemma2 < kLemma2Tolerance)});
  rep.rows.push_back({"lemma3_min_slack", l3, lemma_status(l3 >= 0)});
  rep.rows.push_back({"lemma4_min_slack", l4, lemma_status(l4 >= 0)});
  rep.rows.push_back({"lemma5_min_slack", l5, lemma_status(l5 >= 0)});
  rep.rows.push_back({"telemetry_finite", finite ? 1.0 : 0.0, pass_if(finite)});
  rep.rows.push_back({"grad_bound_c1", c1, pass_if(std::isfinite(c1))});

  if (convergence) {
    bool monotone = true;
    for (std::size_t i = 1; i < convergence->running_min.size(); ++i)
      monotone = monotone && convergence->running_min[i] <= convergence->running_min[i - 1];
    rep.rows.push_back({"running_min_non_increasing", monotone ? 1.0 : 0.0, pass_if(monotone)});
    rep.rows.push_back({"grad_sq_estimate_min", convergence->final_min(), CheckStatus::kInfo});
  }
  if (schedule) {
    const auto v = validate_schedule(*schedule);
    rep.rows.push_back({"assumption_lr_schedule", v.valid() ? 1.0 : 0.0, CheckStatus::kInfo});
  }
  rep.rows.push_back({"assumption_beta1_geometric", beta1_mode == Beta1Mode::kGeometric ? 1.0 : 0.0,
                      CheckStatus::kInfo});
  return rep;
}

void write_report_csv(const DiagnosticsReport& report, std::ostream& os) {
  os << "name,value,status\n";
  for (const auto& r : report.rows) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, r.value);
    os << r.name << ',' << std::string_view(buf, res.ptr - buf) << ',' << to_string(r.status)
       << '\n';
  }
}

}  // namespace padamp
