#pragma once

#include "padamp/core.hpp"
#include "padamp/lemmas.hpp"
#include "padamp/schedules.hpp"
#include "padamp/state.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace padamp {

// ------------------------------------------------------------- norm growth

struct NormGrowthTrace {
  std::int64_t t = 0;
  double norm_sq_gd = 0.0;   // plain GD recursion
  double norm_sq_gdm = 0.0;  // with the momentum cross term
  double ratio = 1.0;        // (gdm - |theta0|^2) / (gd - |theta0|^2)
};

/// Iterates |theta_{t+1}|^2 = |theta_t|^2 + eta^2 |p_t|^2 for GD and the same
/// plus 2 eta^2 sum_{k<t} beta^(t-k) |p_k|^2 for GD with momentum. Entry t
/// holds the norms after t updates (entry 0 is the initial state). The ratio is
/// 1 until the first nonzero update.
std::vector<NormGrowthTrace> simulate_norm_growth(std::span<const double> update_norms_sq,
                                                  double beta, double eta,
                                                  double theta0_norm_sq);

/// 1 + 2 beta / (1 - beta)
inline double norm_growth_limit(double beta) { return 1.0 + 2.0 * beta / (1.0 - beta); }

// ------------------------------------------------------------- lemma replay

enum class SecondMomentMode {
  kElementwise,  // v_{t,i} from g_{t,i}^2, bounded by max_s g_{s,i}^2
  kScalarNorm,   // v_t from |g_t|^2, bounded by C1^2
};

struct LemmaReport {
  double lemma2_max = 0.0;  // max of residual / (1 + |m_t|)
  LemmaSlacks slacks;
  std::int64_t steps = 0;

  bool passed(double lemma2_tol = 1e-10) const {
    return lemma2_max < lemma2_tol && slacks.lemma3 >= 0 && slacks.lemma4 >= 0 &&
           slacks.lemma5 >= 0;
  }
};

/// Rebuilds m_t and v_t from a gradient stream (beta1_t from `hp`) and returns
/// the worst residual/slack of each lemma. `thetas`, when given, must be as
/// long as `grads` and enables the radial bound of lemma 5.
LemmaReport check_lemma3_4_5(std::span<const VectorXd> grads, const HyperParams& hp, double p,
                             SecondMomentMode mode = SecondMomentMode::kElementwise,
                             std::span<const VectorXd> thetas = {});

// ---------------------------------------------------------------- schedules

struct ScheduleVerdict {
  bool positive = false;
  bool non_increasing = false;
  bool sum_diverges = false;
  bool squares_summable = false;
  bool at_most_one = false;  // eta_t <= 1 for all t

  /// All conditions the convergence theorem places on eta_t.
  bool valid() const {
    return positive && non_increasing && sum_diverges && squares_summable && at_most_one;
  }
  std::string reason;
};

/// Decided from the family's closed form, not by summation.
ScheduleVerdict validate_schedule(const LrSchedule& s);

// -------------------------------------------------------------- convergence

struct ConvergenceTrace {
  std::vector<std::int64_t> steps;  // updates completed when each estimate was taken
  std::vector<double> estimate;     // estimate of E|g|^2
  std::vector<double> running_min;

  double final_min() const;
};

ConvergenceTrace track_convergence(std::span<const std::int64_t> steps,
                                   std::span<const double> estimates);

// ------------------------------------------------------------------- report

enum class CheckStatus { kPass, kFail, kInfo, kSkipped };

std::string_view to_string(CheckStatus s);

struct CheckRow {
  std::string name;
  double value = 0.0;
  CheckStatus status = CheckStatus::kInfo;
};

struct DiagnosticsReport {
  std::vector<CheckRow> rows;

  bool passed() const;
  const CheckRow* find(std::string_view name) const;
};

inline constexpr double kLemma2Tolerance = 1e-10;

/// Per-run checks over telemetry alone: lemma residuals/slacks (skipped for
/// SGDM, which keeps no adaptive moments), record finiteness, running-min
/// monotonicity, and informational schedule/assumption rows.
DiagnosticsReport diagnose(std::span<const StepRecord> records, OptimizerKind kind,
                           const ConvergenceTrace* convergence = nullptr,
                           const LrSchedule* schedule = nullptr,
                           Beta1Mode beta1_mode = Beta1Mode::kConstant);

void write_report_csv(const DiagnosticsReport& report, std::ostream& os);

}  // namespace padamp
