#include "padamp/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace padamp {

std::string_view to_string(LrFamily family) {
  switch (family) {
    case LrFamily::kConstant: return "constant";
    case LrFamily::kPowerLaw: return "power_law";
    case LrFamily::kPiecewise: return "piecewise";
    case LrFamily::kStep: return "step";
  }
  return "unknown";
}

LrFamily parse_lr_family(std::string_view name) {
  for (auto f : {LrFamily::kConstant, LrFamily::kPowerLaw, LrFamily::kPiecewise, LrFamily::kStep})
    if (to_string(f) == name) return f;
  throw Error("unknown learning-rate schedule family '" + std::string(name) + "'");
}

void validate(const LrSchedule& s) {
  if (!(s.base > 0) || !std::isfinite(s.base)) throw Error("schedule: base rate must be positive");
  if (s.steps_per_epoch < 1) throw Error("schedule: steps_per_epoch must be >= 1");
  switch (s.family) {
    case LrFamily::kConstant:
      break;
    case LrFamily::kPowerLaw:
      if (!(s.power >= 0) || !std::isfinite(s.power))
        throw Error("schedule: power_law exponent must be >= 0");
      break;
    case LrFamily::kPiecewise:
    case LrFamily::kStep:
      if (!(s.factor > 0 && s.factor <= 1)) throw Error("schedule: decay factor must lie in (0, 1]");
      if (s.family == LrFamily::kStep && s.every < 1)
        throw Error("schedule: step decay period must be >= 1 epoch");
      if (!std::is_sorted(s.milestones.begin(), s.milestones.end()))
        throw Error("schedule: milestones must be sorted");
      break;
  }
}

double schedule_lr(std::int64_t t, const LrSchedule& s) {
  if (t < 1) throw Error("schedule_lr: step index must be >= 1");
  const std::int64_t epoch = (t - 1) / s.steps_per_epoch;
  switch (s.family) {
    case LrFamily::kConstant:
      return s.base;
    case LrFamily::kPowerLaw:
      return s.base / std::pow(static_cast<double>(t), s.power);
    case LrFamily::kPiecewise: {
      const auto passed = std::upper_bound(s.milestones.begin(), s.milestones.end(), epoch) -
                          s.milestones.begin();
      return s.base * std::pow(s.factor, static_cast<double>(passed));
    }
    case LrFamily::kStep:
      return s.base * std::pow(s.factor, static_cast<double>(epoch / s.every));
  }
  throw Error("schedule_lr: unknown family");
}

void validate(const PSchedule& s) {
  validate_power(s.initial);
  if (s.decay_epoch >= 0) validate_power(s.decayed);
}

double schedule_p(std::int64_t epoch, const PSchedule& s) {
  if (s.decay_epoch >= 0 && epoch >= s.decay_epoch) return s.decayed;
  return s.initial;
}

}  // namespace padamp
