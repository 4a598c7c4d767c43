#pragma once

#include "padamp/core.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace padamp {

enum class LrFamily {
  kConstant,   // base
  kPowerLaw,   // base / t^power, t the 1-based step
  kPiecewise,  // base * factor^(number of milestones <= epoch)
  kStep,       // base * factor^floor(epoch / every)
};

std::string_view to_string(LrFamily family);
LrFamily parse_lr_family(std::string_view name);

struct LrSchedule {
  LrFamily family = LrFamily::kConstant;
  double base = 1e-3;
  double power = 0.75;
  std::vector<std::int64_t> milestones = {50, 100, 150};
  double factor = 0.1;
  std::int64_t every = 50;
  std::int64_t steps_per_epoch = 1;
};

/// Throws on a schedule that is non-positive or could increase.
void validate(const LrSchedule& s);

/// Rate at 1-based step t; epochs are (t - 1) / steps_per_epoch.
double schedule_lr(std::int64_t t, const LrSchedule& s);

/// Partial-adaptivity power, optionally switched once at `decay_epoch`.
struct PSchedule {
  double initial = 0.25;
  std::int64_t decay_epoch = -1;  // < 0: never
  double decayed = 0.125;
};

void validate(const PSchedule& s);

double schedule_p(std::int64_t epoch, const PSchedule& s);

}  // namespace padamp
