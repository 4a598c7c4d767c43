#include "padamp/core.hpp"
#include "padamp/state.hpp"

#include <cmath>

namespace padamp {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid hyperparameter: " + what);
}

}  // namespace

void validate_power(double p) {
  require(std::isfinite(p) && p > 0.0 && p <= 0.5,
          "p must lie in (0, 1/2], got " + std::to_string(p));
}

void validate(const HyperParams& hp) {
  require(std::isfinite(hp.lr) && hp.lr > 0.0, "lr must be positive");
  require(hp.beta1 > 0.0 && hp.beta1 < 1.0, "beta1 must lie in (0, 1)");
  require(hp.beta2 > 0.0 && hp.beta2 < 1.0, "beta2 must lie in (0, 1)");
  require(hp.beta1_decay > 0.0 && hp.beta1_decay <= 1.0, "lambda must lie in (0, 1]");
  require(std::isfinite(hp.delta) && hp.delta > 0.0, "delta must be positive");
  require(std::isfinite(hp.epsilon) && hp.epsilon > 0.0, "epsilon must be positive");
  validate_power(hp.p);
  require(std::isfinite(hp.weight_decay) && hp.weight_decay >= 0.0,
          "weight_decay must be non-negative");
  require(hp.momentum >= 0.0 && hp.momentum < 1.0, "momentum must lie in [0, 1)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kPadamP: return "padamp";
    case OptimizerKind::kAdamP: return "adamp";
    case OptimizerKind::kPadam: return "padam";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAmsGrad: return "amsgrad";
    case OptimizerKind::kSgdm: return "sgdm";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  for (auto k : {OptimizerKind::kPadamP, OptimizerKind::kAdamP, OptimizerKind::kPadam,
                 OptimizerKind::kAdam, OptimizerKind::kAmsGrad, OptimizerKind::kSgdm})
    if (to_string(k) == name) return k;
  throw Error("unknown optimizer '" + std::string(name) + "'");
}

}  // namespace padamp
