#pragma once

#include "padamp/core.hpp"

#include <string_view>

namespace padamp {

enum class OptimizerKind { kPadamP, kAdamP, kPadam, kAdam, kAmsGrad, kSgdm };

std::string_view to_string(OptimizerKind kind);

/// Parses "padamp", "adamp", "padam", "adam", "amsgrad", "sgdm".
OptimizerKind parse_optimizer_kind(std::string_view name);

/// Optimizer buffers for one run. `m` doubles as the SGDM momentum buffer.
/// `max_grad_sq` and `grad_bound` feed the lemma margins, not the update.
template <typename Scalar>
struct BasicOptimizerState {
  OptimizerKind kind = OptimizerKind::kPadamP;
  HyperParams hp;
  std::int64_t t = 0;
  std::vector<Vector<Scalar>> m;
  std::vector<Vector<Scalar>> v;
  std::vector<Vector<Scalar>> max_v;
  std::vector<Vector<Scalar>> max_grad_sq;
  double grad_bound = 0.0;  // running max of ||g_s||
};

using OptimizerState = BasicOptimizerState<double>;

template <typename Scalar>
BasicOptimizerState<Scalar> new_state(const BasicParamSet<Scalar>& groups,
                                      const HyperParams& hp,
                                      OptimizerKind kind = OptimizerKind::kPadamP) {
  if (groups.empty()) throw Error("new_state: parameter group set is empty");
  validate(hp);
  BasicOptimizerState<Scalar> state;
  state.kind = kind;
  state.hp = hp;
  for (const auto& g : groups) {
    if (g.dim() < 1) throw Error("new_state: group '" + g.name + "' has dim 0");
    state.m.push_back(Vector<Scalar>::Zero(g.dim()));
    state.v.push_back(Vector<Scalar>::Zero(g.dim()));
    state.max_v.push_back(Vector<Scalar>::Zero(g.dim()));
    state.max_grad_sq.push_back(Vector<Scalar>::Zero(g.dim()));
  }
  return state;
}

}  // namespace padamp
