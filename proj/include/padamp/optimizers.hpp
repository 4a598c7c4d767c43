#pragma once

#include "padamp/core.hpp"
#include "padamp/geometry.hpp"
#include "padamp/lemmas.hpp"
#include "padamp/state.hpp"

#include <cmath>
#include <span>
#include <string>

namespace padamp {

template <typename Scalar>
struct BasicStepOutput {
  BasicParamSet<Scalar> new_params;
  StepRecord record;
};

using StepOutput = BasicStepOutput<double>;

/// Elementwise m_hat / denom where denom is (second + eps)^power or
/// second^power + eps.
template <typename Scalar>
Vector<Scalar> preconditioned_direction(const Vector<Scalar>& m_hat,
                                        const Vector<Scalar>& second, double power,
                                        double eps, EpsMode mode) {
  const Scalar e = static_cast<Scalar>(eps);
  const Scalar pw = static_cast<Scalar>(power);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> denom;
  if (mode == EpsMode::kInsidePower)
    denom = power == 0.5 ? (second.array() + e).sqrt().eval() : (second.array() + e).pow(pw).eval();
  else
    denom = (power == 0.5 ? second.array().sqrt().eval() : second.array().pow(pw).eval()) + e;
  return (m_hat.array() / denom).matrix();
}

/// Decoupled decay theta <- (1 - eta * wd) theta. Groups flagged in
/// `projected` are left alone when `skip_projected` is set.
template <typename Scalar>
BasicParamSet<Scalar> apply_weight_decay(BasicParamSet<Scalar> params, double eta_t,
                                         double wd, bool skip_projected,
                                         std::span<const bool> projected = {}) {
  if (wd < 0) throw Error("apply_weight_decay: weight decay must be >= 0");
  if (wd == 0) return params;
  const Scalar factor = static_cast<Scalar>(1.0 - eta_t * wd);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (skip_projected && i < projected.size() && projected[i]) continue;
    params[i].values *= factor;
  }
  return params;
}

namespace detail {

inline bool uses_projection(OptimizerKind k) {
  return k == OptimizerKind::kPadamP || k == OptimizerKind::kAdamP;
}

inline bool uses_max_buffer(OptimizerKind k) {
  return k == OptimizerKind::kAmsGrad || k == OptimizerKind::kPadam;
}

inline bool uses_scheduled_power(OptimizerKind k) {
  return k == OptimizerKind::kPadamP || k == OptimizerKind::kPadam;
}

template <typename Scalar>
void check_state(const BasicOptimizerState<Scalar>& state,
                 const BasicParamSet<Scalar>& params) {
  if (state.m.size() != params.size())
    throw Error("shape mismatch: optimizer state has " + std::to_string(state.m.size()) +
                " groups, parameters have " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (state.m[i].size() != params[i].values.size())
      throw Error("shape mismatch: optimizer state for group '" + params[i].name +
                  "' has the wrong dimension");
}

}  // namespace detail

/// One update of whichever optimizer `state.kind` names. Mutates the state
/// buffers and returns the new parameters with their telemetry; `loss` and
/// `epoch` in the record are left for the caller.
template <typename Scalar>
BasicStepOutput<Scalar> step(BasicOptimizerState<Scalar>& state,
                             const BasicParamSet<Scalar>& params,
                             const BasicGradientSet<Scalar>& grads, double eta_t,
                             double p_now) {
  check_shapes(params, grads);
  detail::check_state(state, params);
  if (!(eta_t > 0) || !std::isfinite(eta_t)) throw Error("step: eta_t must be positive and finite");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!grads[i].allFinite())
      throw Error("non-finite gradient in group '" + params[i].name + "'");

  const OptimizerKind kind = state.kind;
  const HyperParams& hp = state.hp;
  double power = 0.5;
  if (detail::uses_scheduled_power(kind)) {
    validate_power(p_now);
    power = p_now;
  }

  state.t += 1;
  const std::int64_t t = state.t;
  const double tt = static_cast<double>(t);
  const double beta1t = kind == OptimizerKind::kSgdm ? hp.momentum : beta1_at(t, hp);
  const double bias1 = 1.0 - std::pow(hp.beta1, tt);
  const double bias2 = 1.0 - std::pow(hp.beta2, tt);

  const double gnorm_sq = static_cast<double>(squared_norm(grads));
  state.grad_bound = std::max(state.grad_bound, std::sqrt(gnorm_sq));

  BasicStepOutput<Scalar> out;
  out.new_params = params;
  StepRecord& rec = out.record;
  rec.t = t;
  rec.eta_t = eta_t;
  rec.p_now = power;
  rec.grad_norm_sq = gnorm_sq;
  rec.groups.resize(params.size());

  double lemma2_sq = 0.0;
  double m_norm_sq = 0.0;
  LemmaSlacks slacks;

  const Scalar b1 = static_cast<Scalar>(beta1t);
  const Scalar b2 = static_cast<Scalar>(hp.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Vector<Scalar>& theta = params[i].values;
    const Vector<Scalar>& g = grads[i];
    Vector<Scalar>& m = state.m[i];
    GroupRecord& gr = rec.groups[i];
    gr.cos_sim = static_cast<double>(cosine_similarity(theta, g));

    Vector<Scalar> direction;
    if (kind == OptimizerKind::kSgdm) {
      m = b1 * m + g;
      direction = m;
    } else {
      const Vector<Scalar> m_prev = m;
      Vector<Scalar>& v = state.v[i];
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
      state.max_v[i] = state.max_v[i].cwiseMax(v);
      state.max_grad_sq[i] = state.max_grad_sq[i].cwiseMax(g.cwiseAbs2());

      const Vector<Scalar> m_hat = m / static_cast<Scalar>(bias1);
      const Vector<Scalar> second = detail::uses_max_buffer(kind)
                                        ? state.max_v[i]
                                        : Vector<Scalar>(v / static_cast<Scalar>(bias2));
      direction = preconditioned_direction(m_hat, second, power, hp.epsilon, hp.eps_mode);

      const double r = check_lemma2(m, m_prev, g, beta1t);
      lemma2_sq += r * r;
      m_norm_sq += static_cast<double>(m.squaredNorm());
      slacks.merge(lemma_slacks(theta, m, m_prev, v, g, state.max_grad_sq[i],
                                state.grad_bound, power, hp.epsilon));
    }

    if (detail::uses_projection(kind) && hp.projection) {
      double scale = 1.0;
      if (kind == OptimizerKind::kPadamP && hp.trigger == TriggerMode::kLrScaled)
        scale = hp.trigger_lr == TriggerLr::kBase ? hp.lr : eta_t;
      const ProjectionDecision d = projection_condition(theta, g, hp.delta, scale);
      gr.projected = d.projected;
      if (d.projected) direction = project_tangent(theta, direction);
    }

    Vector<Scalar>& next = out.new_params[i].values;
    if (hp.weight_decay > 0 && !(gr.projected && hp.decay_skips_projected))
      next *= static_cast<Scalar>(1.0 - eta_t * hp.weight_decay);
    next -= static_cast<Scalar>(eta_t) * direction;

    if (!next.allFinite())
      throw Error("non-finite parameters in group '" + params[i].name + "' at step " +
                  std::to_string(t));
    gr.param_norm = static_cast<double>(next.norm());
    gr.effective_step_norm = static_cast<double>((next - theta).norm());
  }

  if (kind != OptimizerKind::kSgdm) {
    rec.lemma2_residual = std::sqrt(lemma2_sq) / (1.0 + std::sqrt(m_norm_sq));
    rec.lemma3_margin = slacks.lemma3;
    rec.lemma4_margin = slacks.lemma4;
    rec.lemma5_margin = slacks.lemma5;
  }
  return out;
}

namespace detail {

template <typename Scalar>
BasicStepOutput<Scalar> checked_step(OptimizerKind expected, BasicOptimizerState<Scalar>& state,
                                     const BasicParamSet<Scalar>& params,
                                     const BasicGradientSet<Scalar>& grads, double eta_t,
                                     double p_now) {
  if (state.kind != expected)
    throw Error(std::string("optimizer state was created for ") +
                std::string(to_string(state.kind)) + ", not " +
                std::string(to_string(expected)));
  return step(state, params, grads, eta_t, p_now);
}

}  // namespace detail

template <typename Scalar>
BasicStepOutput<Scalar> padamp_step(BasicOptimizerState<Scalar>& state,
                                    const BasicParamSet<Scalar>& params,
                                    const BasicGradientSet<Scalar>& grads, double eta_t,
                                    double p_now) {
  return detail::checked_step(OptimizerKind::kPadamP, state, params, grads, eta_t, p_now);
}

template <typename Scalar>
BasicStepOutput<Scalar> adamp_step(BasicOptimizerState<Scalar>& state,
                                   const BasicParamSet<Scalar>& params,
                                   const BasicGradientSet<Scalar>& grads, double eta_t) {
  return detail::checked_step(OptimizerKind::kAdamP, state, params, grads, eta_t, 0.5);
}

template <typename Scalar>
BasicStepOutput<Scalar> padam_step(BasicOptimizerState<Scalar>& state,
                                   const BasicParamSet<Scalar>& params,
                                   const BasicGradientSet<Scalar>& grads, double eta_t,
                                   double p_now) {
  return detail::checked_step(OptimizerKind::kPadam, state, params, grads, eta_t, p_now);
}

template <typename Scalar>
BasicStepOutput<Scalar> adam_step(BasicOptimizerState<Scalar>& state,
                                  const BasicParamSet<Scalar>& params,
                                  const BasicGradientSet<Scalar>& grads, double eta_t) {
  return detail::checked_step(OptimizerKind::kAdam, state, params, grads, eta_t, 0.5);
}

template <typename Scalar>
BasicStepOutput<Scalar> amsgrad_step(BasicOptimizerState<Scalar>& state,
                                     const BasicParamSet<Scalar>& params,
                                     const BasicGradientSet<Scalar>& grads, double eta_t) {
  return detail::checked_step(OptimizerKind::kAmsGrad, state, params, grads, eta_t, 0.5);
}

template <typename Scalar>
BasicStepOutput<Scalar> sgdm_step(BasicOptimizerState<Scalar>& state,
                                  const BasicParamSet<Scalar>& params,
                                  const BasicGradientSet<Scalar>& grads, double eta_t) {
  return detail::checked_step(OptimizerKind::kSgdm, state, params, grads, eta_t, 0.5);
}

}  // namespace padamp
