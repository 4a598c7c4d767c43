#pragma once

#include "padamp/core.hpp"

#include <cmath>

namespace padamp {

/// |a.b| / (|a| |b|), or 0 when either vector is zero.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw Error("cosine_similarity: dimension mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  const Scalar c = std::abs(a.dot(b)) / (na * nb);
  return c > Scalar(1) ? Scalar(1) : c;
}

/// Removes the component of `x` along `theta`: x - <theta_hat, x> theta_hat.
template <typename DerivedT, typename DerivedX>
typename DerivedX::PlainObject project_tangent(const Eigen::MatrixBase<DerivedT>& theta,
                                               const Eigen::MatrixBase<DerivedX>& x) {
  if (theta.size() != x.size()) throw Error("project_tangent: dimension mismatch");
  const auto norm = theta.norm();
  if (norm == 0) throw Error("cannot project onto tangent space of zero vector");
  const typename DerivedT::PlainObject unit = theta / norm;
  return x - unit.dot(x) * unit;
}

struct ProjectionDecision {
  double trigger_value = 0.0;  // cos(theta, grad)
  double threshold = 0.0;
  bool projected = false;
};

/// Threshold is delta * scale / sqrt(dim); `scale` is eta_t for PadamP and
/// 1 for AdamP. Equality does not trigger.
template <typename DerivedT, typename DerivedG>
ProjectionDecision projection_condition(const Eigen::MatrixBase<DerivedT>& theta,
                                        const Eigen::MatrixBase<DerivedG>& grad,
                                        double delta, double scale) {
  if (theta.size() != grad.size() || theta.size() < 1)
    throw Error("projection_condition: theta and grad must share a dimension >= 1");
  ProjectionDecision d;
  d.threshold = delta * scale / std::sqrt(static_cast<double>(theta.size()));
  if (theta.squaredNorm() == 0) return d;
  d.trigger_value = static_cast<double>(cosine_similarity(theta, grad));
  d.projected = d.trigger_value < d.threshold;
  return d;
}

}  // namespace padamp
