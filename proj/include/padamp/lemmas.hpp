#pragma once

// Pointwise checks of the moment bounds used by the PadamP convergence
// analysis. Every slack is "bound - value" (>= 0 when the bound holds) with a
// small relative allowance for floating-point rounding of the recursions.

#include "padamp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace padamp {

inline constexpr double kRoundingAllowance = 8 * std::numeric_limits<double>::epsilon();

/// || -m_t - ( -g_t + b/(1-b) (m_t - m_prev) ) ||, which vanishes whenever
/// m_t = b m_prev + (1 - b) g_t.
template <typename DerivedM, typename DerivedP, typename DerivedG>
double check_lemma2(const Eigen::MatrixBase<DerivedM>& m_t,
                    const Eigen::MatrixBase<DerivedP>& m_prev,
                    const Eigen::MatrixBase<DerivedG>& g_t, double beta1t) {
  if (!(beta1t >= 0.0 && beta1t < 1.0))
    throw Error("check_lemma2: beta1t must lie in [0, 1)");
  using Scalar = typename DerivedM::Scalar;
  const Scalar ratio = static_cast<Scalar>(beta1t / (1.0 - beta1t));
  const auto rhs = (-g_t + ratio * (m_t - m_prev)).eval();
  return static_cast<double>((-m_t - rhs).norm());
}

struct LemmaSlacks {
  double lemma3 = std::numeric_limits<double>::infinity();
  double lemma4 = std::numeric_limits<double>::infinity();
  double lemma5 = std::numeric_limits<double>::infinity();

  void merge(const LemmaSlacks& o) {
    lemma3 = std::min(lemma3, o.lemma3);
    lemma4 = std::min(lemma4, o.lemma4);
    lemma5 = std::min(lemma5, o.lemma5);
  }
};

/// Slacks for one parameter group at one step, using the uncorrected buffers.
///   lemma3: 0 <= v_i <= max_s g_{s,i}^2
///   lemma4: 1/(C1^2+eps)^p <= 1/(v_i+eps)^p <= 1/eps^p
///   lemma5: |<theta_hat, m B>| <= C1/eps^p, ||g B||^2 <= C1^2/eps^{2p},
///           <g, (m - m_prev) B> <= 2 C1^2/eps^p
template <typename Scalar>
LemmaSlacks lemma_slacks(const Vector<Scalar>& theta, const Vector<Scalar>& m_t,
                         const Vector<Scalar>& m_prev, const Vector<Scalar>& v_t,
                         const Vector<Scalar>& g_t, const Vector<Scalar>& max_grad_sq,
                         double grad_bound, double p, double eps) {
  constexpr double a = kRoundingAllowance;
  LemmaSlacks s;
  const Eigen::ArrayXd v = v_t.template cast<double>().array();
  const Eigen::ArrayXd gmax = max_grad_sq.template cast<double>().array();
  s.lemma3 = std::min(v.minCoeff(), (gmax * (1 + a) - v).minCoeff());

  const Eigen::ArrayXd b = (v + eps).pow(-p);
  const double lower = std::pow(grad_bound * grad_bound + eps, -p);
  const double upper = std::pow(eps, -p);
  s.lemma4 = std::min((b - lower * (1 - a)).minCoeff(), (upper * (1 + a) - b).minCoeff());

  const Eigen::ArrayXd m = m_t.template cast<double>().array();
  const Eigen::ArrayXd mp = m_prev.template cast<double>().array();
  const Eigen::ArrayXd g = g_t.template cast<double>().array();
  const double c1 = grad_bound;
  double radial_slack = std::numeric_limits<double>::infinity();
  const double theta_norm = static_cast<double>(theta.norm());
  if (theta_norm > 0) {
    const Eigen::ArrayXd unit = theta.template cast<double>().array() / theta_norm;
    radial_slack = c1 * upper * (1 + a) - std::abs((unit * m * b).sum());
  }
  const double scaled_grad_slack = c1 * c1 * upper * upper * (1 + a) - (g * b).square().sum();
  const double increment_slack = 2 * c1 * c1 * upper * (1 + a) - (g * (m - mp) * b).sum();
  s.lemma5 = std::min({radial_slack, scaled_grad_slack, increment_slack});
  return s;
}

}  // namespace padamp
