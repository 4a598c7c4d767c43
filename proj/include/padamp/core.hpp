#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace padamp {

/// Raised for every violated precondition: bad hyperparameters, shape
/// mismatches, malformed configs, non-finite numbers.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;

/// One named weight tensor, flattened. Projection decisions are made per group.
template <typename Scalar>
struct BasicParamGroup {
  std::string name;
  Vector<Scalar> values;

  Eigen::Index dim() const { return values.size(); }
};

template <typename Scalar>
using BasicParamSet = std::vector<BasicParamGroup<Scalar>>;

/// One gradient vector per parameter group, in group order.
template <typename Scalar>
using BasicGradientSet = std::vector<Vector<Scalar>>;

using ParamGroup = BasicParamGroup<double>;
using ParamSet = BasicParamSet<double>;
using GradientSet = BasicGradientSet<double>;

enum class Beta1Mode { kConstant, kGeometric };

// (v + eps)^p versus v^p + eps.
enum class EpsMode { kInsidePower, kOutsidePower };

// PadamP scales the projection threshold by the learning rate; AdamP does not.
enum class TriggerMode { kLrScaled, kFixed };

// Which learning rate enters the lr-scaled threshold.
enum class TriggerLr { kScheduled, kBase };

struct HyperParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double beta1_decay = 1.0;  // lambda in beta1_t = beta1 * lambda^(t-1)
  double delta = 0.1;
  double epsilon = 1e-8;
  double p = 0.25;
  double weight_decay = 0.0;
  double momentum = 0.9;  // SGDM only
  Beta1Mode beta1_mode = Beta1Mode::kConstant;
  EpsMode eps_mode = EpsMode::kInsidePower;
  TriggerMode trigger = TriggerMode::kLrScaled;
  TriggerLr trigger_lr = TriggerLr::kScheduled;
  bool projection = true;
  bool decay_skips_projected = true;
};

/// Throws Error naming the first offending field.
void validate(const HyperParams& hp);

/// Checks 0 < p <= 1/2.
void validate_power(double p);

/// First-moment coefficient applied at step t (t >= 1).
inline double beta1_at(std::int64_t t, const HyperParams& hp) {
  if (t < 1) throw Error("beta1_at: step index must be >= 1");
  if (hp.beta1_mode == Beta1Mode::kConstant) return hp.beta1;
  return hp.beta1 * std::pow(hp.beta1_decay, static_cast<double>(t - 1));
}

/// Per-step telemetry for one parameter group.
struct GroupRecord {
  double param_norm = 0.0;
  double cos_sim = 0.0;
  bool projected = false;
  double effective_step_norm = 0.0;
};

/// Per-step telemetry. Lemma fields are min-slack (>= 0 means the bound holds)
/// except lemma2_residual, which is ||residual|| / (1 + ||m_t||).
struct StepRecord {
  std::int64_t t = 0;
  std::int64_t epoch = 0;
  double eta_t = 0.0;
  double p_now = 0.0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  std::vector<GroupRecord> groups;
  double lemma2_residual = 0.0;
  double lemma3_margin = 0.0;
  double lemma4_margin = 0.0;
  double lemma5_margin = 0.0;
};

using Rng = std::mt19937_64;

/// The only RNG constructor used by the library; a seed fixes the stream.
inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// Derives an independent child seed (e.g. for evaluation batches).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

template <typename Scalar>
bool all_finite(const BasicParamSet<Scalar>& params) {
  for (const auto& g : params)
    if (!g.values.allFinite()) return false;
  return true;
}

template <typename Scalar>
Scalar squared_norm(const BasicGradientSet<Scalar>& grads) {
  Scalar s = 0;
  for (const auto& g : grads) s += g.squaredNorm();
  return s;
}

/// Throws unless `grads` matches `params` group-for-group.
template <typename Scalar>
void check_shapes(const BasicParamSet<Scalar>& params,
                  const BasicGradientSet<Scalar>& grads) {
  if (params.size() != grads.size())
    throw Error("shape mismatch: " + std::to_string(params.size()) +
                " parameter groups but " + std::to_string(grads.size()) +
                " gradient vectors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].values.size() != grads[i].size())
      throw Error("shape mismatch in group '" + params[i].name + "': dim " +
                  std::to_string(params[i].values.size()) + " vs gradient dim " +
                  std::to_string(grads[i].size()));
  }
}

}  // namespace padamp
