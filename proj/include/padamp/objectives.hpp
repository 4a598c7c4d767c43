#pragma once

#include "padamp/core.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace padamp {

struct GroupSpec {
  std::string name;
  Eigen::Index dim = 0;
  bool scale_invariant = false;
};

/// Row-per-sample features with integer labels (+1/-1 for binary, 0..K-1 for
/// multiclass).
struct SyntheticDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// CSV with feature columns x0..x{d-1} followed by `label`.
void write_dataset_csv(const SyntheticDataset& data, std::ostream& os);
void write_dataset_csv(const SyntheticDataset& data, const std::string& path);
SyntheticDataset read_dataset_csv(std::istream& is);
SyntheticDataset read_dataset_csv(const std::string& path);

/// Sample indices; an empty batch means the whole dataset.
using Batch = std::span<const Eigen::Index>;

/// Shuffles once per epoch and hands out consecutive slices, so every sample
/// is used exactly once per epoch. The final batch may be short.
class BatchSampler {
 public:
  BatchSampler(Eigen::Index n, Eigen::Index batch_size);

  std::vector<Eigen::Index> next(Rng& rng);
  Eigen::Index batches_per_epoch() const;

 private:
  Eigen::Index batch_size_;
  std::vector<Eigen::Index> order_;
  Eigen::Index cursor_;
};

/// Uniform sample of `batch_size` distinct indices.
std::vector<Eigen::Index> sample_batch(Eigen::Index n, Eigen::Index batch_size, Rng& rng);

struct Evaluation {
  double loss = 0.0;
  GradientSet grad;
};

class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual std::vector<GroupSpec> layout() const = 0;
  virtual Evaluation evaluate(const ParamSet& params, Batch batch = {}) const = 0;
  virtual double loss(const ParamSet& params, Batch batch = {}) const {
    return evaluate(params, batch).loss;
  }
  virtual ParamSet initial_params(Rng& rng) const = 0;

  virtual const SyntheticDataset* dataset() const { return nullptr; }
  virtual std::optional<double> accuracy(const ParamSet&) const { return std::nullopt; }

  GradientSet grad(const ParamSet& params, Batch batch = {}) const {
    return evaluate(params, batch).grad;
  }
  GradientSet full_grad(const ParamSet& params) const { return evaluate(params).grad; }

  /// Throws unless `params` matches layout().
  void check_params(const ParamSet& params) const;
  ParamSet zero_params() const;
};

/// f = 1/2 x'Ax - b'x with A diagonal.
class Quadratic final : public Objective {
 public:
  Quadratic(VectorXd diagonal, VectorXd b, double init_scale = 1.0);

  /// Diagonal log-spaced from 1 to `condition`, minimizer fixed to `minimizer`.
  static Quadratic with_condition(Eigen::Index dim, double condition, const VectorXd& minimizer,
                                  double init_scale = 1.0);

  std::string name() const override { return "quadratic"; }
  std::vector<GroupSpec> layout() const override;
  Evaluation evaluate(const ParamSet& params, Batch batch = {}) const override;
  ParamSet initial_params(Rng& rng) const override;

  VectorXd minimizer() const;
  double smoothness() const { return diagonal_.maxCoeff(); }

 private:
  VectorXd diagonal_;
  VectorXd b_;
  double init_scale_;
};

/// (1 - x)^2 + 100 (y - x^2)^2.
class Rosenbrock final : public Objective {
 public:
  std::string name() const override { return "rosenbrock"; }
  std::vector<GroupSpec> layout() const override;
  Evaluation evaluate(const ParamSet& params, Batch batch = {}) const override;
  ParamSet initial_params(Rng& rng) const override;
};

/// f(w) = h(w / |w|) with h(u) = -<a, u> + 1/2 sum_i d_i u_i^2, so f(cw) = f(w)
/// for every c > 0 and <w, grad f(w)> = 0.
class ScaleInvariantObjective final : public Objective {
 public:
  explicit ScaleInvariantObjective(Eigen::Index dim);

  std::string name() const override { return "scale_invariant"; }
  std::vector<GroupSpec> layout() const override;
  Evaluation evaluate(const ParamSet& params, Batch batch = {}) const override;
  ParamSet initial_params(Rng& rng) const override;

 private:
  VectorXd target_;
  VectorXd curvature_;
};

struct LogisticOptions {
  Eigen::Index d = 10;
  Eigen::Index n = 512;
  double separation = 4.0;  // distance between blob means, in noise std units
};

/// Mean log(1 + exp(-y w'x)) over two Gaussian blobs labelled +-1.
class LogisticRegression final : public Objective {
 public:
  LogisticRegression(const LogisticOptions& opts, std::uint64_t seed);
  explicit LogisticRegression(SyntheticDataset data);

  std::string name() const override { return "logistic"; }
  std::vector<GroupSpec> layout() const override;
  Evaluation evaluate(const ParamSet& params, Batch batch = {}) const override;
  ParamSet initial_params(Rng& rng) const override;
  const SyntheticDataset* dataset() const override { return &data_; }
  std::optional<double> accuracy(const ParamSet& params) const override;

 private:
  SyntheticDataset data_;
};

struct MlpOptions {
  Eigen::Index d_in = 10;
  Eigen::Index hidden = 16;
  Eigen::Index classes = 3;
  Eigen::Index n = 512;
  double separation = 4.0;
  double var_floor = 1e-5;
};

/// x -> W1 x -> batch normalization (no affine) -> ReLU -> W2 -> softmax
/// cross-entropy. Rows of W1 feed the normalization and are scale-invariant.
/// Batch statistics come from the batch itself, so batches need >= 2 samples.
class TinyMlp final : public Objective {
 public:
  TinyMlp(const MlpOptions& opts, std::uint64_t seed);
  TinyMlp(const MlpOptions& opts, SyntheticDataset data);

  std::string name() const override { return "mlp"; }
  std::vector<GroupSpec> layout() const override;
  Evaluation evaluate(const ParamSet& params, Batch batch = {}) const override;
  double loss(const ParamSet& params, Batch batch = {}) const override;
  ParamSet initial_params(Rng& rng) const override;
  const SyntheticDataset* dataset() const override { return &data_; }
  std::optional<double> accuracy(const ParamSet& params) const override;

  const MlpOptions& options() const { return opts_; }

 private:
  Evaluation forward_backward(const ParamSet& params, Batch batch, bool want_grad) const;

  MlpOptions opts_;
  SyntheticDataset data_;
};

SyntheticDataset make_blobs(Eigen::Index n, Eigen::Index d, Eigen::Index classes,
                            double separation, std::uint64_t seed);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h over every coordinate.
GradientSet finite_difference_grad(const Objective& obj, const ParamSet& params,
                                   Batch batch = {}, double h = 1e-5);

/// |a - b| / max(|a|, |b|, floor) over the concatenated gradient vectors.
double relative_error(const GradientSet& a, const GradientSet& b, double floor = 1e-12);

}  // namespace padamp
