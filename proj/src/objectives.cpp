#include "padamp/objectives.hpp"

#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace padamp {

// ---------------------------------------------------------------- datasets

using text::format_double;
using text::parse_double;
using text::split;

void write_dataset_csv(const SyntheticDataset& data, std::ostream& os) {
  for (Eigen::Index j = 0; j < data.dim(); ++j) os << 'x' << j << ',';
  os << "label\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) os << format_double(data.features(i, j)) << ',';
    os << data.labels(i) << '\n';
  }
}

void write_dataset_csv(const SyntheticDataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_dataset_csv(data, os);
}

SyntheticDataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("dataset csv: missing header");
  const auto header = split(line, ',');
  if (header.size() < 2 || header.back() != "label")
    throw Error("dataset csv: header must list feature columns then 'label'");
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != d + 1)
      throw Error("dataset csv: row " + std::to_string(rows.size() + 1) + " has " +
                  std::to_string(cells.size()) + " cells, expected " + std::to_string(d + 1));
    std::vector<double> row(d);
    for (Eigen::Index j = 0; j < d; ++j) row[j] = parse_double(cells[j]);
    rows.push_back(std::move(row));
    labels.push_back(static_cast<int>(parse_double(cells.back())));
  }
  SyntheticDataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  data.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = rows[i][j];
    data.labels(i) = labels[i];
  }
  return data;
}

SyntheticDataset read_dataset_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open dataset '" + path + "'");
  return read_dataset_csv(is);
}

SyntheticDataset make_blobs(Eigen::Index n, Eigen::Index d, Eigen::Index classes,
                            double separation, std::uint64_t seed) {
  if (n < 2 || d < 1 || classes < 2) throw Error("make_blobs: need n >= 2, d >= 1, classes >= 2");
  Rng rng = seeded_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd centers(classes, d);
  if (classes == 2) {
    const VectorXd e = VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    centers.row(0) = -0.5 * separation * e.transpose();
    centers.row(1) = 0.5 * separation * e.transpose();
  } else {
    for (Eigen::Index k = 0; k < classes; ++k) {
      VectorXd dir(d);
      for (auto& x : dir) x = normal(rng);
      centers.row(k) = 0.5 * separation * dir.normalized().transpose();
    }
  }
  SyntheticDataset data;
  data.features.resize(n, d);
  data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = i % classes;
    data.labels(i) = static_cast<int>(k);
    for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = centers(k, j) + normal(rng);
  }
  return data;
}

BatchSampler::BatchSampler(Eigen::Index n, Eigen::Index batch_size)
    : batch_size_(batch_size), order_(static_cast<std::size_t>(n)), cursor_(n) {
  if (n < 1 || batch_size < 1) throw Error("BatchSampler: n and batch_size must be >= 1");
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
}

Eigen::Index BatchSampler::batches_per_epoch() const {
  const auto n = static_cast<Eigen::Index>(order_.size());
  return (n + batch_size_ - 1) / batch_size_;
}

std::vector<Eigen::Index> BatchSampler::next(Rng& rng) {
  const auto n = static_cast<Eigen::Index>(order_.size());
  if (cursor_ >= n) {
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
  }
  const auto end = std::min(n, cursor_ + batch_size_);
  std::vector<Eigen::Index> batch(order_.begin() + cursor_, order_.begin() + end);
  cursor_ = end;
  return batch;
}

std::vector<Eigen::Index> sample_batch(Eigen::Index n, Eigen::Index batch_size, Rng& rng) {
  if (batch_size > n) throw Error("sample_batch: batch larger than dataset");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  // partial Fisher-Yates
  for (Eigen::Index i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(static_cast<std::size_t>(batch_size));
  return all;
}

// --------------------------------------------------------------- objective

void Objective::check_params(const ParamSet& params) const {
  const auto spec = layout();
  if (params.size() != spec.size())
    throw Error(name() + ": expected " + std::to_string(spec.size()) + " parameter groups, got " +
                std::to_string(params.size()));
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (params[i].dim() != spec[i].dim)
      throw Error(name() + ": group '" + spec[i].name + "' expects dim " +
                  std::to_string(spec[i].dim) + ", got " + std::to_string(params[i].dim()));
}

ParamSet Objective::zero_params() const {
  ParamSet out;
  for (const auto& g : layout()) out.push_back({g.name, VectorXd::Zero(g.dim)});
  return out;
}

// ---------------------------------------------------------------- quadratic

Quadratic::Quadratic(VectorXd diagonal, VectorXd b, double init_scale)
    : diagonal_(std::move(diagonal)), b_(std::move(b)), init_scale_(init_scale) {
  if (diagonal_.size() < 1 || diagonal_.size() != b_.size())
    throw Error("quadratic: diagonal and b must be non-empty and equally sized");
  if ((diagonal_.array() <= 0).any() || !diagonal_.allFinite())
    throw Error("quadratic: diagonal entries must be positive");
}

Quadratic Quadratic::with_condition(Eigen::Index dim, double condition,
                                    const VectorXd& minimizer, double init_scale) {
  if (dim < 1 || !(condition >= 1.0)) throw Error("quadratic: need dim >= 1 and condition >= 1");
  if (minimizer.size() != dim) throw Error("quadratic: minimizer dimension mismatch");
  VectorXd diag(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    diag(i) = dim == 1 ? 1.0 : std::pow(condition, static_cast<double>(i) / (dim - 1));
  VectorXd b = diag.cwiseProduct(minimizer);
  return Quadratic(std::move(diag), std::move(b), init_scale);
}

std::vector<GroupSpec> Quadratic::layout() const { return {{"x", diagonal_.size(), false}}; }

Evaluation Quadratic::evaluate(const ParamSet& params, Batch) const {
  check_params(params);
  const VectorXd& x = params[0].values;
  Evaluation e;
  e.loss = 0.5 * x.dot(diagonal_.cwiseProduct(x)) - b_.dot(x);
  e.grad = {diagonal_.cwiseProduct(x) - b_};
  return e;
}

ParamSet Quadratic::initial_params(Rng& rng) const {
  VectorXd x = VectorXd::Zero(diagonal_.size());
  if (init_scale_ > 0) {
    std::normal_distribution<double> normal(0.0, init_scale_);
    for (auto& v : x) v = normal(rng);
  }
  return {{"x", x}};
}

VectorXd Quadratic::minimizer() const { return b_.cwiseQuotient(diagonal_); }

// --------------------------------------------------------------- rosenbrock

std::vector<GroupSpec> Rosenbrock::layout() const { return {{"xy", 2, false}}; }

Evaluation Rosenbrock::evaluate(const ParamSet& params, Batch) const {
  check_params(params);
  const double x = params[0].values(0);
  const double y = params[0].values(1);
  const double r = y - x * x;
  Evaluation e;
  e.loss = (1 - x) * (1 - x) + 100 * r * r;
  VectorXd g(2);
  g << -2 * (1 - x) - 400 * x * r, 200 * r;
  e.grad = {g};
  return e;
}

ParamSet Rosenbrock::initial_params(Rng&) const {
  VectorXd x(2);
  x << -1.2, 1.0;
  return {{"xy", x}};
}

// ----------------------------------------------------------- scale invariant

ScaleInvariantObjective::ScaleInvariantObjective(Eigen::Index dim)
    : target_(dim), curvature_(dim) {
  if (dim < 2) throw Error("scale_invariant: dim must be >= 2");
  for (Eigen::Index i = 0; i < dim; ++i) {
    target_(i) = 1.5 + std::cos(static_cast<double>(i));
    curvature_(i) = 1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(dim - 1);
  }
  target_.normalize();
}

std::vector<GroupSpec> ScaleInvariantObjective::layout() const {
  return {{"w", target_.size(), true}};
}

Evaluation ScaleInvariantObjective::evaluate(const ParamSet& params, Batch) const {
  check_params(params);
  const VectorXd& w = params[0].values;
  const double r = w.norm();
  if (r == 0) throw Error("scale_invariant: objective undefined at the zero vector");
  const VectorXd u = w / r;
  Evaluation e;
  e.loss = -target_.dot(u) + 0.5 * u.dot(curvature_.cwiseProduct(u));
  const VectorXd dh = curvature_.cwiseProduct(u) - target_;
  e.grad = {(dh - u.dot(dh) * u) / r};
  return e;
}

ParamSet ScaleInvariantObjective::initial_params(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd w(target_.size());
  for (auto& v : w) v = normal(rng);
  return {{"w", w}};
}

// ------------------------------------------------------ logistic regression

namespace {

SyntheticDataset signed_labels(SyntheticDataset data) {
  for (auto& y : data.labels) y = y == 0 ? -1 : 1;
  return data;
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

std::vector<Eigen::Index> all_indices(Eigen::Index n) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

}  // namespace

LogisticRegression::LogisticRegression(const LogisticOptions& opts, std::uint64_t seed)
    : data_(signed_labels(make_blobs(opts.n, opts.d, 2, opts.separation, seed))) {}

LogisticRegression::LogisticRegression(SyntheticDataset data) : data_(std::move(data)) {
  if (data_.size() < 2) throw Error("logistic: need at least 2 samples");
  for (auto y : data_.labels)
    if (y != 1 && y != -1) throw Error("logistic: labels must be +1 or -1");
}

std::vector<GroupSpec> LogisticRegression::layout() const { return {{"w", data_.dim(), false}}; }

Evaluation LogisticRegression::evaluate(const ParamSet& params, Batch batch) const {
  check_params(params);
  const VectorXd& w = params[0].values;
  std::vector<Eigen::Index> full;
  if (batch.empty()) {
    full = all_indices(data_.size());
    batch = full;
  }
  Evaluation e;
  VectorXd g = VectorXd::Zero(w.size());
  double loss = 0;
  for (auto i : batch) {
    const double y = data_.labels(i);
    const double z = y * data_.features.row(i).dot(w);
    loss += softplus(-z);
    // d/dw log(1 + exp(-z)) = -y x sigmoid(-z)
    g -= (y / (1.0 + std::exp(z))) * data_.features.row(i).transpose();
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  e.loss = loss * inv;
  e.grad = {g * inv};
  return e;
}

ParamSet LogisticRegression::initial_params(Rng&) const {
  return {{"w", VectorXd::Zero(data_.dim())}};
}

std::optional<double> LogisticRegression::accuracy(const ParamSet& params) const {
  check_params(params);
  const VectorXd scores = data_.features * params[0].values;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < data_.size(); ++i)
    if ((scores(i) >= 0 ? 1 : -1) == data_.labels(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data_.size());
}

// ------------------------------------------------------------------ tiny mlp

TinyMlp::TinyMlp(const MlpOptions& opts, std::uint64_t seed)
    : TinyMlp(opts, make_blobs(opts.n, opts.d_in, opts.classes, opts.separation, seed)) {}

TinyMlp::TinyMlp(const MlpOptions& opts, SyntheticDataset data)
    : opts_(opts), data_(std::move(data)) {
  if (opts_.d_in < 2 || opts_.hidden < 2 || opts_.classes < 2)
    throw Error("mlp: d_in, hidden and classes must all be >= 2");
  if (data_.dim() != opts_.d_in) throw Error("mlp: dataset dimension does not match d_in");
  if (data_.size() < 2) throw Error("mlp: need at least 2 samples");
  for (auto y : data_.labels)
    if (y < 0 || y >= opts_.classes) throw Error("mlp: label out of range");
  opts_.n = data_.size();
}

std::vector<GroupSpec> TinyMlp::layout() const {
  return {{"W1", opts_.hidden * opts_.d_in, true}, {"W2", opts_.classes * opts_.hidden, false}};
}

ParamSet TinyMlp::initial_params(Rng& rng) const {
  std::normal_distribution<double> w1(0.0, 1.0 / std::sqrt(static_cast<double>(opts_.d_in)));
  std::normal_distribution<double> w2(0.0, 1.0 / std::sqrt(static_cast<double>(opts_.hidden)));
  VectorXd a(opts_.hidden * opts_.d_in), b(opts_.classes * opts_.hidden);
  for (auto& v : a) v = w1(rng);
  for (auto& v : b) v = w2(rng);
  return {{"W1", a}, {"W2", b}};
}

Evaluation TinyMlp::evaluate(const ParamSet& params, Batch batch) const {
  return forward_backward(params, batch, true);
}

double TinyMlp::loss(const ParamSet& params, Batch batch) const {
  return forward_backward(params, batch, false).loss;
}

Evaluation TinyMlp::forward_backward(const ParamSet& params, Batch batch, bool want_grad) const {
  check_params(params);
  const Eigen::Index h = opts_.hidden, c = opts_.classes, d = opts_.d_in;
  std::vector<Eigen::Index> full;
  if (batch.empty()) {
    full = all_indices(data_.size());
    batch = full;
  }
  const auto bsz = static_cast<Eigen::Index>(batch.size());
  if (bsz < 2) throw Error("mlp: batch normalization needs a batch of at least 2 samples");

  const Eigen::Map<const Eigen::MatrixXd> w1(params[0].values.data(), h, d);
  const Eigen::Map<const Eigen::MatrixXd> w2(params[1].values.data(), c, h);

  Eigen::MatrixXd x(bsz, d);
  for (Eigen::Index r = 0; r < bsz; ++r) x.row(r) = data_.features.row(batch[r]);

  const Eigen::MatrixXd z = x * w1.transpose();  // bsz x h
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().mean();
  // the floor replaces (rather than adds to) small variances so that scaling a
  // row of W1 leaves the output exactly unchanged
  const Eigen::RowVectorXd scale = var.cwiseMax(opts_.var_floor).cwiseSqrt();
  const Eigen::MatrixXd zn = centered.array().rowwise() / scale.array();
  const Eigen::MatrixXd a = zn.cwiseMax(0.0);
  const Eigen::MatrixXd logits = a * w2.transpose();  // bsz x c

  Eigen::MatrixXd probs(bsz, c);
  double loss = 0;
  for (Eigen::Index r = 0; r < bsz; ++r) {
    const double mx = logits.row(r).maxCoeff();
    const Eigen::RowVectorXd ex = (logits.row(r).array() - mx).exp();
    const double s = ex.sum();
    probs.row(r) = ex / s;
    loss += std::log(s) + mx - logits(r, data_.labels(batch[r]));
  }
  const double inv = 1.0 / static_cast<double>(bsz);
  Evaluation e;
  e.loss = loss * inv;
  if (!want_grad) return e;

  Eigen::MatrixXd dlogits = probs;
  for (Eigen::Index r = 0; r < bsz; ++r) dlogits(r, data_.labels(batch[r])) -= 1.0;
  dlogits *= inv;

  const Eigen::MatrixXd dw2 = dlogits.transpose() * a;  // c x h
  const Eigen::MatrixXd da = dlogits * w2;                // bsz x h
  const Eigen::MatrixXd dzn = (zn.array() > 0).select(da, 0.0);

  Eigen::MatrixXd dz(bsz, h);
  for (Eigen::Index j = 0; j < h; ++j) {
    const double mean_dzn = dzn.col(j).mean();
    if (var(j) > opts_.var_floor) {
      const double mean_dzn_zn = dzn.col(j).dot(zn.col(j)) * inv;
      dz.col(j) = (dzn.col(j).array() - mean_dzn - zn.col(j).array() * mean_dzn_zn) / scale(j);
    } else {
      dz.col(j) = (dzn.col(j).array() - mean_dzn) / scale(j);
    }
  }
  const Eigen::MatrixXd dw1 = dz.transpose() * x;  // h x d

  e.grad = {Eigen::Map<const VectorXd>(dw1.data(), h * d),
            Eigen::Map<const VectorXd>(dw2.data(), c * h)};
  return e;
}

std::optional<double> TinyMlp::accuracy(const ParamSet& params) const {
  check_params(params);
  const Eigen::Index h = opts_.hidden, c = opts_.classes, d = opts_.d_in;
  const Eigen::Map<const Eigen::MatrixXd> w1(params[0].values.data(), h, d);
  const Eigen::Map<const Eigen::MatrixXd> w2(params[1].values.data(), c, h);
  const Eigen::MatrixXd z = data_.features * w1.transpose();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - mean;
  const Eigen::RowVectorXd scale =
      centered.array().square().colwise().mean().matrix().cwiseMax(opts_.var_floor).cwiseSqrt();
  const Eigen::MatrixXd logits =
      (centered.array().rowwise() / scale.array()).matrix().cwiseMax(0.0) * w2.transpose();
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < data_.size(); ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    if (arg == data_.labels(r)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data_.size());
}

// ------------------------------------------------------ finite differences

GradientSet finite_difference_grad(const Objective& obj, const ParamSet& params, Batch batch,
                                   double h) {
  if (!(h > 0)) throw Error("finite_difference_grad: step h must be positive");
  ParamSet probe = params;
  GradientSet out;
  for (std::size_t gi = 0; gi < params.size(); ++gi) {
    VectorXd g(params[gi].dim());
    for (Eigen::Index i = 0; i < params[gi].dim(); ++i) {
      const double orig = probe[gi].values(i);
      probe[gi].values(i) = orig + h;
      const double fp = obj.loss(probe, batch);
      probe[gi].values(i) = orig - h;
      const double fm = obj.loss(probe, batch);
      probe[gi].values(i) = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw Error("finite_difference_grad: non-finite objective value in group '" +
                    params[gi].name + "'");
      g(i) = (fp - fm) / (2 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double relative_error(const GradientSet& a, const GradientSet& b, double floor) {
  if (a.size() != b.size()) throw Error("relative_error: group count mismatch");
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw Error("relative_error: dimension mismatch");
    diff += (a[i] - b[i]).squaredNorm();
    na += a[i].squaredNorm();
    nb += b[i].squaredNorm();
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace padamp
