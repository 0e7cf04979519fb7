#include <algorithm>
#include <cmath>

#include "mgnn/neural.hpp"

namespace mgnn {

std::string to_string(LossKind k) { return k == LossKind::l2 ? "l2" : "cross_entropy"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "l2") return LossKind::l2;
  if (s == "cross_entropy" || s == "ce") return LossKind::cross_entropy;
  throw InvalidInput("unknown loss '" + s + "'");
}

LossValue l2_loss(const MatrixD& pred, const MatrixD& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidInput("l2 loss: prediction and target shapes differ");
  LossValue v;
  const MatrixD r = pred - target;
  v.value = r.norm();
  v.grad = v.value > 0.0 ? MatrixD(r / v.value) : MatrixD::Zero(r.rows(), r.cols());
  return v;
}

LossValue cross_entropy_loss(const MatrixD& logits, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != logits.rows())
    throw InvalidInput("cross entropy: one label per row required");
  const Index c = logits.cols();
  LossValue v;
  v.grad.resize(logits.rows(), c);
  const double inv_rows = 1.0 / static_cast<double>(std::max<Index>(1, logits.rows()));
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw InvalidInput("cross entropy: label " + std::to_string(y) + " outside [0, C)");
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double z = e.sum();
    total += std::log(z) + mx - logits(i, y);
    v.grad.row(i) = e / z * inv_rows;
    v.grad(i, y) -= inv_rows;
  }
  v.value = total * inv_rows;
  return v;
}

LossValue loss(const MatrixD& pred, const NodeTargets& targets, LossKind kind) {
  if (kind == LossKind::cross_entropy) {
    if (targets.labels.empty()) throw InvalidInput("cross entropy requires class labels");
    return cross_entropy_loss(pred, targets.labels);
  }
  if (targets.values.size() > 0) return l2_loss(pred, targets.values);
  if (static_cast<Index>(targets.labels.size()) != pred.rows())
    throw InvalidInput("l2 loss: one target per node required");
  MatrixD onehot = MatrixD::Zero(pred.rows(), pred.cols());
  for (Index i = 0; i < pred.rows(); ++i) {
    const int y = targets.labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= pred.cols()) throw InvalidInput("l2 loss: label outside [0, C)");
    onehot(i, y) = 1.0;
  }
  return l2_loss(pred, onehot);
}

LipschitzReport normalized_lipschitz_check(const std::function<double(double)>& f, Index samples,
                                           std::uint64_t seed) {
  if (samples < 2) throw InvalidInput("lipschitz check needs at least 2 samples");
  LipschitzReport r;
  r.samples = samples;
  r.zero_at_origin = f(0.0) == 0.0;
  Rng rng(seed);
  std::uniform_real_distribution<double> wide(-10.0, 10.0);
  std::uniform_real_distribution<double> narrow(-1e-2, 1e-2);
  for (Index i = 0; i < samples; ++i) {
    // Alternate wide pairs with pairs clustered around the origin.
    auto& dist = (i % 2 == 0) ? wide : narrow;
    const double x = dist(rng);
    double y = dist(rng);
    if (x == y) y = x + 1e-3;
    r.worst_ratio = std::max(r.worst_ratio, std::abs(f(x) - f(y)) / std::abs(x - y));
  }
  // Pairs against the origin itself.
  for (double x : {1e-3, -1e-3, 0.5, -0.5, 3.0, -3.0})
    r.worst_ratio = std::max(r.worst_ratio, std::abs(f(x) - f(0.0)) / std::abs(x));
  r.passes = r.zero_at_origin && r.worst_ratio <= 1.0;
  return r;
}

LipschitzReport normalized_lipschitz_check(Activation a, Index samples, std::uint64_t seed) {
  return normalized_lipschitz_check(as_function(a), samples, seed);
}

}  // namespace mgnn
