#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mgnn/neural.hpp"

namespace mgnn {

namespace {

/// Plain SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8) over a fixed list of
/// tensors.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  void step(const std::vector<MatrixD*>& params, const std::vector<const MatrixD*>& grads) {
    if (first_.empty() && kind_ == OptimizerKind::adam) {
      for (const auto* p : params) {
        first_.push_back(MatrixD::Zero(p->rows(), p->cols()));
        second_.push_back(MatrixD::Zero(p->rows(), p->cols()));
      }
    }
    ++t_;
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr_ * *grads[i];
      return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      first_[i] = b1 * first_[i] + (1.0 - b1) * *grads[i];
      second_[i] = b2 * second_[i] + (1.0 - b2) * grads[i]->cwiseProduct(*grads[i]);
      *params[i] -= (lr_ * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + eps)).matrix();
    }
  }

 private:
  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
  std::vector<MatrixD> first_, second_;
};

void check_finite_loss(double v, int epoch) {
  if (!std::isfinite(v))
    throw TrainingDiverged("training diverged: non-finite loss at epoch " + std::to_string(epoch), epoch);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidInput("training needs at least one epoch");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw InvalidInput("learning rate must be finite and nonnegative");
  if (batch_size < 1) throw InvalidInput("batch size must be positive");
}

Shift GraphInstance::shift(FilterKind kind) const {
  if (kind == FilterKind::heat) {
    if (!eig) throw InvalidInput("heat-kind network requires an eigensystem for every graph");
    return Shift(*eig);
  }
  return Shift(gso);
}

GraphInstance make_instance(const NeighborhoodSample& sample, GsoKind gso, FilterKind filter) {
  GraphInstance inst{shift_operator(sample.graph, gso), std::nullopt, sample.signal, NodeTargets{sample.labels, {}}};
  if (filter == FilterKind::heat) inst.eig = eig_sym(inst.gso);
  return inst;
}

double anchored_accuracy(const GnnParams& params, std::span<const GraphInstance> graphs) {
  if (graphs.empty()) return std::numeric_limits<double>::quiet_NaN();
  Index correct = 0;
  for (const auto& g : graphs) {
    if (g.targets.labels.empty()) return std::numeric_limits<double>::quiet_NaN();
    correct += predict_anchor(params, g.shift(params.filter), g.signal) == g.targets.labels.front();
  }
  return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

TrainResult train(GnnParams init, std::span<const GraphInstance> graphs, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (graphs.empty()) throw InvalidInput("training set is empty");

  TrainResult result{std::move(init), {}};
  GnnParams& params = result.params;
  std::vector<MatrixD*> tensors;
  for (auto& l : params.layers)
    for (auto& h : l.taps) tensors.push_back(&h);
  std::vector<MatrixD> accum;
  for (const auto* t : tensors) accum.push_back(MatrixD::Zero(t->rows(), t->cols()));
  std::vector<const MatrixD*> accum_ptrs;
  for (const auto& a : accum) accum_ptrs.push_back(&a);

  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool labeled = !graphs.front().targets.labels.empty();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    Index correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (auto& a : accum) a.setZero();
      for (std::size_t b = start; b < stop; ++b) {
        const GraphInstance& g = graphs[order[b]];
        const Shift shift = g.shift(params.filter);
        ForwardResult fwd;
        try {
          fwd = gnn_forward(g.signal, params, shift);
        } catch (const NumericOverflow& e) {
          throw TrainingDiverged(std::string("training diverged at epoch ") + std::to_string(epoch) + ": " + e.what(),
                                 epoch);
        }
        const LossValue lv = loss(fwd.output, g.targets, cfg.loss);
        check_finite_loss(lv.value, epoch);
        loss_sum += lv.value;
        if (labeled) correct += predict(fwd.output.topRows(1)).front() == g.targets.labels.front();
        const GnnGradients gr = gnn_backward(params, shift, fwd.cache, lv.grad, false);
        std::size_t t = 0;
        for (const auto& layer : gr.taps)
          for (const auto& dh : layer) accum[t++] += dh;
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& a : accum) a *= scale;
      opt.step(tensors, accum_ptrs);
    }
    const double mean_loss = loss_sum / static_cast<double>(graphs.size());
    check_finite_loss(mean_loss, epoch);
    for (const auto* t : tensors)
      if (!t->allFinite()) throw TrainingDiverged("training diverged: non-finite parameters", epoch);
    result.history.push_back(
        {epoch, mean_loss,
         labeled ? static_cast<double>(correct) / static_cast<double>(graphs.size())
                 : std::numeric_limits<double>::quiet_NaN()});
  }
  return result;
}

// ---------------------------------------------------------------------------

Index MlpParams::parameter_count() const {
  Index n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

MlpParams init_mlp(const std::vector<int>& dims, Activation hidden, Rng& rng) {
  if (dims.size() < 2) throw InvalidInput("MLP needs at least input and output widths");
  MlpParams p;
  p.hidden = hidden;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1) throw InvalidInput("MLP widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    MatrixD w(dims[l], dims[l + 1]);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(VectorD::Zero(dims[l + 1]));
  }
  return p;
}

namespace {

struct MlpPass {
  std::vector<MatrixD> inputs;  // input of each layer
  std::vector<MatrixD> pre;
  MatrixD output;
};

MlpPass mlp_pass(const MlpParams& p, const MatrixD& x) {
  if (p.weights.empty() || x.cols() != p.weights.front().rows())
    throw InvalidInput("MLP input width does not match the first layer");
  MlpPass pass;
  MatrixD h = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    pass.inputs.push_back(h);
    MatrixD z = h * p.weights[l];
    z.rowwise() += p.biases[l].transpose();
    pass.pre.push_back(z);
    const bool last = l + 1 == p.weights.size();
    h = last ? z : z.unaryExpr([a = p.hidden](double v) { return activate(a, v); }).eval();
  }
  pass.output = std::move(h);
  return pass;
}

}  // namespace

MatrixD mlp_forward(const MlpParams& params, const MatrixD& x) { return mlp_pass(params, x).output; }

double mlp_accuracy(const MlpParams& params, const MatrixD& x, std::span<const int> labels) {
  if (x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto pred = predict(mlp_forward(params, x));
  Index correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

MlpTrainResult train_mlp(MlpParams init, const MatrixD& x, std::span<const int> labels, const TrainConfig& cfg) {
  cfg.validate();
  if (x.rows() == 0) throw InvalidInput("training set is empty");
  if (static_cast<Index>(labels.size()) != x.rows()) throw InvalidInput("one label per sample required");

  MlpTrainResult result{std::move(init), {}};
  MlpParams& p = result.params;
  std::vector<MatrixD> bias_cols;  // biases viewed as column matrices for the optimizer
  for (const auto& b : p.biases) bias_cols.push_back(b);
  std::vector<MatrixD*> tensors;
  for (auto& w : p.weights) tensors.push_back(&w);
  for (auto& b : bias_cols) tensors.push_back(&b);

  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  Rng rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index classes = p.weights.back().cols();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    Index correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Index rows = static_cast<Index>(stop - start);
      MatrixD xb(rows, x.cols());
      std::vector<int> yb(static_cast<std::size_t>(rows));
      for (Index r = 0; r < rows; ++r) {
        xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
        yb[static_cast<std::size_t>(r)] = labels[static_cast<std::size_t>(order[start + static_cast<std::size_t>(r)])];
      }
      for (std::size_t l = 0; l < p.biases.size(); ++l) bias_cols[l] = p.biases[l];
      const MlpPass pass = mlp_pass(p, xb);
      LossValue lv;
      if (cfg.loss == LossKind::cross_entropy) {
        lv = cross_entropy_loss(pass.output, yb);
      } else {
        // Per-sample residual norms, averaged over the batch.
        MatrixD onehot = MatrixD::Zero(rows, classes);
        for (Index r = 0; r < rows; ++r) onehot(r, yb[static_cast<std::size_t>(r)]) = 1.0;
        lv.grad.resize(rows, classes);
        lv.value = 0.0;
        for (Index r = 0; r < rows; ++r) {
          const LossValue one = l2_loss(pass.output.row(r), onehot.row(r));
          lv.value += one.value / static_cast<double>(rows);
          lv.grad.row(r) = one.grad / static_cast<double>(rows);
        }
      }
      check_finite_loss(lv.value, epoch);
      loss_sum += lv.value * static_cast<double>(rows);
      const auto pred = predict(pass.output);
      for (Index r = 0; r < rows; ++r) correct += pred[static_cast<std::size_t>(r)] == yb[static_cast<std::size_t>(r)];

      std::vector<MatrixD> dw(p.weights.size()), db(p.weights.size());
      MatrixD g = lv.grad;
      for (std::size_t l = p.weights.size(); l-- > 0;) {
        if (l + 1 != p.weights.size())
          g = g.cwiseProduct(pass.pre[l].unaryExpr([a = p.hidden](double v) { return activate_derivative(a, v); }));
        dw[l] = pass.inputs[l].transpose() * g;
        db[l] = g.colwise().sum().transpose();
        if (l > 0) g = g * p.weights[l].transpose();
      }
      std::vector<const MatrixD*> grads;
      for (const auto& d : dw) grads.push_back(&d);
      for (const auto& d : db) grads.push_back(&d);
      opt.step(tensors, grads);
      for (std::size_t l = 0; l < p.biases.size(); ++l) p.biases[l] = bias_cols[l].col(0);
    }
    const double mean_loss = loss_sum / static_cast<double>(x.rows());
    check_finite_loss(mean_loss, epoch);
    result.history.push_back({epoch, mean_loss, static_cast<double>(correct) / static_cast<double>(x.rows())});
  }
  return result;
}

}  // namespace mgnn
