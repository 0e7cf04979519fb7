#pragma once

// Polynomial / heat-kernel graph neural networks, the per-sample MLP
// baseline, losses, and the training loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgnn/dataset.hpp"
#include "mgnn/spectral.hpp"

namespace mgnn {

using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

enum class Activation : std::uint8_t { identity = 0, tanh = 1, relu = 2 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);
double activate(Activation a, double x);
double activate_derivative(Activation a, double x);
std::function<double(double)> as_function(Activation a);

/// One GNN layer: taps[k] is H_k (d_in x d_out).
struct GnnLayer {
  std::vector<MatrixD> taps;
  Activation activation = Activation::identity;

  Index tap_count() const { return static_cast<Index>(taps.size()); }
  Index in_dim() const { return taps.front().rows(); }
  Index out_dim() const { return taps.front().cols(); }
};

struct GnnParams {
  FilterKind filter = FilterKind::poly;
  /// Shift operator the network is meant to run on.
  GsoKind gso = GsoKind::renormalized_adjacency;
  std::vector<GnnLayer> layers;

  Index input_dim() const { return layers.front().in_dim(); }
  Index output_dim() const { return layers.back().out_dim(); }
  Index parameter_count() const;
  /// Throws InvalidInput unless layer dims chain and all taps are finite.
  void validate() const;
  bool operator==(const GnnParams& other) const;
};

struct GnnArchitecture {
  std::vector<int> dims;  // d_0, d_1, ..., d_L
  int taps = 2;
  FilterKind filter = FilterKind::poly;
  GsoKind gso = GsoKind::renormalized_adjacency;
  Activation hidden = Activation::tanh;
};

/// Taps uniform in +-1/sqrt(K d_in); the final layer is linear (logits).
GnnParams init_gnn(const GnnArchitecture& arch, Rng& rng);

/// Single-hop filter on the GCN renormalized adjacency, one hidden layer.
GnnArchitecture gcn_preset(int input_dim, int hidden, int classes);

/// Two hidden layers sized so the parameter count lands in [100k, 500k].
GnnArchitecture replication_preset(int input_dim, int classes);

/// What a layer's taps are applied through: S^k for poly filters, exp(-k L)
/// (via an eigensystem) for heat filters. Holds references only.
class Shift {
 public:
  Shift(const GsoD& s) : kind_(FilterKind::poly), gso_(&s) {}  // NOLINT(implicit)
  Shift(const EigenSystemD& e) : kind_(FilterKind::heat), eig_(&e) {}  // NOLINT(implicit)

  FilterKind kind() const { return kind_; }
  Index size() const;

  /// [x, S x, ..., S^{K-1} x].
  std::vector<MatrixD> powers(const MatrixD& x, Index k) const;
  /// sum_k S^k g_k, S symmetric.
  MatrixD combine(std::span<const MatrixD> g) const;

 private:
  FilterKind kind_;
  const GsoD* gso_ = nullptr;
  const EigenSystemD* eig_ = nullptr;
};

struct LayerCache {
  std::vector<MatrixD> shifted;  // S^k X^{l-1}
  MatrixD pre;                   // sum_k S^k X^{l-1} H_k
  MatrixD out;                   // activation(pre)
};

struct ForwardCache {
  MatrixD input;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  GraphSignal<double> output;
  ForwardCache cache;
};

ForwardResult gnn_forward(const GraphSignal<double>& x, const GnnParams& params, const Shift& shift);

struct GnnGradients {
  std::vector<std::vector<MatrixD>> taps;  // same layout as GnnParams::layers[l].taps
  MatrixD input;
};

/// Gradients of <upstream, output> with respect to every tap, and with respect
/// to the input signal unless `input_gradient` is false.
GnnGradients gnn_backward(const GnnParams& params, const Shift& shift, const ForwardCache& cache,
                          const MatrixD& upstream, bool input_gradient = true);

// ---------------------------------------------------------------------------
// Losses.

enum class LossKind : std::uint8_t { l2 = 0, cross_entropy = 1 };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct LossValue {
  double value = 0.0;
  MatrixD grad;
};

/// Frobenius norm of the residual; the gradient at a zero residual is zero.
LossValue l2_loss(const MatrixD& pred, const MatrixD& target);
/// Mean over rows of -log softmax(logits)[label].
LossValue cross_entropy_loss(const MatrixD& logits, std::span<const int> labels);

/// Per-node supervision: class labels, or dense regression targets.
struct NodeTargets {
  std::vector<int> labels;
  MatrixD values;  // empty: one-hot of labels when an l2 loss is requested
};

LossValue loss(const MatrixD& pred, const NodeTargets& targets, LossKind kind);

// ---------------------------------------------------------------------------
// Nonlinearity check.

struct LipschitzReport {
  bool passes = false;
  bool zero_at_origin = false;
  double worst_ratio = 0.0;
  Index samples = 0;
};

/// Checks f(0) == 0 and |f(x) - f(y)| <= |x - y| on random pairs.
LipschitzReport normalized_lipschitz_check(const std::function<double(double)>& f, Index samples,
                                           std::uint64_t seed = 0);
LipschitzReport normalized_lipschitz_check(Activation a, Index samples, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Training.

enum class OptimizerKind : std::uint8_t { sgd, adam };

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  LossKind loss = LossKind::cross_entropy;
  std::uint64_t seed = 0;
  int batch_size = 32;  // graphs (or samples, for the MLP) per step

  void validate() const;
};

/// A graph ready for the network: the shift operator, its eigensystem when a
/// heat filter needs it, the node features and the node targets.
struct GraphInstance {
  GsoD gso;
  std::optional<EigenSystemD> eig;
  MatrixD signal;
  NodeTargets targets;

  Shift shift(FilterKind kind) const;
};

GraphInstance make_instance(const NeighborhoodSample& sample, GsoKind gso, FilterKind filter);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  /// Anchored (node 0) accuracy; NaN when the instances carry no labels.
  double accuracy = 0.0;
};

struct TrainResult {
  GnnParams params;
  std::vector<EpochStats> history;
};

/// Minimizes the mean per-graph loss. Deterministic for a fixed seed.
TrainResult train(GnnParams init, std::span<const GraphInstance> graphs, const TrainConfig& cfg);

/// Per-node argmax of the logits; ties go to the lowest class index.
std::vector<int> predict(const MatrixD& logits);
std::vector<int> predict(const GnnParams& params, const Shift& shift, const MatrixD& x);
int predict_anchor(const GnnParams& params, const Shift& shift, const MatrixD& x);

/// Fraction of instances whose anchor (node 0) is classified correctly.
double anchored_accuracy(const GnnParams& params, std::span<const GraphInstance> graphs);

// ---------------------------------------------------------------------------
// MLP baseline, applied to each embedding independently.

struct MlpParams {
  std::vector<MatrixD> weights;  // d_in x d_out
  std::vector<VectorD> biases;
  Activation hidden = Activation::tanh;

  Index parameter_count() const;
};

MlpParams init_mlp(const std::vector<int>& dims, Activation hidden, Rng& rng);

/// Rows are samples; each output row depends only on its input row.
MatrixD mlp_forward(const MlpParams& params, const MatrixD& x);

struct MlpTrainResult {
  MlpParams params;
  std::vector<EpochStats> history;
};

/// Cross-entropy training on (embedding, label) pairs; the loss kind in `cfg`
/// selects l2 against one-hot targets when set to l2.
MlpTrainResult train_mlp(MlpParams init, const MatrixD& x, std::span<const int> labels, const TrainConfig& cfg);

double mlp_accuracy(const MlpParams& params, const MatrixD& x, std::span<const int> labels);

}  // namespace mgnn
