#include <cmath>

#include "mgnn/neural.hpp"

namespace mgnn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity" || s == "linear") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw InvalidInput("unknown activation '" + s + "'");
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

std::function<double(double)> as_function(Activation a) {
  return [a](double x) { return activate(a, x); };
}

Index GnnParams::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers)
    for (const auto& h : l.taps) n += h.size();
  return n;
}

void GnnParams::validate() const {
  if (layers.empty()) throw InvalidInput("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.taps.empty()) throw InvalidInput("layer " + std::to_string(l) + " has no taps");
    for (const auto& h : layer.taps) {
      if (h.rows() != layer.in_dim() || h.cols() != layer.out_dim() || h.size() == 0)
        throw InvalidInput("layer " + std::to_string(l) + " taps have inconsistent shapes");
      if (!h.allFinite()) throw InvalidInput("layer " + std::to_string(l) + " has non-finite coefficients");
    }
    if (l > 0 && layers[l - 1].out_dim() != layer.in_dim())
      throw InvalidInput("layer " + std::to_string(l) + " input width does not match previous output width");
  }
}

bool GnnParams::operator==(const GnnParams& other) const {
  if (filter != other.filter || gso != other.gso || layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = other.layers[l];
    if (a.activation != b.activation || a.taps.size() != b.taps.size()) return false;
    for (std::size_t k = 0; k < a.taps.size(); ++k)
      if (a.taps[k].rows() != b.taps[k].rows() || a.taps[k].cols() != b.taps[k].cols() || a.taps[k] != b.taps[k])
        return false;
  }
  return true;
}

GnnParams init_gnn(const GnnArchitecture& arch, Rng& rng) {
  if (arch.dims.size() < 2) throw InvalidInput("architecture needs at least input and output widths");
  if (arch.taps < 1) throw InvalidInput("architecture needs at least one tap");
  GnnParams p;
  p.filter = arch.filter;
  p.gso = arch.gso;
  for (std::size_t l = 0; l + 1 < arch.dims.size(); ++l) {
    const int din = arch.dims[l];
    const int dout = arch.dims[l + 1];
    if (din < 1 || dout < 1) throw InvalidInput("layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.taps) * din);
    std::uniform_real_distribution<double> u(-bound, bound);
    GnnLayer layer;
    layer.activation = l + 2 == arch.dims.size() ? Activation::identity : arch.hidden;
    for (int k = 0; k < arch.taps; ++k) {
      MatrixD h(din, dout);
      for (Index j = 0; j < h.cols(); ++j)
        for (Index i = 0; i < h.rows(); ++i) h(i, j) = u(rng);
      layer.taps.push_back(std::move(h));
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

GnnArchitecture gcn_preset(int input_dim, int hidden, int classes) {
  GnnArchitecture a;
  a.dims = {input_dim, hidden, classes};
  a.taps = 2;
  a.filter = FilterKind::poly;
  a.gso = GsoKind::renormalized_adjacency;
  a.hidden = Activation::relu;
  return a;
}

GnnArchitecture replication_preset(int input_dim, int classes) {
  // K (d h + h^2 + h C) with K = 2; smallest multiple of 8 reaching 100k.
  constexpr int kTaps = 2;
  int h = 8;
  auto count = [&](int w) { return static_cast<long>(kTaps) * (static_cast<long>(input_dim) * w + static_cast<long>(w) * w + static_cast<long>(w) * classes); };
  while (count(h) < 100000) h += 8;
  if (count(h) > 500000) throw InvalidInput("replication preset: input too wide for the 100k-500k budget");
  GnnArchitecture a;
  a.dims = {input_dim, h, h, classes};
  a.taps = kTaps;
  a.filter = FilterKind::poly;
  a.gso = GsoKind::renormalized_adjacency;
  a.hidden = Activation::relu;
  return a;
}

Index Shift::size() const { return kind_ == FilterKind::poly ? gso_->size() : eig_->size(); }

std::vector<MatrixD> Shift::powers(const MatrixD& x, Index k) const {
  std::vector<MatrixD> out;
  out.reserve(static_cast<std::size_t>(k));
  out.push_back(x);
  if (k == 1) return out;
  if (kind_ == FilterKind::poly) {
    for (Index i = 1; i < k; ++i) out.push_back(gso_->matrix * out.back());
    return out;
  }
  const VectorD lam = clamped_spectrum(*eig_);
  const MatrixD y = eig_->vectors.transpose() * x;
  for (Index i = 1; i < k; ++i)
    out.push_back(eig_->vectors * ((-static_cast<double>(i) * lam.array()).exp().matrix().asDiagonal() * y));
  return out;
}

MatrixD Shift::combine(std::span<const MatrixD> g) const {
  const auto k = static_cast<Index>(g.size());
  if (kind_ == FilterKind::poly) {
    MatrixD acc = g[static_cast<std::size_t>(k - 1)];
    for (Index i = k - 2; i >= 0; --i) acc = gso_->matrix * acc + g[static_cast<std::size_t>(i)];
    return acc;
  }
  MatrixD acc = g[0];
  if (k == 1) return acc;
  const VectorD lam = clamped_spectrum(*eig_);
  MatrixD spectral = MatrixD::Zero(eig_->size(), acc.cols());
  for (Index i = 1; i < k; ++i)
    spectral.noalias() += (-static_cast<double>(i) * lam.array()).exp().matrix().asDiagonal() *
                          (eig_->vectors.transpose() * g[static_cast<std::size_t>(i)]);
  acc.noalias() += eig_->vectors * spectral;
  return acc;
}

ForwardResult gnn_forward(const GraphSignal<double>& x, const GnnParams& params, const Shift& shift) {
  params.validate();
  if (shift.kind() != params.filter)
    throw InvalidInput(params.filter == FilterKind::heat ? "heat-kind network requires an eigensystem"
                                                         : "poly-kind network requires a shift operator matrix");
  if (x.rows() != shift.size()) throw InvalidInput("signal rows do not match the graph size");
  if (x.cols() != params.input_dim())
    throw InvalidInput("signal has " + std::to_string(x.cols()) + " features, network expects " +
                       std::to_string(params.input_dim()));

  ForwardResult result;
  result.cache.input = x;
  const MatrixD* current = &result.cache.input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    LayerCache lc;
    lc.shifted = shift.powers(*current, layer.tap_count());
    lc.pre = lc.shifted[0] * layer.taps[0];
    for (Index k = 1; k < layer.tap_count(); ++k)
      lc.pre.noalias() += lc.shifted[static_cast<std::size_t>(k)] * layer.taps[static_cast<std::size_t>(k)];
    lc.out = layer.activation == Activation::identity
                 ? lc.pre
                 : lc.pre.unaryExpr([a = layer.activation](double v) { return activate(a, v); }).eval();
    if (!lc.out.allFinite())
      throw NumericOverflow("non-finite activation in layer " + std::to_string(l), static_cast<int>(l));
    result.cache.layers.push_back(std::move(lc));
    current = &result.cache.layers.back().out;
  }
  result.output = result.cache.layers.back().out;
  return result;
}

GnnGradients gnn_backward(const GnnParams& params, const Shift& shift, const ForwardCache& cache,
                          const MatrixD& upstream, bool input_gradient) {
  if (cache.layers.size() != params.layers.size())
    throw InvalidInput("backward: cache does not match the network depth");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const auto& lc = cache.layers[l];
    if (static_cast<Index>(lc.shifted.size()) != layer.tap_count() || lc.pre.cols() != layer.out_dim() ||
        lc.shifted[0].cols() != layer.in_dim())
      throw InvalidInput("backward: cache does not match layer " + std::to_string(l));
  }
  const auto& last = cache.layers.back();
  if (upstream.rows() != last.out.rows() || upstream.cols() != last.out.cols())
    throw InvalidInput("backward: upstream gradient shape does not match the network output");
  if (shift.kind() != params.filter) throw InvalidInput("backward: shift kind does not match the network");

  GnnGradients grads;
  grads.taps.resize(params.layers.size());
  MatrixD g = upstream;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& lc = cache.layers[li];
    MatrixD g_pre = layer.activation == Activation::identity
                        ? g
                        : g.cwiseProduct(lc.pre.unaryExpr(
                              [a = layer.activation](double v) { return activate_derivative(a, v); }));
    auto& dh = grads.taps[li];
    dh.resize(layer.taps.size());
    for (std::size_t k = 0; k < layer.taps.size(); ++k) dh[k].noalias() = lc.shifted[k].transpose() * g_pre;
    if (li == 0 && !input_gradient) break;

    std::vector<MatrixD> back(layer.taps.size());
    for (std::size_t k = 0; k < layer.taps.size(); ++k) back[k].noalias() = g_pre * layer.taps[k].transpose();
    g = shift.combine(back);
  }
  if (input_gradient) grads.input = std::move(g);
  return grads;
}

std::vector<int> predict(const MatrixD& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict(const GnnParams& params, const Shift& shift, const MatrixD& x) {
  return predict(gnn_forward(x, params, shift).output);
}

int predict_anchor(const GnnParams& params, const Shift& shift, const MatrixD& x) {
  const MatrixD out = gnn_forward(x, params, shift).output;
  return predict(out.topRows(1)).front();
}

}  // namespace mgnn
