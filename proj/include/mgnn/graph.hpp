#pragma once

// Weighted undirected graphs built from embedding vectors, and the shift
// operators (adjacency / Laplacians) that act on signals supported on them.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgnn/errors.hpp"

namespace mgnn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Rows are nodes, columns are features.
template <typename Scalar>
using GraphSignal = Matrix<Scalar>;

enum class SparsifyKind { none, epsilon, knn };

/// How edges of the complete Gaussian-kernel graph are pruned.
/// epsilon(tau) drops weights below tau; knn(k) keeps each node's k heaviest
/// edges and symmetrizes by max.
struct SparsifyPolicy {
  SparsifyKind kind = SparsifyKind::none;
  double epsilon = 0.0;
  int k = 0;

  static SparsifyPolicy none() { return {}; }
  static SparsifyPolicy threshold(double tau) { return {SparsifyKind::epsilon, tau, 0}; }
  static SparsifyPolicy nearest(int k) { return {SparsifyKind::knn, 0.0, k}; }

  /// Complete graph up to 64 nodes, kNN with k = ceil(log2 N) + 1 above.
  static SparsifyPolicy for_size(Index n) {
    if (n <= 64) return none();
    return nearest(static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1);
  }

  bool operator==(const SparsifyPolicy&) const = default;
};

inline std::string to_string(const SparsifyPolicy& p) {
  switch (p.kind) {
    case SparsifyKind::none: return "none";
    case SparsifyKind::epsilon: return "epsilon(" + std::to_string(p.epsilon) + ")";
    case SparsifyKind::knn: return "knn(" + std::to_string(p.k) + ")";
  }
  return "unknown";
}

/// Symmetric, zero-diagonal, nonnegative weight matrix plus construction
/// metadata. Immutable once built.
template <typename Scalar>
class Graph {
 public:
  /// Validates the weight invariants; throws InvalidInput on violation.
  explicit Graph(Matrix<Scalar> weights, SparsifyPolicy policy = {},
                 std::optional<Scalar> sigma = std::nullopt)
      : weights_(std::move(weights)), policy_(policy), sigma_(sigma) {
    const Index n = weights_.rows();
    if (n < 1 || weights_.cols() != n) throw InvalidInput("graph weights must be a nonempty square matrix");
    for (Index j = 0; j < n; ++j) {
      if (weights_(j, j) != Scalar(0)) throw InvalidInput("graph weights must have a zero diagonal");
      for (Index i = 0; i < n; ++i) {
        const Scalar w = weights_(i, j);
        if (!std::isfinite(static_cast<double>(w)) || w < Scalar(0))
          throw InvalidInput("graph weights must be finite and nonnegative");
        if (w != weights_(j, i)) throw InvalidInput("graph weights must be symmetric");
      }
    }
  }

  Index n_nodes() const { return weights_.rows(); }
  const Matrix<Scalar>& weights() const { return weights_; }
  const SparsifyPolicy& sparsify_policy() const { return policy_; }
  /// Kernel width used to build the graph; empty for graphs given as raw weights.
  std::optional<Scalar> sigma() const { return sigma_; }

  Vector<Scalar> degrees() const { return weights_.rowwise().sum(); }

 private:
  Matrix<Scalar> weights_;
  SparsifyPolicy policy_;
  std::optional<Scalar> sigma_;
};

using GraphD = Graph<double>;

namespace detail {

template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_sq_distances(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Index n = z.rows();
  Matrix<Scalar> d2 = Matrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const Scalar v = (z.row(i) - z.row(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  return d2;
}

template <typename Scalar>
Scalar median_sigma_squared(const Matrix<Scalar>& d2) {
  const Index n = d2.rows();
  std::vector<Scalar> upper;
  upper.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) upper.push_back(d2(i, j));
  auto mid = upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2);
  std::nth_element(upper.begin(), mid, upper.end());
  Scalar med = *mid;
  if (upper.size() % 2 == 0) {
    const Scalar lower = *std::max_element(upper.begin(), mid);
    med = (med + lower) / Scalar(2);
  }
  if (med > Scalar(0)) return med;
  // More than half the pairs coincide: fall back to the median of the
  // nonzero distances so duplicates keep weight-1 edges.
  std::vector<Scalar> positive;
  std::copy_if(upper.begin(), upper.end(), std::back_inserter(positive),
               [](Scalar v) { return v > Scalar(0); });
  if (positive.empty())
    throw DegenerateData("automatic kernel width: all embeddings are identical");
  auto pm = positive.begin() + static_cast<std::ptrdiff_t>(positive.size() / 2);
  std::nth_element(positive.begin(), pm, positive.end());
  return *pm;
}

template <typename Scalar>
void prune(Matrix<Scalar>& w, const SparsifyPolicy& policy) {
  const Index n = w.rows();
  switch (policy.kind) {
    case SparsifyKind::none:
      return;
    case SparsifyKind::epsilon:
      if (!(policy.epsilon >= 0.0)) throw InvalidInput("epsilon pruning threshold must be >= 0");
      w = (w.array() < Scalar(policy.epsilon)).select(Scalar(0), w);
      return;
    case SparsifyKind::knn: {
      if (policy.k < 1) throw InvalidInput("knn pruning requires k >= 1");
      Matrix<Scalar> keep = Matrix<Scalar>::Zero(n, n);
      std::vector<Index> order(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
        const auto kk = std::min<std::size_t>(static_cast<std::size_t>(policy.k), static_cast<std::size_t>(n - 1));
        // Heaviest first; ties resolved toward the lower index.
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk + 1), order.end(),
                          [&](Index a, Index b) {
                            if (a == i) return false;
                            if (b == i) return true;
                            if (w(i, a) != w(i, b)) return w(i, a) > w(i, b);
                            return a < b;
                          });
        for (std::size_t r = 0; r < kk; ++r) keep(i, order[r]) = w(i, order[r]);
      }
      w = keep.cwiseMax(keep.transpose());
      return;
    }
  }
}

}  // namespace detail

/// Gaussian-kernel geometric graph: W_ij = exp(-|z_i - z_j|^2 / sigma^2),
/// then pruned per `policy`. An empty `sigma` selects the median heuristic
/// sigma^2 = median_{i<j} |z_i - z_j|^2.
template <typename Derived>
Graph<typename Derived::Scalar> build_geometric_graph(
    const Eigen::MatrixBase<Derived>& z, std::optional<typename Derived::Scalar> sigma = std::nullopt,
    SparsifyPolicy policy = {}) {
  using Scalar = typename Derived::Scalar;
  const Index n = z.rows();
  if (n < 2) throw InvalidInput("geometric graph needs at least 2 embeddings");
  if (!z.allFinite()) throw InvalidInput("embeddings must be finite");
  if (sigma && !(*sigma > Scalar(0))) throw InvalidInput("kernel width sigma must be positive");

  const Matrix<Scalar> d2 = detail::pairwise_sq_distances(z);
  const Scalar sigma2 = sigma ? (*sigma) * (*sigma) : detail::median_sigma_squared(d2);

  // Mirrored rather than evaluated twice: vectorized and scalar exp may
  // round differently.
  Matrix<Scalar> w = Matrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) w(i, j) = w(j, i) = std::exp(-d2(i, j) / sigma2);
  detail::prune(w, policy);
  return Graph<Scalar>(std::move(w), policy, std::sqrt(sigma2));
}

enum class GsoKind {
  adjacency,
  combinatorial_laplacian,
  normalized_laplacian,
  /// D~^{-1/2} (W + I) D~^{-1/2}, the single-hop operator of the usual GCN.
  renormalized_adjacency,
  pointcloud_laplacian,
};

inline std::string to_string(GsoKind k) {
  switch (k) {
    case GsoKind::adjacency: return "adjacency";
    case GsoKind::combinatorial_laplacian: return "laplacian";
    case GsoKind::normalized_laplacian: return "normalized_laplacian";
    case GsoKind::renormalized_adjacency: return "gcn";
    case GsoKind::pointcloud_laplacian: return "pointcloud";
  }
  return "unknown";
}

inline GsoKind gso_kind_from_string(const std::string& s) {
  if (s == "adjacency") return GsoKind::adjacency;
  if (s == "laplacian") return GsoKind::combinatorial_laplacian;
  if (s == "normalized_laplacian") return GsoKind::normalized_laplacian;
  if (s == "gcn") return GsoKind::renormalized_adjacency;
  if (s == "pointcloud") return GsoKind::pointcloud_laplacian;
  throw InvalidInput("unknown shift operator kind '" + s + "'");
}

/// Metadata for the point-cloud Laplacian c (D - W), c = vol / (N t (pi sigma^2)^(m/2)),
/// t = sigma^2 / 4. With `density_renormalized` the kernel is first divided by
/// the empirical degrees, W_ij qbar^2 / (q_i q_j) with qbar = N (pi sigma^2)^(m/2) / vol,
/// which cancels sampling-density fluctuations.
struct PointCloudScale {
  int intrinsic_dim = 1;
  double volume = 1.0;
  bool density_renormalized = true;
};

template <typename Scalar>
struct Gso {
  GsoKind kind;
  Matrix<Scalar> matrix;
  std::optional<PointCloudScale> pointcloud;

  Index size() const { return matrix.rows(); }
};

using GsoD = Gso<double>;

/// Builds the requested shift operator. The point-cloud Laplacian needs
/// `scale` and a graph that carries its kernel width.
template <typename Scalar>
Gso<Scalar> shift_operator(const Graph<Scalar>& g, GsoKind kind,
                           std::optional<PointCloudScale> scale = std::nullopt) {
  const Matrix<Scalar>& w = g.weights();
  const Index n = g.n_nodes();
  const Vector<Scalar> deg = g.degrees();

  auto laplacian_of = [n](const Matrix<Scalar>& a) {
    Matrix<Scalar> l = -a;
    for (Index i = 0; i < n; ++i) l(i, i) = a.row(i).sum() - a(i, i);
    return l;
  };

  switch (kind) {
    case GsoKind::adjacency:
      return {kind, w, std::nullopt};
    case GsoKind::combinatorial_laplacian:
      return {kind, laplacian_of(w), std::nullopt};
    case GsoKind::normalized_laplacian: {
      Vector<Scalar> inv_sqrt = deg.unaryExpr(
          [](Scalar d) { return d > Scalar(0) ? Scalar(1) / std::sqrt(d) : Scalar(0); });
      Matrix<Scalar> l = inv_sqrt.asDiagonal() * laplacian_of(w) * inv_sqrt.asDiagonal();
      return {kind, (l + l.transpose()) / Scalar(2), std::nullopt};
    }
    case GsoKind::renormalized_adjacency: {
      Matrix<Scalar> a = w + Matrix<Scalar>::Identity(n, n);
      Vector<Scalar> inv_sqrt = a.rowwise().sum().cwiseSqrt().cwiseInverse();
      Matrix<Scalar> s = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
      return {kind, (s + s.transpose()) / Scalar(2), std::nullopt};
    }
    case GsoKind::pointcloud_laplacian: {
      if (!scale) throw InvalidInput("point-cloud Laplacian requires intrinsic dimension metadata");
      if (!g.sigma()) throw InvalidInput("point-cloud Laplacian requires a graph built with a known sigma");
      if (scale->intrinsic_dim < 1 || !(scale->volume > 0.0))
        throw InvalidInput("point-cloud Laplacian needs intrinsic_dim >= 1 and volume > 0");
      const double sigma = static_cast<double>(*g.sigma());
      const double t = sigma * sigma / 4.0;
      const double kernel_mass = std::pow(std::numbers::pi * sigma * sigma, scale->intrinsic_dim / 2.0);
      const double c = scale->volume / (static_cast<double>(n) * t * kernel_mass);
      Matrix<Scalar> kernel = w;
      if (scale->density_renormalized) {
        if ((deg.array() <= Scalar(0)).any())
          throw DegenerateData("point-cloud Laplacian: isolated node, kernel width too small");
        const Scalar qbar = Scalar(static_cast<double>(n) * kernel_mass / scale->volume);
        const Vector<Scalar> r = deg.cwiseInverse() * qbar;
        kernel = r.asDiagonal() * w * r.asDiagonal();
        kernel = ((kernel + kernel.transpose()) / Scalar(2)).eval();
      }
      return {kind, Scalar(c) * laplacian_of(kernel), scale};
    }
  }
  throw InvalidInput("unknown shift operator kind");
}

}  // namespace mgnn
