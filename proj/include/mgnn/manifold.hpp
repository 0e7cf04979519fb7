#pragma once

// Manifolds whose Laplace-Beltrami eigenpairs are known in closed form:
// the unit circle, the unit sphere and the flat torus [0, 2pi)^2. Signals are
// handled through their spectral coefficients; eigenfunctions are normalized
// against the uniform probability measure.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mgnn/neural.hpp"

namespace mgnn {

enum class ManifoldKind { circle, sphere, flat_torus };

ManifoldKind manifold_kind_from_string(const std::string& s);

/// One eigenfunction. circle: (k, trig) with trig 0 = cos, 1 = sin;
/// sphere: (l, m); torus: (a, b, variant) with variant bits selecting sin for
/// each factor.
struct LbMode {
  double lambda = 0.0;
  int p = 0;
  int q = 0;
  int variant = 0;
};

class AnalyticManifold {
 public:
  explicit AnalyticManifold(ManifoldKind kind) : kind_(kind) {}

  ManifoldKind kind() const { return kind_; }
  std::string name() const;
  int intrinsic_dim() const { return kind_ == ManifoldKind::circle ? 1 : 2; }
  /// Columns of a point: angle (circle), unit xyz (sphere), two angles (torus).
  int coordinate_dim() const;
  /// Dimension of the isometric embedding used to measure chord distances.
  int ambient_dim() const;
  /// Riemannian volume: 2pi, 4pi, 4pi^2.
  double volume() const;

  /// First `count` eigenpairs in nondecreasing eigenvalue order.
  std::vector<LbMode> modes(Index count) const;
  /// Every eigenpair with eigenvalue <= cutoff.
  std::vector<LbMode> modes_below(double cutoff) const;
  /// points x modes matrix of eigenfunction values.
  MatrixD evaluate(std::span<const LbMode> modes, const MatrixD& points) const;
  /// Ambient coordinates: (cos t, sin t); xyz; (cos a, sin a, cos b, sin b).
  MatrixD ambient(const MatrixD& points) const;

 private:
  ManifoldKind kind_;
};

struct LbEigenpairs {
  VectorD lambdas;
  std::vector<LbMode> modes;
};

LbEigenpairs lb_eigenpairs(const AnalyticManifold& manifold, Index count);

/// Points on a manifold with a weight per point. For i.i.d. samples every
/// weight is 1/N; for reference grids they are quadrature weights.
struct SamplingOperator {
  AnalyticManifold manifold;
  MatrixD points;
  VectorD weights;

  Index size() const { return points.rows(); }
  /// Values of an arbitrary manifold signal at the points.
  VectorD evaluate(const std::function<double(const Eigen::RowVectorXd&)>& f) const;
};

/// i.i.d. uniform draws: circle angle ~ U[0, 2pi); sphere via normalized
/// Gaussian vectors; torus two independent angles.
SamplingOperator sample_uniform(const AnalyticManifold& manifold, Index n, Rng& rng);

/// Quadrature grid: uniform angles (trapezoid) on the circle, Fibonacci
/// lattice with equal weights on the sphere, uniform product grid on the
/// torus (side round(sqrt(q))).
SamplingOperator reference_grid(const AnalyticManifold& manifold, Index q);

/// Spectral coefficients for every mode with eigenvalue <= cutoff, one column
/// per channel. Higher modes are absent by construction.
class BandlimitedSignal {
 public:
  BandlimitedSignal(AnalyticManifold manifold, double cutoff, std::vector<LbMode> modes, MatrixD coefficients);

  const AnalyticManifold& manifold() const { return manifold_; }
  double cutoff() const { return cutoff_; }
  const std::vector<LbMode>& modes() const { return modes_; }
  const MatrixD& coefficients() const { return coefficients_; }
  Index channels() const { return coefficients_.cols(); }

  /// points x channels.
  MatrixD evaluate(const MatrixD& points) const;
  MatrixD sample(const SamplingOperator& p) const { return evaluate(p.points); }

 private:
  AnalyticManifold manifold_;
  double cutoff_;
  std::vector<LbMode> modes_;
  MatrixD coefficients_;
};

/// Coefficient for mode `index` (0-based in eigen order).
using CoefficientGenerator = std::function<double(Index index, const LbMode& mode)>;

BandlimitedSignal bandlimited_project(const AnalyticManifold& manifold, double cutoff,
                                      const CoefficientGenerator& coefficient);
/// Drops every mode above `cutoff`; idempotent.
BandlimitedSignal bandlimited_project(const BandlimitedSignal& f, double cutoff);

struct MnnOptions {
  /// Modes carried between layers; defaults to eigenvalues up to
  /// 25 * max(cutoff of f, first nonzero eigenvalue), covering fifth harmonics.
  std::optional<double> carry_cutoff;
  double residual_tol = 1e-3;
  /// Grid must have at least this many points per carried mode.
  Index points_per_mode = 50;
};

struct MnnResult {
  MatrixD grid_values;  // Q x d_L
  std::vector<LbMode> modes;
  MatrixD coefficients;  // final layer, modes x d_L
  double max_residual = 0.0;

  /// Final-layer output at arbitrary points (exact for the last, linear layer).
  MatrixD evaluate(const AnalyticManifold& manifold, const MatrixD& points) const;
};

/// Runs a heat-kind network on the manifold: each tap multiplies coefficient
/// i by exp(-k lambda_i), features mix through H_k, the nonlinearity is
/// applied to grid values and re-projected by quadrature.
MnnResult mnn_forward(const BandlimitedSignal& f, const GnnParams& params, const SamplingOperator& grid,
                      const MnnOptions& opts = {});

}  // namespace mgnn
