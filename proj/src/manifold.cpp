#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "mgnn/manifold.hpp"

namespace mgnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool same_mode(const LbMode& a, const LbMode& b) { return a.p == b.p && a.q == b.q && a.variant == b.variant; }

void sort_modes(std::vector<LbMode>& modes) {
  std::stable_sort(modes.begin(), modes.end(), [](const LbMode& a, const LbMode& b) {
    return std::tie(a.lambda, a.p, a.q, a.variant) < std::tie(b.lambda, b.p, b.q, b.variant);
  });
}

/// Associated Legendre values q_l^{|m|}(x) for l = |m|..lmax, normalized so that
/// their mean square over x ~ U[-1, 1] is 1.
std::vector<double> legendre_column(int m, int lmax, double x) {
  std::vector<double> out(static_cast<std::size_t>(lmax + 1), 0.0);
  if (m > lmax) return out;
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  double q = std::sqrt(2.0 * m + 1.0);
  for (int i = 1; i <= m; ++i) q *= std::sqrt((2.0 * i - 1.0) / (2.0 * i)) * s;
  out[static_cast<std::size_t>(m)] = q;
  if (m == lmax) return out;
  out[static_cast<std::size_t>(m + 1)] = std::sqrt(2.0 * m + 3.0) * x * q;
  for (int l = m + 2; l <= lmax; ++l) {
    const double ll = static_cast<double>(l) * l, mm = static_cast<double>(m) * m;
    const double a = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
    const double lp = static_cast<double>(l - 1) * (l - 1);
    const double a_prev = std::sqrt((4.0 * lp - 1.0) / (lp - mm));
    out[static_cast<std::size_t>(l)] =
        a * (x * out[static_cast<std::size_t>(l - 1)] - out[static_cast<std::size_t>(l - 2)] / a_prev);
  }
  return out;
}

double trig(int k, bool use_sin, double t) {
  if (k == 0) return 1.0;
  return std::numbers::sqrt2 * (use_sin ? std::sin(k * t) : std::cos(k * t));
}

}  // namespace

ManifoldKind manifold_kind_from_string(const std::string& s) {
  if (s == "circle") return ManifoldKind::circle;
  if (s == "sphere") return ManifoldKind::sphere;
  if (s == "torus" || s == "flat_torus") return ManifoldKind::flat_torus;
  throw InvalidInput("unknown manifold '" + s + "' (expected circle, sphere or torus)");
}

std::string AnalyticManifold::name() const {
  switch (kind_) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::flat_torus: return "torus";
  }
  throw InvalidInput("unsupported manifold kind");
}

int AnalyticManifold::coordinate_dim() const {
  switch (kind_) {
    case ManifoldKind::circle: return 1;
    case ManifoldKind::sphere: return 3;
    case ManifoldKind::flat_torus: return 2;
  }
  throw InvalidInput("unsupported manifold kind");
}

int AnalyticManifold::ambient_dim() const {
  switch (kind_) {
    case ManifoldKind::circle: return 2;
    case ManifoldKind::sphere: return 3;
    case ManifoldKind::flat_torus: return 4;
  }
  throw InvalidInput("unsupported manifold kind");
}

double AnalyticManifold::volume() const {
  switch (kind_) {
    case ManifoldKind::circle: return kTwoPi;
    case ManifoldKind::sphere: return 2.0 * kTwoPi;
    case ManifoldKind::flat_torus: return kTwoPi * kTwoPi;
  }
  throw InvalidInput("unsupported manifold kind");
}

std::vector<LbMode> AnalyticManifold::modes_below(double cutoff) const {
  if (!(cutoff >= 0.0) || !std::isfinite(cutoff)) throw InvalidInput("eigenvalue cutoff must be finite and >= 0");
  std::vector<LbMode> out;
  switch (kind_) {
    case ManifoldKind::circle: {
      out.push_back({0.0, 0, 0, 0});
      for (int k = 1; static_cast<double>(k) * k <= cutoff; ++k) {
        out.push_back({static_cast<double>(k) * k, k, 0, 0});
        out.push_back({static_cast<double>(k) * k, k, 0, 1});
      }
      break;
    }
    case ManifoldKind::sphere: {
      for (int l = 0; static_cast<double>(l) * (l + 1) <= cutoff; ++l)
        for (int m = -l; m <= l; ++m) out.push_back({static_cast<double>(l) * (l + 1), l, m, 0});
      break;
    }
    case ManifoldKind::flat_torus: {
      const int top = static_cast<int>(std::floor(std::sqrt(cutoff)));
      for (int a = 0; a <= top; ++a)
        for (int b = 0; b <= top; ++b) {
          const double lam = static_cast<double>(a) * a + static_cast<double>(b) * b;
          if (lam > cutoff) continue;
          for (int v = 0; v < 4; ++v) {
            if ((v & 1) && a == 0) continue;
            if ((v & 2) && b == 0) continue;
            out.push_back({lam, a, b, v});
          }
        }
      break;
    }
  }
  sort_modes(out);
  return out;
}

std::vector<LbMode> AnalyticManifold::modes(Index count) const {
  if (count < 1) throw InvalidInput("eigenpair count must be >= 1");
  double cutoff = 1.0;
  auto out = modes_below(cutoff);
  while (static_cast<Index>(out.size()) < count) {
    cutoff *= 2.0;
    out = modes_below(cutoff);
  }
  out.resize(static_cast<std::size_t>(count));
  return out;
}

MatrixD AnalyticManifold::evaluate(std::span<const LbMode> modes, const MatrixD& points) const {
  if (points.cols() != coordinate_dim())
    throw InvalidInput(name() + " points need " + std::to_string(coordinate_dim()) + " coordinate columns");
  MatrixD out(points.rows(), static_cast<Index>(modes.size()));
  if (kind_ == ManifoldKind::sphere) {
    int lmax = 0;
    for (const auto& md : modes) lmax = std::max(lmax, md.p);
    for (Index i = 0; i < points.rows(); ++i) {
      const double x = std::clamp(points(i, 2), -1.0, 1.0);
      const double phi = std::atan2(points(i, 1), points(i, 0));
      std::vector<std::vector<double>> cols(static_cast<std::size_t>(lmax + 1));
      for (std::size_t j = 0; j < modes.size(); ++j) {
        const auto& md = modes[j];
        const int am = std::abs(md.q);
        auto& col = cols[static_cast<std::size_t>(am)];
        if (col.empty()) col = legendre_column(am, lmax, x);
        const double angular = md.q == 0 ? 1.0 : trig(am, md.q < 0, phi);
        out(i, static_cast<Index>(j)) = col[static_cast<std::size_t>(md.p)] * angular;
      }
    }
    return out;
  }
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const auto& md = modes[j];
    for (Index i = 0; i < points.rows(); ++i) {
      out(i, static_cast<Index>(j)) = kind_ == ManifoldKind::circle
                                          ? trig(md.p, md.variant == 1, points(i, 0))
                                          : trig(md.p, md.variant & 1, points(i, 0)) *
                                                trig(md.q, md.variant & 2, points(i, 1));
    }
  }
  return out;
}

MatrixD AnalyticManifold::ambient(const MatrixD& points) const {
  if (points.cols() != coordinate_dim())
    throw InvalidInput(name() + " points need " + std::to_string(coordinate_dim()) + " coordinate columns");
  switch (kind_) {
    case ManifoldKind::circle: {
      MatrixD z(points.rows(), 2);
      z.col(0) = points.col(0).array().cos();
      z.col(1) = points.col(0).array().sin();
      return z;
    }
    case ManifoldKind::sphere: return points;
    case ManifoldKind::flat_torus: {
      MatrixD z(points.rows(), 4);
      z.col(0) = points.col(0).array().cos();
      z.col(1) = points.col(0).array().sin();
      z.col(2) = points.col(1).array().cos();
      z.col(3) = points.col(1).array().sin();
      return z;
    }
  }
  throw InvalidInput("unsupported manifold kind");
}

LbEigenpairs lb_eigenpairs(const AnalyticManifold& manifold, Index count) {
  LbEigenpairs e;
  e.modes = manifold.modes(count);
  e.lambdas.resize(count);
  for (Index i = 0; i < count; ++i) e.lambdas(i) = e.modes[static_cast<std::size_t>(i)].lambda;
  return e;
}

VectorD SamplingOperator::evaluate(const std::function<double(const Eigen::RowVectorXd&)>& f) const {
  VectorD v(points.rows());
  for (Index i = 0; i < points.rows(); ++i) v(i) = f(points.row(i));
  return v;
}

SamplingOperator sample_uniform(const AnalyticManifold& manifold, Index n, Rng& rng) {
  if (n < 1) throw InvalidInput("sample count must be >= 1");
  MatrixD pts(n, manifold.coordinate_dim());
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::normal_distribution<double> gauss;
  for (Index i = 0; i < n; ++i) {
    switch (manifold.kind()) {
      case ManifoldKind::circle: pts(i, 0) = angle(rng); break;
      case ManifoldKind::sphere: {
        Eigen::Vector3d g;
        do {
          g = {gauss(rng), gauss(rng), gauss(rng)};
        } while (g.norm() == 0.0);
        pts.row(i) = g.normalized().transpose();
        break;
      }
      case ManifoldKind::flat_torus:
        pts(i, 0) = angle(rng);
        pts(i, 1) = angle(rng);
        break;
    }
  }
  return {manifold, std::move(pts), VectorD::Constant(n, 1.0 / static_cast<double>(n))};
}

SamplingOperator reference_grid(const AnalyticManifold& manifold, Index q) {
  if (q < 1) throw InvalidInput("grid size must be >= 1");
  switch (manifold.kind()) {
    case ManifoldKind::circle: {
      MatrixD pts(q, 1);
      for (Index i = 0; i < q; ++i) pts(i, 0) = kTwoPi * static_cast<double>(i) / static_cast<double>(q);
      return {manifold, std::move(pts), VectorD::Constant(q, 1.0 / static_cast<double>(q))};
    }
    case ManifoldKind::sphere: {
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      MatrixD pts(q, 3);
      for (Index i = 0; i < q; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(q);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        pts.row(i) << r * std::cos(phi), r * std::sin(phi), z;
      }
      return {manifold, std::move(pts), VectorD::Constant(q, 1.0 / static_cast<double>(q))};
    }
    case ManifoldKind::flat_torus: {
      const Index side = std::max<Index>(1, std::llround(std::sqrt(static_cast<double>(q))));
      MatrixD pts(side * side, 2);
      for (Index a = 0; a < side; ++a)
        for (Index b = 0; b < side; ++b) {
          pts(a * side + b, 0) = kTwoPi * static_cast<double>(a) / static_cast<double>(side);
          pts(a * side + b, 1) = kTwoPi * static_cast<double>(b) / static_cast<double>(side);
        }
      return {manifold, std::move(pts), VectorD::Constant(side * side, 1.0 / static_cast<double>(side * side))};
    }
  }
  throw InvalidInput("unsupported manifold kind");
}

BandlimitedSignal::BandlimitedSignal(AnalyticManifold manifold, double cutoff, std::vector<LbMode> modes,
                                     MatrixD coefficients)
    : manifold_(manifold), cutoff_(cutoff), modes_(std::move(modes)), coefficients_(std::move(coefficients)) {
  if (!(cutoff_ >= 0.0) || !std::isfinite(cutoff_)) throw InvalidInput("cutoff must be finite and >= 0");
  if (static_cast<Index>(modes_.size()) != coefficients_.rows())
    throw InvalidInput("one coefficient row per mode required");
  for (const auto& md : modes_)
    if (md.lambda > cutoff_) throw InvalidInput("mode above the bandlimit cutoff");
  if (!coefficients_.allFinite()) throw InvalidInput("non-finite spectral coefficient");
}

MatrixD BandlimitedSignal::evaluate(const MatrixD& points) const {
  return manifold_.evaluate(modes_, points) * coefficients_;
}

BandlimitedSignal bandlimited_project(const AnalyticManifold& manifold, double cutoff,
                                      const CoefficientGenerator& coefficient) {
  auto modes = manifold.modes_below(cutoff);
  MatrixD c(static_cast<Index>(modes.size()), 1);
  for (std::size_t i = 0; i < modes.size(); ++i) c(static_cast<Index>(i), 0) = coefficient(static_cast<Index>(i), modes[i]);
  return {manifold, cutoff, std::move(modes), std::move(c)};
}

BandlimitedSignal bandlimited_project(const BandlimitedSignal& f, double cutoff) {
  if (!(cutoff >= 0.0)) throw InvalidInput("cutoff must be >= 0");
  std::vector<LbMode> kept;
  std::vector<Index> rows;
  for (std::size_t i = 0; i < f.modes().size(); ++i)
    if (f.modes()[i].lambda <= cutoff) {
      kept.push_back(f.modes()[i]);
      rows.push_back(static_cast<Index>(i));
    }
  MatrixD c(static_cast<Index>(rows.size()), f.channels());
  for (std::size_t i = 0; i < rows.size(); ++i) c.row(static_cast<Index>(i)) = f.coefficients().row(rows[i]);
  return {f.manifold(), std::min(cutoff, f.cutoff()), std::move(kept), std::move(c)};
}

MatrixD MnnResult::evaluate(const AnalyticManifold& manifold, const MatrixD& points) const {
  // Modes with all-zero coefficients are skipped so that a signal passed
  // through unchanged evaluates with the same arithmetic as the original.
  std::vector<LbMode> active;
  std::vector<Index> rows;
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (!coefficients.row(static_cast<Index>(i)).isZero(0.0)) {
      active.push_back(modes[i]);
      rows.push_back(static_cast<Index>(i));
    }
  if (active.empty()) return MatrixD::Zero(points.rows(), coefficients.cols());
  return manifold.evaluate(active, points) * coefficients(rows, Eigen::all);
}

MnnResult mnn_forward(const BandlimitedSignal& f, const GnnParams& params, const SamplingOperator& grid,
                      const MnnOptions& opts) {
  params.validate();
  if (params.filter != FilterKind::heat) throw InvalidInput("manifold network requires heat-kind filters");
  if (f.channels() != params.input_dim())
    throw InvalidInput("signal has " + std::to_string(f.channels()) + " channels, network expects " +
                       std::to_string(params.input_dim()));
  if (grid.manifold.kind() != f.manifold().kind()) throw InvalidInput("grid and signal live on different manifolds");

  const auto& manifold = f.manifold();
  double carry = 0.0;
  if (opts.carry_cutoff) {
    carry = *opts.carry_cutoff;
  } else {
    const double first = manifold.modes(2).back().lambda;
    carry = 25.0 * std::max(f.cutoff(), first);
  }
  if (carry < f.cutoff()) throw InvalidInput("carry cutoff below the signal bandlimit");

  MnnResult result;
  result.modes = manifold.modes_below(carry);
  const auto m = static_cast<Index>(result.modes.size());
  if (grid.size() < opts.points_per_mode * m)
    throw InvalidInput("reference grid has " + std::to_string(grid.size()) + " points, needs >= " +
                       std::to_string(opts.points_per_mode * m) + " for " + std::to_string(m) + " carried modes");

  VectorD lambdas(m);
  for (Index i = 0; i < m; ++i) lambdas(i) = result.modes[static_cast<std::size_t>(i)].lambda;

  // Embed f in the carried basis.
  MatrixD c = MatrixD::Zero(m, f.channels());
  for (std::size_t j = 0; j < f.modes().size(); ++j) {
    const auto it = std::find_if(result.modes.begin(), result.modes.end(),
                                 [&](const LbMode& md) { return same_mode(md, f.modes()[j]); });
    c.row(it - result.modes.begin()) = f.coefficients().row(static_cast<Index>(j));
  }

  const MatrixD phi = manifold.evaluate(result.modes, grid.points);
  const VectorD sqrt_w = grid.weights.cwiseSqrt();
  const MatrixD weighted_phi = sqrt_w.asDiagonal() * phi;
  const Eigen::ColPivHouseholderQR<MatrixD> qr(weighted_phi);

  bool on_grid = false;  // grid_values already hold the exact (non-projected) output
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    MatrixD pre = c * layer.taps[0];
    for (Index k = 1; k < layer.tap_count(); ++k)
      pre.noalias() += (-static_cast<double>(k) * lambdas.array()).exp().matrix().asDiagonal() * c *
                       layer.taps[static_cast<std::size_t>(k)];
    if (layer.activation == Activation::identity) {
      c = std::move(pre);
      on_grid = false;
      continue;
    }
    const MatrixD values = (phi * pre).unaryExpr([a = layer.activation](double v) { return activate(a, v); });
    c = qr.solve(sqrt_w.asDiagonal() * values);
    const double norm = (sqrt_w.asDiagonal() * values).norm();
    const double resid = (weighted_phi * c - sqrt_w.asDiagonal() * values).norm();
    const double rel = norm > 0.0 ? resid / norm : resid;
    result.max_residual = std::max(result.max_residual, rel);
    if (rel > opts.residual_tol)
      throw AccuracyError("manifold network: re-projection residual " + std::to_string(rel) + " in layer " +
                          std::to_string(l) + " exceeds " + std::to_string(opts.residual_tol) +
                          "; use a larger grid, a larger carry cutoff or a smaller bandlimit");
    if (l + 1 == params.layers.size()) {
      result.grid_values = values;
      on_grid = true;
    }
  }
  if (!on_grid) result.grid_values = phi * c;
  result.coefficients = std::move(c);
  return result;
}

}  // namespace mgnn
