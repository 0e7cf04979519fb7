#pragma once

// Dense symmetric eigendecomposition and the two filter families that act on
// graph signals: polynomials in a shift operator, and combinations of heat
// semigroup powers exp(-k L).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mgnn/graph.hpp"

namespace mgnn {

inline constexpr Index kDenseEigenCap = 2048;

/// Eigenvalues ascending; column i of `vectors` pairs with lambdas(i).
template <typename Scalar>
struct EigenSystem {
  Vector<Scalar> lambdas;
  Matrix<Scalar> vectors;

  Index size() const { return lambdas.size(); }
};

using EigenSystemD = EigenSystem<double>;

template <typename Derived>
EigenSystem<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& s,
                                              Index cap = kDenseEigenCap) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols() || s.rows() < 1) throw InvalidInput("eig_sym: matrix must be square and nonempty");
  if (s.rows() > cap)
    throw CapacityError("eig_sym: size " + std::to_string(s.rows()) + " exceeds dense solver cap " +
                        std::to_string(cap));
  const Scalar asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= Scalar(1e-9))) throw InvalidInput("eig_sym: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(s.eval());
  if (solver.info() != Eigen::Success) throw InvalidInput("eig_sym: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

template <typename Scalar>
EigenSystem<Scalar> eig_sym(const Gso<Scalar>& s, Index cap = kDenseEigenCap) {
  return eig_sym(s.matrix, cap);
}

enum class FilterKind { poly, heat };

inline std::string to_string(FilterKind k) { return k == FilterKind::poly ? "poly" : "heat"; }

inline FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "poly") return FilterKind::poly;
  if (s == "heat") return FilterKind::heat;
  throw InvalidInput("unknown filter kind '" + s + "'");
}

/// Taps h_0..h_{K-1} of a scalar filter.
template <typename Scalar>
struct FilterCoeffs {
  Vector<Scalar> h;
  FilterKind kind = FilterKind::poly;

  FilterCoeffs(Vector<Scalar> taps, FilterKind k) : h(std::move(taps)), kind(k) {
    if (h.size() < 1) throw InvalidInput("filter needs at least one tap");
    if (!h.allFinite()) throw InvalidInput("filter taps must be finite");
  }
  FilterCoeffs(std::initializer_list<Scalar> taps, FilterKind k)
      : FilterCoeffs(Eigen::Map<const Vector<Scalar>>(taps.begin(), static_cast<Index>(taps.size())), k) {}

  Index taps() const { return h.size(); }
};

using FilterCoeffsD = FilterCoeffs<double>;

/// sum_k h_k S^k x by Horner accumulation: h_0 x + S (h_1 x + S (h_2 x + ...)).
template <typename Scalar, typename Derived>
GraphSignal<Scalar> graph_filter_poly(const Matrix<Scalar>& s, const Eigen::MatrixBase<Derived>& x,
                                      const FilterCoeffs<Scalar>& h) {
  if (s.rows() != s.cols() || s.rows() != x.rows())
    throw InvalidInput("graph_filter_poly: shift operator and signal sizes disagree");
  const Index k = h.taps();
  GraphSignal<Scalar> acc = h.h(k - 1) * x;
  for (Index i = k - 2; i >= 0; --i) acc = s * acc + h.h(i) * x;
  return acc;
}

template <typename Scalar, typename Derived>
GraphSignal<Scalar> graph_filter_poly(const Gso<Scalar>& s, const Eigen::MatrixBase<Derived>& x,
                                      const FilterCoeffs<Scalar>& h) {
  return graph_filter_poly(s.matrix, x, h);
}

/// Eigenvalues in [-1e-6, 0) are treated as zero; anything more negative means
/// the operator is not PSD.
template <typename Scalar>
Vector<Scalar> clamped_spectrum(const EigenSystem<Scalar>& eig) {
  if (eig.size() > 0 && eig.lambdas.minCoeff() < Scalar(-1e-6))
    throw InvalidInput("heat filter requires a positive semidefinite Laplacian");
  return eig.lambdas.cwiseMax(Scalar(0));
}

/// sum_k h_k exp(-k L) x evaluated spectrally. The k = 0 term is the identity
/// and is applied directly.
template <typename Scalar, typename Derived>
GraphSignal<Scalar> graph_filter_heat(const EigenSystem<Scalar>& eig, const Eigen::MatrixBase<Derived>& x,
                                      const FilterCoeffs<Scalar>& h) {
  if (eig.size() != x.rows()) throw InvalidInput("graph_filter_heat: eigensystem and signal sizes disagree");
  const Vector<Scalar> lam = clamped_spectrum(eig);
  GraphSignal<Scalar> out = h.h(0) * x;
  if (h.taps() == 1) return out;
  Vector<Scalar> response = Vector<Scalar>::Zero(lam.size());
  for (Index k = 1; k < h.taps(); ++k) response += h.h(k) * (-Scalar(k) * lam.array()).exp().matrix();
  out.noalias() += eig.vectors * (response.asDiagonal() * (eig.vectors.transpose() * x));
  return out;
}

/// Response at graph frequency a: sum h_k a^k (poly) or sum h_k exp(-k a) (heat).
template <typename Scalar>
Scalar frequency_response(const FilterCoeffs<Scalar>& h, Scalar a) {
  Scalar acc(0);
  if (h.kind == FilterKind::poly) {
    for (Index k = h.taps() - 1; k >= 0; --k) acc = acc * a + h.h(k);
  } else {
    const Scalar z = std::exp(-a);
    for (Index k = h.taps() - 1; k >= 0; --k) acc = acc * z + h.h(k);
  }
  return acc;
}

struct LowPassReport {
  bool is_low_pass = false;
  /// Fitted slope of log|h(a)| against log a over the grid tail;
  /// -infinity when the response vanishes there.
  double decay_exponent = 0.0;
  /// Required decay d; the verdict allows 0.25 of slack.
  double required_decay = 0.0;
};

/// Least-squares slope of y against x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Checks |h(a)| = O(a^-d) by fitting log|h| against log a over the upper
/// half of the grid. The grid must span at least two decades of positive a.
template <typename Scalar>
LowPassReport low_pass_check(const FilterCoeffs<Scalar>& h, double d, std::span<const double> grid) {
  if (!(d > 0.0)) throw InvalidInput("low_pass_check: decay order must be positive");
  std::vector<double> a(grid.begin(), grid.end());
  std::sort(a.begin(), a.end());
  if (a.size() < 2 || !(a.front() > 0.0) || !(a.back() / a.front() >= 100.0 * (1.0 - 1e-12)))
    throw InvalidInput("low_pass_check: grid must cover at least two decades of positive values");

  LowPassReport report;
  report.required_decay = d;
  std::vector<double> lx, ly;
  for (std::size_t i = a.size() / 2; i < a.size(); ++i) {
    const double r = std::abs(static_cast<double>(frequency_response(h, Scalar(a[i]))));
    if (r > 0.0 && std::isfinite(r)) {
      lx.push_back(std::log(a[i]));
      ly.push_back(std::log(r));
    }
  }
  if (lx.size() < 2) {
    // Vanishes on the tail: faster than any polynomial.
    report.decay_exponent = -std::numeric_limits<double>::infinity();
    report.is_low_pass = true;
    return report;
  }
  report.decay_exponent = ls_slope(lx, ly);
  report.is_low_pass = report.decay_exponent <= -d + 0.25;
  return report;
}

/// Log-spaced grid of `points` values in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    g[static_cast<std::size_t>(i)] =
        std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / std::max(1, points - 1));
  if (points > 0) g.front() = lo;
  if (points > 1) g.back() = hi;
  return g;
}

/// min_{i=1..M} |lambda_i - lambda_{i+1}| over the first M+1 eigenvalues.
template <typename Scalar>
Scalar eigengap(const EigenSystem<Scalar>& eig, Index m) {
  if (m < 1 || m + 1 > eig.size()) throw InvalidInput("eigengap: need 1 <= M and M + 1 <= N");
  Scalar gap = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < m; ++i) gap = std::min(gap, std::abs(eig.lambdas(i + 1) - eig.lambdas(i)));
  return gap;
}

template <typename Scalar>
Scalar eigengap(std::span<const Scalar> lambdas, Index m) {
  EigenSystem<Scalar> e{Eigen::Map<const Vector<Scalar>>(lambdas.data(), static_cast<Index>(lambdas.size())),
                        Matrix<Scalar>()};
  return eigengap(e, m);
}

}  // namespace mgnn
