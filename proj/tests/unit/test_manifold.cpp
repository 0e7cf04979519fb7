#include <gtest/gtest.h>

#include <numbers>

#include "mgnn/manifold.hpp"
#include "oracles.hpp"

using namespace mgnn;

namespace {

const AnalyticManifold kCircle(ManifoldKind::circle);
const AnalyticManifold kSphere(ManifoldKind::sphere);
const AnalyticManifold kTorus(ManifoldKind::flat_torus);

GnnParams heat_layer(std::vector<MatrixD> taps, Activation a) {
  GnnParams p;
  p.filter = FilterKind::heat;
  p.gso = GsoKind::pointcloud_laplacian;
  p.layers.push_back({std::move(taps), a});
  return p;
}

}  // namespace

TEST(LbEigenpairs, CircleMatchesFiniteDifferences) {
  const auto e = lb_eigenpairs(kCircle, 6);
  const std::vector<double> expected = {0, 1, 1, 4, 4, 9};
  const Eigen::VectorXd fd = oracle::fd_circle_spectrum(4096);
  for (Index i = 0; i < 6; ++i) {
    EXPECT_EQ(e.lambdas(i), expected[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(e.lambdas(i), fd(i), 1e-4);
  }
}

TEST(LbEigenpairs, SphereMatchesFiniteElements) {
  const auto e = lb_eigenpairs(kSphere, 9);
  const std::vector<double> expected = {0, 2, 2, 2, 6, 6, 6, 6, 6};
  const Eigen::VectorXd fe = oracle::fe_sphere_spectrum(3);
  for (Index i = 0; i < 9; ++i) {
    EXPECT_EQ(e.lambdas(i), expected[static_cast<std::size_t>(i)]);
    if (i > 0) EXPECT_NEAR(fe(i) / e.lambdas(i), 1.0, 0.02) << "mode " << i;
  }
}

TEST(LbEigenpairs, TorusSumsOfSquares) {
  const auto e = lb_eigenpairs(kTorus, 13);
  const std::vector<double> expected = {0, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4};
  for (Index i = 0; i < 13; ++i) EXPECT_EQ(e.lambdas(i), expected[static_cast<std::size_t>(i)]);
}

TEST(LbEigenpairs, FirstModeIsConstant) {
  for (const auto& m : {kCircle, kSphere, kTorus}) {
    Rng rng(1);
    const auto pts = sample_uniform(m, 50, rng);
    const auto modes = m.modes(1);
    EXPECT_EQ(modes[0].lambda, 0.0);
    const MatrixD v = m.evaluate(modes, pts.points);
    EXPECT_LE((v.array() - 1.0).abs().maxCoeff(), 1e-14) << m.name();
  }
}

TEST(LbEigenpairs, Errors) { EXPECT_THROW(kCircle.modes(0), InvalidInput); }

TEST(LbEigenpairs, EigenvaluesNondecreasing) {
  for (const auto& m : {kCircle, kSphere, kTorus}) {
    const auto e = lb_eigenpairs(m, 60);
    for (Index i = 1; i < 60; ++i) EXPECT_LE(e.lambdas(i - 1), e.lambdas(i));
  }
}

TEST(LbEigenpairs, OrthonormalByQuadrature) {
  for (const auto& m : {kCircle, kSphere, kTorus}) {
    const auto grid = reference_grid(m, 4000);
    const auto modes = m.modes(20);
    const MatrixD phi = m.evaluate(modes, grid.points);
    const MatrixD gram = phi.transpose() * grid.weights.asDiagonal() * phi;
    EXPECT_LE((gram - MatrixD::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-3) << m.name();
  }
}

// Eigenfunctions really are eigenfunctions: second differences along the
// coordinates reproduce -lambda phi.
TEST(LbEigenpairs, EigenfunctionEquationOnCircleAndTorus) {
  const double h = 1e-4;
  for (const auto& md : kCircle.modes(9)) {
    MatrixD p(3, 1);
    p << 0.7 - h, 0.7, 0.7 + h;
    const MatrixD v = kCircle.evaluate(std::span<const LbMode>(&md, 1), p);
    EXPECT_NEAR(-(v(0, 0) - 2 * v(1, 0) + v(2, 0)) / (h * h), md.lambda * v(1, 0), 1e-4);
  }
  for (const auto& md : kTorus.modes(20)) {
    MatrixD p(5, 2);
    p << 0.4, 1.3, 0.4 - h, 1.3, 0.4 + h, 1.3, 0.4, 1.3 - h, 0.4, 1.3 + h;
    const MatrixD v = kTorus.evaluate(std::span<const LbMode>(&md, 1), p);
    const double lap = (v(1, 0) + v(2, 0) + v(3, 0) + v(4, 0) - 4 * v(0, 0)) / (h * h);
    EXPECT_NEAR(-lap, md.lambda * v(0, 0), 1e-4);
  }
}

// Spherical harmonics of degree l, extended homogeneously to R^3, are
// harmonic: the Laplacian of r^l Y(x/r) vanishes.
TEST(LbEigenpairs, SphericalHarmonicsAreHarmonicPolynomials) {
  const double h = 1e-3;
  const Eigen::Vector3d x0(0.3, -0.5, 0.6);
  for (const auto& md : kSphere.modes(25)) {
    auto f = [&](const Eigen::Vector3d& x) {
      const double r = x.norm();
      MatrixD p(1, 3);
      p.row(0) = (x / r).transpose();
      return std::pow(r, md.p) * kSphere.evaluate(std::span<const LbMode>(&md, 1), p)(0, 0);
    };
    double lap = 0.0;
    for (int d = 0; d < 3; ++d) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(d) = h;
      lap += (f(x0 + e) - 2 * f(x0) + f(x0 - e)) / (h * h);
    }
    EXPECT_NEAR(lap, 0.0, 1e-4) << "l=" << md.p << " m=" << md.q;
  }
}

TEST(SampleUniform, CircleMomentOracle) {
  Rng rng(3);
  const auto s = sample_uniform(kCircle, 100000, rng);
  const double mean = s.points.col(0).array().cos().mean();
  EXPECT_LE(std::abs(mean), 3.0 * std::sqrt(0.5 / 100000.0));
  EXPECT_GE(s.points.minCoeff(), 0.0);
  EXPECT_LT(s.points.maxCoeff(), 2 * std::numbers::pi);
}

TEST(SampleUniform, SphereMomentOracle) {
  Rng rng(4);
  const auto s = sample_uniform(kSphere, 100000, rng);
  for (Index d = 0; d < 3; ++d)
    EXPECT_LE(std::abs(s.points.col(d).mean()), 3.0 * std::sqrt(1.0 / 3.0 / 100000.0));
  EXPECT_LE((s.points.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(SampleUniform, Deterministic) {
  Rng a(9), b(9);
  EXPECT_EQ(sample_uniform(kTorus, 100, a).points, sample_uniform(kTorus, 100, b).points);
  EXPECT_THROW(sample_uniform(kTorus, 0, a), InvalidInput);
}

TEST(SamplingOperator, ConstantAndLinear) {
  Rng rng(5);
  const auto p = sample_uniform(kSphere, 40, rng);
  const VectorD c = p.evaluate([](const Eigen::RowVectorXd&) { return 2.5; });
  EXPECT_TRUE((c.array() == 2.5).all());
  auto f = [](const Eigen::RowVectorXd& x) { return x(0) * x(1); };
  auto g = [](const Eigen::RowVectorXd& x) { return std::exp(x(2)); };
  const VectorD lhs = p.evaluate([&](const Eigen::RowVectorXd& x) { return 2 * f(x) - 3 * g(x); });
  EXPECT_LE((lhs - (2 * p.evaluate(f) - 3 * p.evaluate(g))).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SamplingOperator, EmpiricalInnerProductsConverge) {
  // |<P f, P phi_i>/N - <f, phi_i>| = O(N^-1/2), checked at 3 sigma over 20 trials.
  const auto f = bandlimited_project(kCircle, 4.0, [](Index i, const LbMode&) { return 1.0 / (1.0 + i); });
  Rng rng(6);
  const Index n = 2000;
  for (std::size_t i = 0; i < f.modes().size(); ++i) {
    double sum = 0.0, sum2 = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto p = sample_uniform(kCircle, n, rng);
      const MatrixD fv = f.sample(p);
      const MatrixD phi = kCircle.evaluate(std::span<const LbMode>(&f.modes()[i], 1), p.points);
      const double err = (fv.col(0).dot(phi.col(0))) / static_cast<double>(n) - f.coefficients()(static_cast<Index>(i), 0);
      sum += err;
      sum2 += err * err;
    }
    const double rms = std::sqrt(sum2 / 20.0);
    const double bound = 3.0 * f.coefficients().col(0).norm() * std::sqrt(2.0) * 2.0 / std::sqrt(static_cast<double>(n));
    EXPECT_LE(rms, bound);
    EXPECT_LE(std::abs(sum / 20.0), 3.0 * bound / std::sqrt(20.0));
  }
}

TEST(Bandlimited, ProjectionRetainsExactModeCount) {
  EXPECT_EQ(bandlimited_project(kCircle, 4.5, [](Index, const LbMode&) { return 1.0; }).modes().size(), 5u);
  const auto c = bandlimited_project(kCircle, 0.0, [](Index, const LbMode&) { return 3.0; });
  ASSERT_EQ(c.modes().size(), 1u);
  MatrixD pts(2, 1);
  pts << 0.1, 2.0;
  EXPECT_EQ(c.evaluate(pts), MatrixD::Constant(2, 1, 3.0));
  EXPECT_EQ(bandlimited_project(kSphere, 6.0, [](Index, const LbMode&) { return 1.0; }).modes().size(), 9u);
  EXPECT_THROW(bandlimited_project(kCircle, -1.0, [](Index, const LbMode&) { return 1.0; }), InvalidInput);
}

TEST(Bandlimited, ProjectionIsIdempotent) {
  const auto f = bandlimited_project(kTorus, 5.0, [](Index i, const LbMode&) { return std::sin(1.0 + i); });
  const auto once = bandlimited_project(f, 2.0);
  const auto twice = bandlimited_project(once, 2.0);
  EXPECT_EQ(once.coefficients(), twice.coefficients());
  EXPECT_EQ(once.modes().size(), twice.modes().size());
  for (const auto& m : once.modes()) EXPECT_LE(m.lambda, 2.0);
}

TEST(Bandlimited, RejectsModesAboveCutoff) {
  auto modes = kCircle.modes(4);
  EXPECT_THROW(BandlimitedSignal(kCircle, 1.0, modes, MatrixD::Ones(4, 1)), InvalidInput);
}

TEST(MnnForward, IdentityNetworkReproducesSignal) {
  const auto f = bandlimited_project(kCircle, 9.0, [](Index i, const LbMode&) { return 0.5 - 0.1 * i; });
  const auto grid = reference_grid(kCircle, 2000);
  const auto r = mnn_forward(f, heat_layer({MatrixD::Identity(1, 1)}, Activation::identity), grid);
  EXPECT_LE((r.grid_values - f.sample(grid)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MnnForward, HeatShiftScalesEigenfunction) {
  for (const auto& m : {kCircle, kSphere}) {
    const auto modes = m.modes(4);
    const auto f = bandlimited_project(m, modes[3].lambda, [](Index i, const LbMode&) { return i == 3 ? 1.0 : 0.0; });
    const auto grid = reference_grid(m, 9000);
    MnnOptions opts;
    opts.carry_cutoff = modes[3].lambda;
    const auto r = mnn_forward(f, heat_layer({MatrixD::Zero(1, 1), MatrixD::Identity(1, 1)}, Activation::identity), grid, opts);
    const MatrixD expected = std::exp(-modes[3].lambda) * m.evaluate(std::span<const LbMode>(&modes[3], 1), grid.points);
    EXPECT_LE((r.grid_values - expected).cwiseAbs().maxCoeff(), 1e-12) << m.name();
  }
}

TEST(MnnForward, GridRefinementSelfOracle) {
  Rng rng(8);
  std::normal_distribution<double> g;
  const auto f = bandlimited_project(kCircle, 9.0, [&](Index, const LbMode& m) { return g(rng) / (1.0 + m.lambda); });
  GnnParams p;
  p.filter = FilterKind::heat;
  p.layers.push_back({{MatrixD::Zero(1, 3), MatrixD(MatrixD::Constant(1, 3, 0.8)), MatrixD(MatrixD::Constant(1, 3, -0.4))}, Activation::tanh});
  MatrixD h1(3, 1), h2(3, 1);
  h1 << 0.5, -0.3, 0.9;
  h2 << 0.1, 0.2, -0.2;
  p.layers.push_back({{MatrixD::Zero(3, 1), h1, h2}, Activation::identity});
  const auto coarse = mnn_forward(f, p, reference_grid(kCircle, 2000));
  const auto fine = mnn_forward(f, p, reference_grid(kCircle, 4000));
  const auto probe = reference_grid(kCircle, 777).points;
  const MatrixD a = coarse.evaluate(kCircle, probe), b = fine.evaluate(kCircle, probe);
  EXPECT_LE((a - b).norm() / b.norm(), 1e-4);
  EXPECT_LE(coarse.max_residual, 1e-3);
}

TEST(MnnForward, Errors) {
  const auto f = bandlimited_project(kCircle, 9.0, [](Index, const LbMode&) { return 1.0; });
  auto p = heat_layer({MatrixD::Identity(1, 1)}, Activation::tanh);
  EXPECT_THROW(mnn_forward(f, p, reference_grid(kCircle, 100)), InvalidInput);  // grid too coarse
  p.filter = FilterKind::poly;
  EXPECT_THROW(mnn_forward(f, p, reference_grid(kCircle, 4000)), InvalidInput);
  // A sharp nonlinearity on a thin carried basis cannot be re-projected.
  auto sharp = heat_layer({MatrixD::Constant(1, 1, 50.0)}, Activation::tanh);
  MnnOptions opts;
  opts.carry_cutoff = 9.0;
  EXPECT_THROW(mnn_forward(f, sharp, reference_grid(kCircle, 4000), opts), AccuracyError);
}
