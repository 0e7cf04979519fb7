#include <gtest/gtest.h>

#include <random>

#include "mgnn/manifold.hpp"
#include "mgnn/spectral.hpp"
#include "oracles.hpp"

using namespace mgnn;

namespace {

MatrixD random_points(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixD z(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) z(i, j) = g(rng);
  return z;
}

}  // namespace

TEST(GeometricGraph, CoincidentPointsHaveUnitWeight) {
  MatrixD z(3, 2);
  z << 1, 2, 1, 2, 5, 5;
  const auto g = build_geometric_graph(z, std::optional<double>(0.7));
  EXPECT_EQ(g.weights()(0, 1), 1.0);
  EXPECT_EQ(g.weights()(1, 0), 1.0);
}

TEST(GeometricGraph, DistanceEqualToSigmaGivesInverseE) {
  MatrixD z(2, 1);
  z << 0.0, 1.5;
  const auto g = build_geometric_graph(z, std::optional<double>(1.5));
  EXPECT_NEAR(g.weights()(0, 1), 0.36787944117144233, 1e-15);
}

TEST(GeometricGraph, ScalarLineByHand) {
  MatrixD z(3, 1);
  z << 0, 1, 2;
  const auto g = build_geometric_graph(z, std::optional<double>(1.0));
  EXPECT_NEAR(g.weights()(0, 1), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(g.weights()(1, 2), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(g.weights()(0, 2), 0.018315638888734179, 1e-15);
  EXPECT_EQ(*g.sigma(), 1.0);
}

TEST(GeometricGraph, InvariantsOnRandomInputs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = random_points(3 + static_cast<Index>(seed), 4, seed);
    const auto g = build_geometric_graph(z);
    const auto& w = g.weights();
    EXPECT_TRUE(w.isApprox(w.transpose(), 0.0));
    EXPECT_EQ(w.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(w.minCoeff(), 0.0);
    EXPECT_LE(w.maxCoeff(), 1.0);
  }
}

TEST(GeometricGraph, MedianHeuristicSigma) {
  MatrixD z(3, 1);
  z << 0, 1, 3;  // squared distances 1, 4, 9 -> median 4
  const auto g = build_geometric_graph(z);
  EXPECT_DOUBLE_EQ(*g.sigma(), 2.0);
}

TEST(GeometricGraph, MedianFallsBackToNonzeroDistances) {
  MatrixD z(5, 1);
  z << 0, 0, 0, 0, 2;  // six zero pairs, four 4s: median 0, median of nonzero 4
  const auto g = build_geometric_graph(z);
  EXPECT_DOUBLE_EQ(*g.sigma(), 2.0);
  EXPECT_EQ(g.weights()(0, 1), 1.0);
}

TEST(GeometricGraph, Errors) {
  MatrixD one(1, 2);
  one << 0, 0;
  EXPECT_THROW(build_geometric_graph(one), InvalidInput);
  MatrixD same = MatrixD::Ones(4, 3);
  EXPECT_THROW(build_geometric_graph(same), DegenerateData);
  MatrixD bad = MatrixD::Zero(3, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(build_geometric_graph(bad), InvalidInput);
  MatrixD ok = random_points(4, 2, 1);
  EXPECT_THROW(build_geometric_graph(ok, std::optional<double>(0.0)), InvalidInput);
  EXPECT_THROW(build_geometric_graph(ok, std::optional<double>(-1.0)), InvalidInput);
}

TEST(GeometricGraph, EpsilonDropsLightEdges) {
  MatrixD z(3, 1);
  z << 0, 1, 2;
  const auto g = build_geometric_graph(z, std::optional<double>(1.0), SparsifyPolicy::threshold(0.1));
  EXPECT_EQ(g.weights()(0, 2), 0.0);
  EXPECT_GT(g.weights()(0, 1), 0.0);
  EXPECT_EQ(g.sparsify_policy(), SparsifyPolicy::threshold(0.1));
}

TEST(GeometricGraph, KnnKeepsHeaviestAndSymmetrizes) {
  MatrixD z(4, 1);
  z << 0, 1, 3, 7;
  const auto g = build_geometric_graph(z, std::optional<double>(3.0), SparsifyPolicy::nearest(1));
  const auto& w = g.weights();
  EXPECT_GT(w(0, 1), 0.0);
  EXPECT_GT(w(2, 1), 0.0);  // 2's nearest is 1
  EXPECT_GT(w(3, 2), 0.0);  // 3's nearest is 2, kept on both sides
  EXPECT_EQ(w(2, 3), w(3, 2));
  EXPECT_EQ(w(0, 3), 0.0);
  EXPECT_EQ(w(0, 2), 0.0);
}

TEST(GeometricGraph, DefaultPolicyBySize) {
  EXPECT_EQ(SparsifyPolicy::for_size(64).kind, SparsifyKind::none);
  EXPECT_EQ(SparsifyPolicy::for_size(65).kind, SparsifyKind::knn);
  EXPECT_EQ(SparsifyPolicy::for_size(65).k, 8);
  EXPECT_EQ(SparsifyPolicy::for_size(1024).k, 11);
}

TEST(Graph, RejectsBrokenWeights) {
  MatrixD w = MatrixD::Zero(2, 2);
  w(0, 1) = 1.0;
  EXPECT_THROW(GraphD{w}, InvalidInput);  // asymmetric
  w(1, 0) = 1.0;
  w(0, 0) = 0.5;
  EXPECT_THROW(GraphD{w}, InvalidInput);  // diagonal
  w(0, 0) = 0.0;
  w(0, 1) = w(1, 0) = -1.0;
  EXPECT_THROW(GraphD{w}, InvalidInput);
}

TEST(ShiftOperator, TwoNodePathLaplacian) {
  MatrixD w(2, 2);
  w << 0, 1, 1, 0;
  const auto l = shift_operator(GraphD(w), GsoKind::combinatorial_laplacian);
  MatrixD expected(2, 2);
  expected << 1, -1, -1, 1;
  EXPECT_EQ(l.matrix, expected);
}

TEST(ShiftOperator, LaplacianRowSumsAndPsd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = build_geometric_graph(random_points(12, 3, seed));
    const auto l = shift_operator(g, GsoKind::combinatorial_laplacian);
    EXPECT_LE(l.matrix.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(eig_sym(l).lambdas.minCoeff(), -1e-10);
    const auto a = shift_operator(g, GsoKind::adjacency);
    EXPECT_EQ(a.matrix, g.weights());
  }
}

TEST(ShiftOperator, NormalizedLaplacianMapsIsolatedNodesToZero) {
  MatrixD w = MatrixD::Zero(3, 3);
  w(0, 1) = w(1, 0) = 2.0;
  const auto l = shift_operator(GraphD(w), GsoKind::normalized_laplacian);
  EXPECT_NEAR(l.matrix(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(l.matrix(0, 1), -1.0, 1e-15);
  EXPECT_EQ(l.matrix.row(2).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(l.matrix.col(2).cwiseAbs().sum(), 0.0);
}

TEST(ShiftOperator, RenormalizedAdjacencyHasUnitTopEigenvalue) {
  const auto g = build_geometric_graph(random_points(9, 2, 4));
  const auto s = shift_operator(g, GsoKind::renormalized_adjacency);
  const auto e = eig_sym(s);
  EXPECT_NEAR(e.lambdas.maxCoeff(), 1.0, 1e-12);
  EXPECT_GT(e.lambdas.minCoeff(), -1.0);
}

TEST(ShiftOperator, PointCloudNeedsMetadata) {
  const auto g = build_geometric_graph(random_points(5, 2, 2));
  EXPECT_THROW(shift_operator(g, GsoKind::pointcloud_laplacian), InvalidInput);
  MatrixD w(2, 2);
  w << 0, 1, 1, 0;
  EXPECT_THROW(shift_operator(GraphD(w), GsoKind::pointcloud_laplacian, PointCloudScale{}), InvalidInput);
}

TEST(ShiftOperator, PointCloudLiteralScalingConstant) {
  const auto g = build_geometric_graph(random_points(6, 2, 3), std::optional<double>(0.8));
  const auto l = shift_operator(g, GsoKind::pointcloud_laplacian, PointCloudScale{2, 3.0, false});
  const auto comb = shift_operator(g, GsoKind::combinatorial_laplacian);
  const double t = 0.8 * 0.8 / 4.0;
  const double c = 3.0 / (6.0 * t * std::numbers::pi * 0.8 * 0.8);
  EXPECT_LE((l.matrix - c * comb.matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ShiftOperator, PointCloudRowSumsZeroAndPsd) {
  const AnalyticManifold circle(ManifoldKind::circle);
  Rng rng(5);
  const auto pts = sample_uniform(circle, 200, rng);
  const auto g = build_geometric_graph(circle.ambient(pts.points), std::optional<double>(0.3));
  for (bool renorm : {false, true}) {
    const auto l = shift_operator(g, GsoKind::pointcloud_laplacian, PointCloudScale{1, circle.volume(), renorm});
    EXPECT_LE(l.matrix.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((l.matrix - l.matrix.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(eig_sym(l).lambdas.minCoeff(), -1e-9);
  }
}

// The calibrated point-cloud operator against the finite-difference circle
// Laplacian on a 4096-point grid.
TEST(ShiftOperator, PointCloudCircleSpectrumMatchesFiniteDifferences) {
  const Eigen::VectorXd fd = oracle::fd_circle_spectrum(4096);
  ASSERT_NEAR(fd(0), 0.0, 1e-9);
  const AnalyticManifold circle(ManifoldKind::circle);
  Rng rng(11);
  const auto pts = sample_uniform(circle, 1024, rng);
  const auto g = build_geometric_graph(circle.ambient(pts.points), std::optional<double>(0.15),
                                       SparsifyPolicy::none());
  const auto e = eig_sym(shift_operator(g, GsoKind::pointcloud_laplacian, PointCloudScale{1, circle.volume(), true}));
  for (Index i = 1; i <= 5; ++i) EXPECT_NEAR(e.lambdas(i) / fd(i), 1.0, 0.1) << "eigenvalue " << i;
}
