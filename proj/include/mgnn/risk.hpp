#pragma once

// Risk estimation, generalization-gap sweeps and the graph -> manifold
// convergence experiment.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgnn/manifold.hpp"
#include "mgnn/neural.hpp"

namespace mgnn {

/// Mean loss over the given graphs.
double empirical_risk(const GnnParams& params, std::span<const GraphInstance> graphs, LossKind kind);

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Index trials = 0;
};

/// Monte-Carlo statistical risk: mean loss over `trials` freshly drawn
/// anchored neighborhood graphs of `n_nodes` nodes from `pool`.
RiskEstimate statistical_risk_mc(const GnnParams& params, const EmbeddingDataset& data,
                                 std::span<const Index> pool, Index n_nodes, Index trials, Rng& rng,
                                 LossKind kind, const NeighborhoodOptions& graph = {});

struct SlopeFit {
  std::optional<double> slope;
  int used = 0;
  int excluded = 0;  // nonpositive values dropped before the log fit
};

/// Least-squares slope of log(value) against log(N).
SlopeFit slope_fit(std::span<const double> n, std::span<const double> values);

// ---------------------------------------------------------------------------
// Generalization gap.

/// Defaults match gcn_preset.
struct ModelSpec {
  std::vector<int> hidden = {32};
  int taps = 2;
  GsoKind gso = GsoKind::renormalized_adjacency;
  FilterKind filter = FilterKind::poly;
  Activation activation = Activation::relu;
};

struct GenGapConfig {
  std::vector<int> node_counts = {5, 10, 20, 25, 50};
  int seeds = 10;
  std::uint64_t seed_base = 0;
  TrainConfig train;
  ModelSpec model;
  std::vector<int> mlp_hidden = {32};
  NeighborhoodOptions graph;
  int mc_trials = 200;
  int threads = 1;
};

/// One (N, seed) training run.
struct GenGapCell {
  int n_nodes = 0;
  int seed_index = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double empirical_risk = 0.0;
  RiskEstimate statistical_risk;
};

struct GenGapRow {
  int n_nodes = 0;
  int seeds = 0;
  double train_acc_mean = 0.0;
  double train_acc_std = 0.0;
  double test_acc_mean = 0.0;
  double test_acc_std = 0.0;
  double acc_gap = 0.0;
  double acc_gap_std = 0.0;
  double emp_risk_mean = 0.0;
  double emp_risk_std = 0.0;
  double stat_risk = 0.0;
  double stat_risk_se = 0.0;
  double risk_gap = 0.0;  // stat_risk - emp_risk_mean
  double mlp_acc_gap = 0.0;
};

struct GenGapReport {
  std::vector<GenGapRow> rows;  // sorted by N
  std::optional<double> slope;  // log-log slope of acc_gap vs N (>= 3 distinct N)
  int slope_excluded = 0;
  double mlp_acc_gap = 0.0;
  std::vector<double> mlp_gaps;  // per seed
  std::vector<GenGapCell> cells;
  GenGapConfig config;
};

/// Trains one GNN per (N, seed) on anchored neighborhood graphs of the train
/// split, evaluates anchored accuracy on both splits, and trains the MLP
/// baseline once per seed.
GenGapReport gen_gap_sweep(const EmbeddingDataset& data, const GenGapConfig& cfg);

/// Effective worker count: `requested`, capped by MGNN_THREADS when set.
int thread_budget(int requested);

// ---------------------------------------------------------------------------
// Convergence of the graph network to the manifold network.

struct CalibrationResult {
  Index n_nodes = 0;
  double sigma = 0.0;
  VectorD observed;
  VectorD expected;
  double max_rel_error = 0.0;
};

/// Smallest `count` nonzero eigenvalues of the point-cloud Laplacian built on
/// `n` uniform samples, against the analytic spectrum.
CalibrationResult calibrate_pointcloud(const AnalyticManifold& manifold, Index n, double sigma, Index count, Rng& rng,
                                       bool density_renormalized = true);

struct ConvergenceConfig {
  std::vector<int> node_counts = {64, 128, 256, 512};
  int trials = 10;
  /// Kernel width at n_ref; other sizes use sigma_ref (N / n_ref)^(-1/(m+4)).
  /// Empty picks a per-manifold default.
  std::optional<double> sigma_ref;
  Index n_ref = 1024;
  bool density_renormalized = true;
  Index grid_points = 4000;
  MnnOptions mnn;
  /// Verify the nonlinearity and low-pass preconditions before running.
  bool check_preconditions = true;
  double low_pass_order = 1.0;
  /// Abort when the calibration spectrum is off by more than this.
  double calibration_tolerance = 0.25;
  Index calibration_nodes = 1024;
  Index calibration_modes = 5;
};

double default_sigma_ref(const AnalyticManifold& manifold);
double convergence_sigma(const AnalyticManifold& manifold, Index n, const ConvergenceConfig& cfg);

struct ConvergenceRow {
  int n_nodes = 0;
  int trials = 0;
  double mean = 0.0;  // of |Phi(P f; H, L_N) - P Phi(f; H, L)|_2 / sqrt(N)
  double std = 0.0;
  double eigengap = 0.0;  // mean theta_M of L_N
  double mbar = 0.0;      // mean 2 |P_N f|_2
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope;
  int slope_excluded = 0;
  double reference_slope = 0.0;  // -1 / (m + 4)
  std::string manifold;
  double cutoff = 0.0;
  CalibrationResult calibration;
};

ConvergenceReport convergence_experiment(const AnalyticManifold& manifold, const GnnParams& params,
                                         const BandlimitedSignal& f, const ConvergenceConfig& cfg, Rng& rng);

}  // namespace mgnn
