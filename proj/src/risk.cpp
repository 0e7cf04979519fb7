#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "mgnn/risk.hpp"

namespace mgnn {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values. Shifted by the
/// first value so identical inputs give exactly 0.
double std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double k = v.front();
  double s = 0.0, s2 = 0.0;
  for (double x : v) {
    s += x - k;
    s2 += (x - k) * (x - k);
  }
  const auto n = static_cast<double>(v.size());
  return std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1.0)));
}

Rng stream(std::initializer_list<std::uint64_t> key) {
  std::seed_seq seq(key.begin(), key.end());
  return Rng(seq);
}

/// Runs fn(0..count-1) on up to `threads` workers; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn fn) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

GnnArchitecture architecture_of(const ModelSpec& m, int input_dim, int classes) {
  GnnArchitecture a;
  a.dims.push_back(input_dim);
  a.dims.insert(a.dims.end(), m.hidden.begin(), m.hidden.end());
  a.dims.push_back(classes);
  a.taps = m.taps;
  a.filter = m.filter;
  a.gso = m.gso;
  a.hidden = m.activation;
  return a;
}

MatrixD rows_of(const MatrixD& x, std::span<const Index> rows) {
  MatrixD out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

}  // namespace

double empirical_risk(const GnnParams& params, std::span<const GraphInstance> graphs, LossKind kind) {
  if (graphs.empty()) throw InvalidInput("empirical risk over an empty set");
  double total = 0.0;
  for (const auto& g : graphs) total += loss(gnn_forward(g.signal, params, g.shift(params.filter)).output, g.targets, kind).value;
  return total / static_cast<double>(graphs.size());
}

RiskEstimate statistical_risk_mc(const GnnParams& params, const EmbeddingDataset& data, std::span<const Index> pool,
                                 Index n_nodes, Index trials, Rng& rng, LossKind kind,
                                 const NeighborhoodOptions& graph) {
  if (trials < 2) throw InvalidInput("statistical risk needs at least 2 trials");
  if (static_cast<Index>(pool.size()) < n_nodes)
    throw InvalidInput("held-out pool has " + std::to_string(pool.size()) + " items, graphs need " +
                       std::to_string(n_nodes));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(trials));
  for (Index t = 0; t < trials; ++t) {
    const Index anchor = pool[pick(rng)];
    const auto sample = sample_neighborhood_graph(data, pool, anchor, n_nodes, rng, graph);
    const auto inst = make_instance(sample, params.gso, params.filter);
    losses.push_back(loss(gnn_forward(inst.signal, params, inst.shift(params.filter)).output, inst.targets, kind).value);
  }
  RiskEstimate r;
  r.trials = trials;
  r.mean = mean_of(losses);
  r.std_error = std_of(losses) / std::sqrt(static_cast<double>(trials));
  return r;
}

SlopeFit slope_fit(std::span<const double> n, std::span<const double> values) {
  if (n.size() != values.size()) throw InvalidInput("slope fit: N and value columns differ in length");
  SlopeFit fit;
  std::vector<double> lx, ly;
  std::set<double> distinct;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]) || !(n[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(n[i]));
    ly.push_back(std::log(values[i]));
    distinct.insert(n[i]);
  }
  fit.used = static_cast<int>(lx.size());
  if (distinct.size() >= 3) fit.slope = ls_slope(lx, ly);
  return fit;
}

int thread_budget(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MGNN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
  }
  return std::max(1, n);
}

GenGapReport gen_gap_sweep(const EmbeddingDataset& data, const GenGapConfig& cfg) {
  data.validate();
  cfg.train.validate();
  if (cfg.node_counts.empty()) throw InvalidInput("gen-gap sweep needs at least one node count");
  if (cfg.seeds < 1) throw InvalidInput("gen-gap sweep needs at least one seed");
  const auto train_pool = data.indices(Split::train);
  const auto test_pool = data.indices(Split::test);
  if (train_pool.empty() || test_pool.empty()) throw InvalidInput("dataset needs nonempty train and test splits");
  std::vector<int> ns = cfg.node_counts;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (int n : ns)
    if (n < 2 || static_cast<std::size_t>(n) > std::min(train_pool.size(), test_pool.size()))
      throw InvalidInput("node count " + std::to_string(n) + " outside [2, split size]");

  const int dim = static_cast<int>(data.dim());
  const GnnArchitecture arch = architecture_of(cfg.model, dim, data.num_classes);
  const int threads = thread_budget(cfg.threads);

  GenGapReport report;
  report.config = cfg;
  report.cells.resize(ns.size() * static_cast<std::size_t>(cfg.seeds));
  report.mlp_gaps.assign(static_cast<std::size_t>(cfg.seeds), 0.0);

  const MatrixD x_train = rows_of(data.embeddings, train_pool);
  const MatrixD x_test = rows_of(data.embeddings, test_pool);
  std::vector<int> y_train, y_test;
  for (Index i : train_pool) y_train.push_back(data.labels[static_cast<std::size_t>(i)]);
  for (Index i : test_pool) y_test.push_back(data.labels[static_cast<std::size_t>(i)]);

  // Tasks 0..cells-1 are GNN cells, the rest are one MLP per seed.
  const std::size_t cell_count = report.cells.size();
  parallel_for(cell_count + static_cast<std::size_t>(cfg.seeds), threads, [&](std::size_t task) {
    if (task >= cell_count) {
      const int s = static_cast<int>(task - cell_count);
      Rng rng = stream({cfg.seed_base, static_cast<std::uint64_t>(s), 0xB1ull});
      std::vector<int> dims{dim};
      dims.insert(dims.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
      dims.push_back(data.num_classes);
      TrainConfig tc = cfg.train;
      tc.seed = rng();
      auto trained = train_mlp(init_mlp(dims, cfg.model.activation, rng), x_train, y_train, tc);
      report.mlp_gaps[static_cast<std::size_t>(s)] =
          mlp_accuracy(trained.params, x_train, y_train) - mlp_accuracy(trained.params, x_test, y_test);
      return;
    }
    const std::size_t ni = task / static_cast<std::size_t>(cfg.seeds);
    const int s = static_cast<int>(task % static_cast<std::size_t>(cfg.seeds));
    const int n = ns[ni];
    Rng rng = stream({cfg.seed_base, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(n)});

    std::vector<GraphInstance> train_graphs, test_graphs;
    train_graphs.reserve(train_pool.size());
    for (Index anchor : train_pool)
      train_graphs.push_back(make_instance(sample_neighborhood_graph(data, train_pool, anchor, n, rng, cfg.graph),
                                           arch.gso, arch.filter));
    for (Index anchor : test_pool)
      test_graphs.push_back(make_instance(sample_neighborhood_graph(data, test_pool, anchor, n, rng, cfg.graph),
                                          arch.gso, arch.filter));

    TrainConfig tc = cfg.train;
    tc.seed = rng();
    TrainResult trained;
    try {
      trained = train(init_gnn(arch, rng), train_graphs, tc);
    } catch (const TrainingDiverged& e) {
      throw TrainingDiverged("N=" + std::to_string(n) + " seed=" + std::to_string(s) + ": " + e.what(), e.epoch);
    }
    GenGapCell& cell = report.cells[task];
    cell.n_nodes = n;
    cell.seed_index = s;
    cell.train_accuracy = anchored_accuracy(trained.params, train_graphs);
    cell.test_accuracy = anchored_accuracy(trained.params, test_graphs);
    cell.empirical_risk = empirical_risk(trained.params, train_graphs, tc.loss);
    cell.statistical_risk =
        statistical_risk_mc(trained.params, data, test_pool, n, cfg.mc_trials, rng, tc.loss, cfg.graph);
  });

  report.mlp_acc_gap = mean_of(report.mlp_gaps);
  std::vector<double> row_n, row_gap;
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    std::vector<double> tr, te, gap, emp, stat;
    double se2 = 0.0;
    for (int s = 0; s < cfg.seeds; ++s) {
      const auto& c = report.cells[ni * static_cast<std::size_t>(cfg.seeds) + static_cast<std::size_t>(s)];
      tr.push_back(c.train_accuracy);
      te.push_back(c.test_accuracy);
      gap.push_back(c.train_accuracy - c.test_accuracy);
      emp.push_back(c.empirical_risk);
      stat.push_back(c.statistical_risk.mean);
      se2 += c.statistical_risk.std_error * c.statistical_risk.std_error;
    }
    GenGapRow row;
    row.n_nodes = ns[ni];
    row.seeds = cfg.seeds;
    row.train_acc_mean = mean_of(tr);
    row.train_acc_std = std_of(tr);
    row.test_acc_mean = mean_of(te);
    row.test_acc_std = std_of(te);
    row.acc_gap = mean_of(gap);
    row.acc_gap_std = std_of(gap);
    row.emp_risk_mean = mean_of(emp);
    row.emp_risk_std = std_of(emp);
    row.stat_risk = mean_of(stat);
    row.stat_risk_se = std::sqrt(se2) / static_cast<double>(cfg.seeds);
    row.risk_gap = row.stat_risk - row.emp_risk_mean;
    row.mlp_acc_gap = report.mlp_acc_gap;
    report.rows.push_back(row);
    row_n.push_back(row.n_nodes);
    row_gap.push_back(row.acc_gap);
  }
  const SlopeFit fit = slope_fit(row_n, row_gap);
  report.slope = fit.slope;
  report.slope_excluded = fit.excluded;
  return report;
}

// ---------------------------------------------------------------------------

CalibrationResult calibrate_pointcloud(const AnalyticManifold& manifold, Index n, double sigma, Index count, Rng& rng,
                                       bool density_renormalized) {
  if (count < 1 || count + 1 >= n) throw InvalidInput("calibration needs 1 <= count < N - 1");
  const auto points = sample_uniform(manifold, n, rng);
  const auto graph = build_geometric_graph(manifold.ambient(points.points), std::optional<double>(sigma),
                                           SparsifyPolicy::none());
  const auto gso = shift_operator(
      graph, GsoKind::pointcloud_laplacian,
      PointCloudScale{manifold.intrinsic_dim(), manifold.volume(), density_renormalized});
  const auto eig = eig_sym(gso);
  const auto analytic = lb_eigenpairs(manifold, count + 1);

  CalibrationResult r;
  r.n_nodes = n;
  r.sigma = sigma;
  r.observed = eig.lambdas.segment(1, count);
  r.expected = analytic.lambdas.segment(1, count);
  r.max_rel_error = ((r.observed - r.expected).array().abs() / r.expected.array()).maxCoeff();
  return r;
}

double default_sigma_ref(const AnalyticManifold& manifold) {
  switch (manifold.kind()) {
    case ManifoldKind::circle: return 0.15;
    case ManifoldKind::sphere: return 0.35;
    case ManifoldKind::flat_torus: return 0.6;
  }
  throw InvalidInput("unsupported manifold kind");
}

double convergence_sigma(const AnalyticManifold& manifold, Index n, const ConvergenceConfig& cfg) {
  const double ref = cfg.sigma_ref.value_or(default_sigma_ref(manifold));
  if (!(ref > 0.0)) throw InvalidInput("reference kernel width must be positive");
  return ref * std::pow(static_cast<double>(n) / static_cast<double>(cfg.n_ref),
                        -1.0 / (manifold.intrinsic_dim() + 4.0));
}

ConvergenceReport convergence_experiment(const AnalyticManifold& manifold, const GnnParams& params,
                                         const BandlimitedSignal& f, const ConvergenceConfig& cfg, Rng& rng) {
  params.validate();
  if (params.filter != FilterKind::heat) throw InvalidInput("convergence experiment requires a heat-kind network");
  if (f.manifold().kind() != manifold.kind()) throw InvalidInput("signal lives on a different manifold");
  if (cfg.trials < 1) throw InvalidInput("convergence experiment needs at least one trial");
  std::vector<int> ns = cfg.node_counts;
  if (ns.empty()) throw InvalidInput("convergence experiment needs at least one node count");
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns[i] < 2 || (i > 0 && ns[i] <= ns[i - 1]))
      throw InvalidInput("node counts must be >= 2 and strictly increasing");

  if (cfg.check_preconditions) {
    const auto grid = log_grid(0.1, 100.0, 64);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      const auto& layer = params.layers[l];
      if (!normalized_lipschitz_check(layer.activation, 2000).passes)
        throw InvalidInput("layer " + std::to_string(l) + " nonlinearity is not normalized Lipschitz");
      for (Index i = 0; i < layer.in_dim(); ++i)
        for (Index j = 0; j < layer.out_dim(); ++j) {
          VectorD h(layer.tap_count());
          for (Index k = 0; k < layer.tap_count(); ++k) h(k) = layer.taps[static_cast<std::size_t>(k)](i, j);
          if (!low_pass_check(FilterCoeffs<double>(h, FilterKind::heat), cfg.low_pass_order, grid).is_low_pass)
            throw InvalidInput("layer " + std::to_string(l) + " filter (" + std::to_string(i) + ", " +
                               std::to_string(j) + ") is not low-pass; disable the precondition check to run anyway");
        }
    }
  }

  ConvergenceReport report;
  report.manifold = manifold.name();
  report.cutoff = f.cutoff();
  report.reference_slope = -1.0 / (manifold.intrinsic_dim() + 4.0);

  report.calibration = calibrate_pointcloud(manifold, cfg.calibration_nodes,
                                            convergence_sigma(manifold, cfg.calibration_nodes, cfg),
                                            cfg.calibration_modes, rng, cfg.density_renormalized);
  if (report.calibration.max_rel_error > cfg.calibration_tolerance)
    throw CalibrationError("point-cloud Laplacian calibration failed on the " + manifold.name() +
                           ": first nonzero eigenvalues off by " +
                           std::to_string(100.0 * report.calibration.max_rel_error) + "% (tolerance " +
                           std::to_string(100.0 * cfg.calibration_tolerance) + "%)");

  // Grid large enough for the carried modes.
  double carry = cfg.mnn.carry_cutoff.value_or(25.0 * std::max(f.cutoff(), manifold.modes(2).back().lambda));
  const auto carried = static_cast<Index>(manifold.modes_below(carry).size());
  Index q = std::max(cfg.grid_points, cfg.mnn.points_per_mode * carried);
  if (manifold.kind() == ManifoldKind::flat_torus) {
    const auto side = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(q))));
    q = side * side;
  }
  const auto grid = reference_grid(manifold, q);
  const MnnResult mnn = mnn_forward(f, params, grid, cfg.mnn);

  const auto m_modes = std::max<Index>(1, static_cast<Index>(f.modes().size()));
  const PointCloudScale scale{manifold.intrinsic_dim(), manifold.volume(), cfg.density_renormalized};
  for (int n : ns) {
    const double sigma = convergence_sigma(manifold, n, cfg);
    std::vector<double> disc, gaps, mbars;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto points = sample_uniform(manifold, n, rng);
      const auto graph = build_geometric_graph(manifold.ambient(points.points), std::optional<double>(sigma),
                                               SparsifyPolicy::none());
      const auto eig = eig_sym(shift_operator(graph, GsoKind::pointcloud_laplacian, scale));
      const MatrixD x = f.sample(points);
      const MatrixD out = gnn_forward(x, params, Shift(eig)).output;
      const MatrixD ref = mnn.evaluate(manifold, points.points);
      disc.push_back((out - ref).norm() / std::sqrt(static_cast<double>(n)));
      gaps.push_back(m_modes + 1 <= eig.size() ? eigengap(eig, m_modes) : 0.0);
      mbars.push_back(2.0 * x.norm());
    }
    ConvergenceRow row;
    row.n_nodes = n;
    row.trials = cfg.trials;
    row.mean = mean_of(disc);
    row.std = std_of(disc);
    row.eigengap = mean_of(gaps);
    row.mbar = mean_of(mbars);
    report.rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& r : report.rows) {
    xs.push_back(r.n_nodes);
    ys.push_back(r.mean);
  }
  const SlopeFit fit = slope_fit(xs, ys);
  report.slope = fit.slope;
  report.slope_excluded = fit.excluded;
  return report;
}

}  // namespace mgnn
