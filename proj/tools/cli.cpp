#include "cli.hpp"

#include <ctime>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mgnn/report_io.hpp"

namespace mgnn::cli {

namespace {

/// Flag combination rejected before any computation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& message) {
  if (!cond) throw UsageError(message);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::filesystem::path sibling(const std::filesystem::path& p, const std::string& ext) {
  auto q = p;
  q.replace_extension(ext);
  return q;
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw UsageError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

/// Converts string-valued enum flags, turning unknown values into usage errors.
template <typename Fn>
auto parse_enum(Fn fn, const std::string& s) {
  try {
    return fn(s);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

struct DataFlags {
  std::string path;
  std::string split_file;
  double test_fraction = 1.0 / 7.0;
  std::uint64_t split_seed = 0;

  void add(CLI::App* app) {
    app->add_option("--data", path, "Embedding dataset (.csv or MGNN binary)")->required();
    app->add_option("--split-file", split_file, "CSV only: one train/test tag per line");
    app->add_option("--test-fraction", test_fraction, "CSV only: held-out fraction when no split file")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--split-seed", split_seed, "CSV only: seed of the random split");
  }

  EmbeddingDataset load() const {
    CsvOptions csv;
    if (!split_file.empty()) csv.split.companion = split_file;
    csv.split.test_fraction = test_fraction;
    csv.split.seed = split_seed;
    return read_embeddings(path, guess_format(path), csv);
  }
};

struct TrainFlags {
  int epochs = 300;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::string loss = "cross_entropy";
  int batch = 32;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Learning rate")->check(CLI::NonNegativeNumber);
    app->add_option("--optimizer", optimizer, "adam or sgd");
    app->add_option("--loss", loss, "cross_entropy or l2");
    app->add_option("--batch-size", batch, "Graphs per optimizer step")->check(CLI::PositiveNumber);
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.optimizer = optimizer_from_string(optimizer);
    c.loss = parse_enum(loss_kind_from_string, loss);
    c.batch_size = batch;
    c.seed = seed;
    return c;
  }
};

struct ModelFlags {
  std::vector<int> hidden = {32};
  int taps = 2;
  std::string gso = "gcn";
  std::string filter = "poly";
  std::string activation = "relu";

  void add(CLI::App* app) {
    app->add_option("--hidden", hidden, "Hidden widths, comma separated")->delimiter(',');
    app->add_option("--taps", taps, "Filter taps K per layer")->check(CLI::PositiveNumber);
    app->add_option("--gso", gso, "adjacency, laplacian, normalized_laplacian or gcn");
    app->add_option("--filter", filter, "poly or heat");
    app->add_option("--activation", activation, "tanh, relu or identity");
  }

  ModelSpec spec() const {
    ModelSpec m;
    for (int h : hidden) require(h >= 1, "hidden widths must be positive");
    m.hidden = hidden;
    m.taps = taps;
    m.gso = parse_enum(gso_kind_from_string, gso);
    require(m.gso != GsoKind::pointcloud_laplacian, "the point-cloud Laplacian is only available in converge");
    m.filter = parse_enum(filter_kind_from_string, filter);
    m.activation = parse_enum(activation_from_string, activation);
    return m;
  }
};

std::vector<GraphInstance> anchored_instances(const EmbeddingDataset& data, Split split, Index n, GsoKind gso,
                                              FilterKind filter, Rng& rng, const NeighborhoodOptions& opts) {
  const auto pool = data.indices(split);
  std::vector<GraphInstance> out;
  out.reserve(pool.size());
  for (Index anchor : pool) out.push_back(make_instance(sample_neighborhood_graph(data, pool, anchor, n, rng, opts), gso, filter));
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const GaussianMixtureSpec& spec, std::uint64_t seed, const std::string& output,
                 const std::string& format, std::ostream& out) {
  require(spec.classes >= 2, "--classes must be at least 2");
  require(spec.dim >= 1, "--dim must be at least 1");
  require(spec.per_class >= 1, "--per-class must be at least 1");
  require(!spec.test_per_class || *spec.test_per_class >= 0, "--test-per-class must be nonnegative");
  require(spec.separation >= 0.0, "--sep must be nonnegative");
  DatasetFormat fmt = guess_format(output);
  if (format == "csv") fmt = DatasetFormat::csv;
  else if (format == "binary") fmt = DatasetFormat::binary;
  else require(format.empty(), "--format must be csv or binary");
  Rng rng(seed);
  const auto data = synth_gaussian_mixture(spec, rng);
  write_embeddings(data, output, fmt);
  out << "wrote " << data.size() << " items (" << data.indices(Split::train).size() << " train, "
      << data.indices(Split::test).size() << " test) to " << output << "\n";
  return ok;
}

int cmd_gen_gap(const DataFlags& data_flags, GenGapConfig cfg, const TrainFlags& train_flags,
                const ModelFlags& model_flags, std::optional<double> sigma, const std::string& output,
                std::string svg, std::ostream& out) {
  require(!cfg.node_counts.empty(), "--Ns needs at least one value");
  for (int n : cfg.node_counts) require(n >= 2, "every N must be at least 2");
  require(cfg.seeds >= 1, "--seeds must be positive");
  require(cfg.mc_trials >= 2, "--mc-trials must be at least 2");
  require(!sigma || *sigma > 0.0, "--sigma must be positive");
  cfg.train = train_flags.config(0);
  cfg.model = model_flags.spec();
  cfg.graph.sigma = sigma;
  const auto data = data_flags.load();
  const auto report = gen_gap_sweep(data, cfg);

  write_report(report, output);
  write_text_file(sibling(output, ".json"), report_metadata_json(report, utc_timestamp()));
  if (svg.empty()) svg = sibling(output, ".svg").string();
  ChartSeries gnn{cfg.model.gso == GsoKind::renormalized_adjacency ? "GCN" : "GNN", {}, "#1f77b4", false};
  ChartSeries mlp{"MLP", {}, "#d62728", true};
  for (const auto& r : report.rows) {
    gnn.points.emplace_back(r.n_nodes, r.acc_gap);
    mlp.points.emplace_back(r.n_nodes, r.mlp_acc_gap);
  }
  write_text_file(svg, line_chart_svg("Train - test accuracy vs nodes", "nodes N", "accuracy gap", {gnn, mlp}));

  out << gen_gap_csv(report);
  if (report.slope) out << "slope " << format_double(*report.slope) << "\n";
  return ok;
}

struct ConvergeFlags {
  std::string manifold = "circle";
  double lambda_m = 9.0;
  std::vector<int> ns = {64, 128, 256, 512};
  int trials = 10;
  std::optional<double> sigma_ref;
  std::uint64_t seed = 0;
  std::string network = "tanh";
  std::string checkpoint;
  int width = 4;
  int taps = 3;
  Index grid_points = 4000;
  bool skip_preconditions = false;
  bool literal_scaling = false;
  std::string output;
  std::string svg;
};

int cmd_converge(const ConvergeFlags& f, std::ostream& out) {
  const AnalyticManifold manifold(parse_enum(manifold_kind_from_string, f.manifold));
  require(f.lambda_m >= 0.0, "--lambda-m must be nonnegative");
  require(f.trials >= 1, "--trials must be positive");
  require(!f.ns.empty(), "--Ns needs at least one value");
  for (std::size_t i = 0; i < f.ns.size(); ++i)
    require(f.ns[i] >= 2 && (i == 0 || f.ns[i] > f.ns[i - 1]), "--Ns must be >= 2 and strictly increasing");
  require(!f.sigma_ref || *f.sigma_ref > 0.0, "--sigma-ref must be positive");
  require(f.network == "tanh" || f.network == "identity", "--network must be tanh or identity");
  require(f.checkpoint.empty() || f.network == "tanh", "--checkpoint and --network identity are exclusive");

  Rng rng(f.seed);
  GnnParams params;
  if (!f.checkpoint.empty()) params = read_checkpoint(f.checkpoint);
  else if (f.network == "identity") params = identity_network();
  else params = convergence_network(f.width, f.taps, rng);
  require(params.filter == FilterKind::heat, "converge needs a heat-kind network");
  require(params.input_dim() == 1, "converge drives single-channel signals; the network input width must be 1");
  const auto signal = convergence_signal(manifold, f.lambda_m, rng);

  ConvergenceConfig cfg;
  cfg.node_counts = f.ns;
  cfg.trials = f.trials;
  cfg.sigma_ref = f.sigma_ref;
  cfg.grid_points = f.grid_points;
  cfg.density_renormalized = !f.literal_scaling;
  // h = [1] is the identity filter, which is not low-pass by design.
  cfg.check_preconditions = !f.skip_preconditions && f.network != "identity";
  const auto report = convergence_experiment(manifold, params, signal, cfg, rng);

  write_report(report, f.output);
  write_text_file(sibling(f.output, ".json"), report_metadata_json(report, utc_timestamp()));
  ChartSeries measured{"GNN vs MNN", {}, "#1f77b4", false};
  for (const auto& r : report.rows) measured.points.emplace_back(std::log10(r.n_nodes), r.mean);
  write_text_file(f.svg.empty() ? sibling(f.output, ".svg") : std::filesystem::path(f.svg),
                  line_chart_svg("Output discrepancy on the " + report.manifold, "log10 N",
                                 "|GNN - MNN| / sqrt(N)", {measured}));

  out << convergence_csv(report);
  out << "calibration max relative error " << format_double(report.calibration.max_rel_error) << "\n";
  if (report.slope) out << "slope " << format_double(*report.slope) << " (reference "
                        << format_double(report.reference_slope) << ")\n";
  return ok;
}

struct InspectFlags {
  std::vector<double> coeffs;
  std::string checkpoint;
  int layer = 0;
  int row = 0;
  int col = 0;
  std::string kind;
  double order = 1.0;
  double lo = 0.01;
  double hi = 100.0;
  int points = 41;
  std::vector<double> at;
  std::string output;
};

int cmd_inspect_filter(const InspectFlags& f, std::ostream& out) {
  require(f.coeffs.empty() != f.checkpoint.empty(), "give exactly one of --coeffs or --checkpoint");
  require(f.order > 0.0, "--order must be positive");
  require(f.lo > 0.0 && f.hi >= 100.0 * f.lo, "--lo/--hi must span at least two decades of positive values");
  require(f.points >= 4, "--points must be at least 4");

  VectorD h;
  FilterKind kind = FilterKind::poly;
  if (!f.coeffs.empty()) {
    h = Eigen::Map<const VectorD>(f.coeffs.data(), static_cast<Index>(f.coeffs.size()));
    kind = f.kind.empty() ? FilterKind::poly : parse_enum(filter_kind_from_string, f.kind);
  } else {
    const auto params = read_checkpoint(f.checkpoint);
    require(f.kind.empty() || parse_enum(filter_kind_from_string, f.kind) == params.filter,
            "--kind disagrees with the checkpoint");
    require(f.layer >= 0 && static_cast<std::size_t>(f.layer) < params.layers.size(), "--layer out of range");
    const auto& layer = params.layers[static_cast<std::size_t>(f.layer)];
    require(f.row >= 0 && f.row < layer.in_dim() && f.col >= 0 && f.col < layer.out_dim(),
            "--row/--col out of range for the layer");
    h.resize(layer.tap_count());
    for (Index k = 0; k < layer.tap_count(); ++k) h(k) = layer.taps[static_cast<std::size_t>(k)](f.row, f.col);
    kind = params.filter;
  }
  const FilterCoeffs<double> filter(h, kind);
  const auto grid = log_grid(f.lo, f.hi, f.points);
  std::vector<double> table = f.at.empty() ? grid : f.at;

  std::string csv = "a,response\n";
  for (double a : table) csv += format_double(a) + "," + format_double(frequency_response(filter, a)) + "\n";
  if (!f.output.empty()) write_text_file(f.output, csv);
  out << csv;
  const auto report = low_pass_check(filter, f.order, grid);
  out << "low_pass " << (report.is_low_pass ? "true" : "false") << " order " << format_double(f.order)
      << " decay_exponent " << format_double(report.decay_exponent) << "\n";
  return ok;
}

struct TrainCmdFlags {
  int nodes = 10;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  std::string preset;
  std::string output;
};

int cmd_train(const DataFlags& data_flags, const TrainFlags& train_flags, const ModelFlags& model_flags,
              const TrainCmdFlags& f, std::ostream& out) {
  require(f.nodes >= 2, "--nodes must be at least 2");
  require(!f.sigma || *f.sigma > 0.0, "--sigma must be positive");
  require(f.preset.empty() || f.preset == "gcn" || f.preset == "replication", "--preset must be gcn or replication");
  const TrainConfig tc = train_flags.config(f.seed);
  const ModelSpec spec = model_flags.spec();
  const auto data = data_flags.load();

  GnnArchitecture arch;
  if (f.preset == "gcn") {
    arch = gcn_preset(static_cast<int>(data.dim()), spec.hidden.front(), data.num_classes);
  } else if (f.preset == "replication") {
    arch = replication_preset(static_cast<int>(data.dim()), data.num_classes);
  } else {
    arch.dims.push_back(static_cast<int>(data.dim()));
    arch.dims.insert(arch.dims.end(), spec.hidden.begin(), spec.hidden.end());
    arch.dims.push_back(data.num_classes);
    arch.taps = spec.taps;
    arch.filter = spec.filter;
    arch.gso = spec.gso;
    arch.hidden = spec.activation;
  }
  Rng rng(f.seed);
  NeighborhoodOptions opts;
  opts.sigma = f.sigma;
  const auto train_graphs = anchored_instances(data, Split::train, f.nodes, arch.gso, arch.filter, rng, opts);
  auto result = train(init_gnn(arch, rng), train_graphs, tc);
  write_checkpoint(result.params, f.output);

  out << "parameters " << result.params.parameter_count() << "\n";
  out << "final loss " << format_double(result.history.back().loss) << "\n";
  out << "train anchored accuracy " << format_double(anchored_accuracy(result.params, train_graphs)) << "\n";
  if (!data.indices(Split::test).empty()) {
    const auto test_graphs = anchored_instances(data, Split::test, f.nodes, arch.gso, arch.filter, rng, opts);
    out << "test anchored accuracy " << format_double(anchored_accuracy(result.params, test_graphs)) << "\n";
  }
  return ok;
}

struct PredictFlags {
  std::string checkpoint;
  int nodes = 10;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  std::string split = "test";
  std::string output;
};

int cmd_predict(const DataFlags& data_flags, const PredictFlags& f, std::ostream& out) {
  require(f.nodes >= 2, "--nodes must be at least 2");
  require(f.split == "train" || f.split == "test", "--split must be train or test");
  const auto params = read_checkpoint(f.checkpoint);
  const auto data = data_flags.load();
  require(params.input_dim() == data.dim(), "checkpoint input width does not match the embedding dimension");
  const Split split = f.split == "train" ? Split::train : Split::test;
  const auto pool = data.indices(split);
  Rng rng(f.seed);
  NeighborhoodOptions opts;
  opts.sigma = f.sigma;

  std::string csv = "item,label,prediction\n";
  Index correct = 0;
  for (Index anchor : pool) {
    const auto inst = make_instance(sample_neighborhood_graph(data, pool, anchor, f.nodes, rng, opts), params.gso,
                                    params.filter);
    const int pred = predict_anchor(params, inst.shift(params.filter), inst.signal);
    const int label = data.labels[static_cast<std::size_t>(anchor)];
    correct += pred == label;
    csv += std::to_string(anchor) + "," + std::to_string(label) + "," + std::to_string(pred) + "\n";
  }
  if (!f.output.empty()) write_text_file(f.output, csv);
  else out << csv;
  out << "anchored accuracy "
      << format_double(pool.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pool.size())) << "\n";
  return ok;
}

}  // namespace

GnnParams convergence_network(int width, int taps, Rng& rng) {
  if (width < 1 || taps < 2) throw InvalidInput("convergence network needs width >= 1 and at least 2 taps");
  GnnArchitecture arch;
  arch.dims = {1, width, 1};
  arch.taps = taps;
  arch.filter = FilterKind::heat;
  arch.gso = GsoKind::pointcloud_laplacian;
  arch.hidden = Activation::tanh;
  auto p = init_gnn(arch, rng);
  for (auto& layer : p.layers) layer.taps.front().setZero();
  return p;
}

GnnParams identity_network() {
  GnnParams p;
  p.filter = FilterKind::heat;
  p.gso = GsoKind::pointcloud_laplacian;
  p.layers.push_back({{MatrixD::Identity(1, 1)}, Activation::identity});
  return p;
}

BandlimitedSignal convergence_signal(const AnalyticManifold& manifold, double cutoff, Rng& rng) {
  std::normal_distribution<double> gauss;
  return bandlimited_project(manifold, cutoff,
                             [&](Index, const LbMode& m) { return gauss(rng) / (1.0 + m.lambda); });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph and manifold neural network laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mgnn 1.0");

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Write a synthetic Gaussian-mixture embedding dataset");
  GaussianMixtureSpec mix;
  int test_per_class = -1;
  std::uint64_t gen_seed = 0;
  std::string gen_output, gen_format;
  gen_data->add_option("--classes", mix.classes, "Number of classes C (>= 2)");
  gen_data->add_option("--dim", mix.dim, "Embedding dimension m");
  gen_data->add_option("--per-class", mix.per_class, "Training items per class");
  gen_data->add_option("--test-per-class", test_per_class, "Held-out items per class (default per-class / 6)");
  gen_data->add_option("--sep", mix.separation, "Radius of the class-center sphere");
  gen_data->add_option("--seed", gen_seed, "Generator seed");
  gen_data->add_option("-o,--output", gen_output, "Output path (.csv or binary)")->required();
  gen_data->add_option("--format", gen_format, "csv or binary (default from the extension)");

  // gen-gap
  auto* gen_gap = app.add_subcommand("gen-gap", "Generalization-gap sweep over node counts");
  DataFlags gap_data;
  TrainFlags gap_train;
  ModelFlags gap_model;
  GenGapConfig gap_cfg;
  std::optional<double> gap_sigma;
  std::string gap_output, gap_svg;
  gap_data.add(gen_gap);
  gap_train.add(gen_gap);
  gap_model.add(gen_gap);
  gen_gap->add_option("--Ns", gap_cfg.node_counts, "Node counts, comma separated")->delimiter(',');
  gen_gap->add_option("--seeds", gap_cfg.seeds, "Seeds per node count");
  gen_gap->add_option("--seed", gap_cfg.seed_base, "Base seed");
  gen_gap->add_option("--mlp-hidden", gap_cfg.mlp_hidden, "MLP hidden widths")->delimiter(',');
  gen_gap->add_option("--mc-trials", gap_cfg.mc_trials, "Monte-Carlo graphs for the statistical risk");
  gen_gap->add_option("--sigma", gap_sigma, "Kernel width (default: median heuristic)");
  gen_gap->add_option("--threads", gap_cfg.threads, "Worker threads (0: all cores; MGNN_THREADS caps)");
  gen_gap->add_option("-o,--output", gap_output, "CSV report path")->required();
  gen_gap->add_option("--svg", gap_svg, "SVG chart path (default next to the CSV)");

  // converge
  auto* converge = app.add_subcommand("converge", "Graph network vs manifold network discrepancy");
  ConvergeFlags conv;
  converge->add_option("--manifold", conv.manifold, "circle, sphere or torus");
  converge->add_option("--lambda-m", conv.lambda_m, "Bandlimit of the input signal");
  converge->add_option("--Ns", conv.ns, "Node counts, comma separated")->delimiter(',');
  converge->add_option("--trials", conv.trials, "Trials per node count");
  converge->add_option("--sigma-ref", conv.sigma_ref, "Kernel width at N = 1024");
  converge->add_option("--seed", conv.seed, "Seed");
  converge->add_option("--network", conv.network, "tanh (default) or identity");
  converge->add_option("--checkpoint", conv.checkpoint, "Heat-kind checkpoint to use instead");
  converge->add_option("--width", conv.width, "Hidden width of the default network");
  converge->add_option("--taps", conv.taps, "Heat taps of the default network");
  converge->add_option("--grid-points", conv.grid_points, "Reference grid size (grown if too small)");
  converge->add_flag("--skip-preconditions", conv.skip_preconditions, "Do not check Lipschitz and low-pass");
  converge->add_flag("--literal-scaling", conv.literal_scaling, "Point-cloud Laplacian without density correction");
  converge->add_option("-o,--output", conv.output, "CSV report path")->required();
  converge->add_option("--svg", conv.svg, "SVG chart path (default next to the CSV)");

  // inspect-filter
  auto* inspect = app.add_subcommand("inspect-filter", "Frequency response table and low-pass verdict");
  InspectFlags insp;
  inspect->add_option("--coeffs", insp.coeffs, "Filter taps h_0,h_1,...")->delimiter(',');
  inspect->add_option("--checkpoint", insp.checkpoint, "Read taps from a checkpoint");
  inspect->add_option("--layer", insp.layer, "Checkpoint layer");
  inspect->add_option("--row", insp.row, "Input feature of the tap entry");
  inspect->add_option("--col", insp.col, "Output feature of the tap entry");
  inspect->add_option("--kind", insp.kind, "poly or heat");
  inspect->add_option("--order", insp.order, "Required decay order d");
  inspect->add_option("--lo", insp.lo, "Smallest grid frequency");
  inspect->add_option("--hi", insp.hi, "Largest grid frequency");
  inspect->add_option("--points", insp.points, "Grid points");
  inspect->add_option("--at", insp.at, "Tabulate at these frequencies instead of the grid")->delimiter(',');
  inspect->add_option("-o,--output", insp.output, "Also write the table as CSV");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a GNN on anchored neighborhood graphs");
  DataFlags train_data;
  TrainFlags train_flags;
  ModelFlags train_model;
  TrainCmdFlags tcf;
  train_data.add(train_cmd);
  train_flags.add(train_cmd);
  train_model.add(train_cmd);
  train_cmd->add_option("--nodes", tcf.nodes, "Nodes per neighborhood graph");
  train_cmd->add_option("--seed", tcf.seed, "Seed");
  train_cmd->add_option("--sigma", tcf.sigma, "Kernel width (default: median heuristic)");
  train_cmd->add_option("--preset", tcf.preset, "gcn or replication");
  train_cmd->add_option("-o,--output", tcf.output, "Checkpoint path")->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Anchored predictions from a checkpoint");
  DataFlags pred_data;
  PredictFlags pf;
  pred_data.add(predict_cmd);
  predict_cmd->add_option("--checkpoint", pf.checkpoint, "Checkpoint path")->required();
  predict_cmd->add_option("--nodes", pf.nodes, "Nodes per neighborhood graph");
  predict_cmd->add_option("--seed", pf.seed, "Seed");
  predict_cmd->add_option("--sigma", pf.sigma, "Kernel width (default: median heuristic)");
  predict_cmd->add_option("--split", pf.split, "train or test");
  predict_cmd->add_option("-o,--output", pf.output, "Prediction CSV path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e_out;
    const int code = app.exit(e, o, e_out);
    out << o.str();
    err << e_out.str();
    return code == 0 ? ok : usage;
  }

  try {
    if (*gen_data) {
      if (test_per_class >= 0) mix.test_per_class = test_per_class;
      return cmd_gen_data(mix, gen_seed, gen_output, gen_format, out);
    }
    if (*gen_gap) return cmd_gen_gap(gap_data, gap_cfg, gap_train, gap_model, gap_sigma, gap_output, gap_svg, out);
    if (*converge) return cmd_converge(conv, out);
    if (*inspect) return cmd_inspect_filter(insp, out);
    if (*train_cmd) return cmd_train(train_data, train_flags, train_model, tcf, out);
    if (*predict_cmd) return cmd_predict(pred_data, pf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return usage;
  } catch (const CalibrationError& e) {
    err << "calibration test failed: " << e.what() << "\n";
    return failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }
  return usage;
}

}  // namespace mgnn::cli
