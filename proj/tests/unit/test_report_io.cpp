#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "mgnn/report_io.hpp"

using namespace mgnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mgnn_unit_report";
  fs::create_directories(dir);
  return dir / name;
}

GenGapReport sample_gen_gap() {
  GenGapReport r;
  for (int n : {5, 10, 20, 25, 50}) {
    GenGapRow row;
    row.n_nodes = n;
    row.seeds = 10;
    row.train_acc_mean = 1.0 - 0.1 / n;
    row.train_acc_std = 0.01;
    row.test_acc_mean = 1.0 - 0.3 / n;
    row.test_acc_std = 1.0 / 3.0;
    row.acc_gap = 0.2 / n;
    row.acc_gap_std = 1e-17;
    row.emp_risk_mean = 0.125;
    row.emp_risk_std = 0.0;
    row.stat_risk = 0.5;
    row.stat_risk_se = 2.5e-3;
    row.risk_gap = 0.375;
    row.mlp_acc_gap = 0.07;
    r.rows.push_back(row);
  }
  r.slope = -1.0;
  r.mlp_acc_gap = 0.07;
  return r;
}

ConvergenceReport sample_convergence() {
  ConvergenceReport r;
  for (int n : {64, 128, 256, 512}) r.rows.push_back({n, 10, 0.1 / n, 0.01 / n, 0.5, 3.25});
  r.slope = -0.25;
  r.reference_slope = -0.2;
  r.manifold = "circle";
  r.cutoff = 9.0;
  return r;
}

GnnParams sample_params() {
  Rng rng(3);
  GnnArchitecture a = gcn_preset(4, 5, 3);
  a.filter = FilterKind::heat;
  a.gso = GsoKind::pointcloud_laplacian;
  return init_gnn(a, rng);
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(GenGapCsv, ShapeAndByteIdenticalReparse) {
  const auto r = sample_gen_gap();
  const std::string csv = gen_gap_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "n_nodes,seeds,train_acc_mean,train_acc_std,test_acc_mean,test_acc_std,acc_gap,acc_gap_std,"
            "emp_risk_mean,emp_risk_std,stat_risk,stat_risk_se,risk_gap,mlp_acc_gap,slope");
  const auto back = parse_gen_gap_csv(csv);
  ASSERT_EQ(back.rows.size(), 5u);
  EXPECT_EQ(back.rows[2].test_acc_std, 1.0 / 3.0);
  EXPECT_EQ(back.slope, r.slope);
  EXPECT_EQ(gen_gap_csv(back), csv);
}

TEST(GenGapCsv, EmptySlopeColumn) {
  auto r = sample_gen_gap();
  r.slope.reset();
  const std::string csv = gen_gap_csv(r);
  EXPECT_EQ(csv.substr(csv.find('\n') + 1).find(",-1\n"), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(csv[csv.size() - 2], ',');
  EXPECT_FALSE(parse_gen_gap_csv(csv).slope.has_value());
}

TEST(ConvergenceCsv, ByteIdenticalReparse) {
  const auto r = sample_convergence();
  const std::string csv = convergence_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n_nodes,trials,mean,std,eigengap,mbar,slope,reference_slope,manifold,cutoff");
  const auto back = parse_convergence_csv(csv);
  EXPECT_EQ(back.manifold, "circle");
  EXPECT_EQ(back.rows[3].mean, 0.1 / 512);
  EXPECT_EQ(convergence_csv(back), csv);
}

TEST(ReportCsv, ParseErrors) {
  try {
    parse_gen_gap_csv("n_nodes,seeds\n5,1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location, 1u);
  }
  std::string csv = gen_gap_csv(sample_gen_gap());
  const auto third = csv.find('\n', csv.find('\n', csv.find('\n') + 1) + 1);
  std::string broken = csv.substr(0, third) + "\n7,1,x" + csv.substr(csv.find('\n', third + 1));
  try {
    parse_gen_gap_csv(broken);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location, 4u);
  }
  EXPECT_THROW(parse_convergence_csv(""), ParseError);
}

TEST(ReportFiles, CsvAndMetadata) {
  const auto p = scratch("gap.csv");
  write_report(sample_gen_gap(), p);
  EXPECT_EQ(read_text_file(p), gen_gap_csv(sample_gen_gap()));
  const auto j = nlohmann::json::parse(report_metadata_json(sample_gen_gap(), "2024-01-01T00:00:00Z"));
  EXPECT_EQ(j["slope"].get<double>(), -1.0);

  const auto meta = nlohmann::json::parse(report_metadata_json(sample_convergence(), "2024-01-01T00:00:00Z"));
  EXPECT_EQ(meta["timestamp"], "2024-01-01T00:00:00Z");
  EXPECT_EQ(meta["manifold"], "circle");
}

TEST(Checkpoint, BitIdenticalRoundTrip) {
  const auto params = sample_params();
  const auto p1 = scratch("a.mgnp"), p2 = scratch("b.mgnp");
  write_checkpoint(params, p1);
  const auto back = read_checkpoint(p1);
  EXPECT_TRUE(back == params);
  write_checkpoint(back, p2);
  EXPECT_EQ(read_text_file(p1), read_text_file(p2));
  EXPECT_EQ(read_text_file(p1).substr(0, 4), "MGNP");
  // Header 4 + 4 + 1 + 1 + 8; per layer 1 + 3 * 8; taps 2 * (4 * 5 + 5 * 3) doubles.
  EXPECT_EQ(read_text_file(p1).size(), 18u + 2u * 25u + 70u * 8u);
}

TEST(Checkpoint, ReloadedForwardIsBitExact) {
  const auto params = sample_params();
  const auto back = parse_checkpoint(checkpoint_bytes(params));
  Rng rng(9);
  std::normal_distribution<double> g;
  MatrixD z(7, 4);
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = g(rng);
  const auto eig = eig_sym(shift_operator(build_geometric_graph(z), GsoKind::combinatorial_laplacian));
  EXPECT_EQ(gnn_forward(z, params, Shift(eig)).output, gnn_forward(z, back, Shift(eig)).output);
}

TEST(Checkpoint, CorruptionIsRejected) {
  const std::string bytes = checkpoint_bytes(sample_params());
  EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(parse_checkpoint(bytes + "x"), ParseError);
  std::string bad = bytes;
  bad[0] = 'Q';
  EXPECT_THROW(parse_checkpoint(bad), ParseError);
  bad = bytes;
  bad[8] = 7;  // filter kind
  EXPECT_THROW(parse_checkpoint(bad), ParseError);
  EXPECT_THROW(read_checkpoint(scratch("nope.mgnp")), IoError);
}

TEST(Svg, OneNamedPolylinePerSeries) {
  std::vector<ChartSeries> s = {{"GCN", {{5, 0.2}, {10, 0.1}, {50, 0.01}}, "#1f77b4", false},
                                {"MLP", {{5, 0.07}, {50, 0.07}}, "#d62728", true}};
  const std::string svg = line_chart_svg("gap", "N", "accuracy gap", s);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (auto p = svg.find(needle); p != std::string::npos; p = svg.find(needle, p + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count("class=\"series\""), 2u);
  EXPECT_EQ(count("data-name=\"GCN\""), 1u);
  EXPECT_EQ(count("data-name=\"MLP\""), 1u);
  EXPECT_EQ(count("stroke-dasharray"), 2u);  // line and legend swatch
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
