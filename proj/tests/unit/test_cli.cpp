#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "mgnn/report_io.hpp"

using namespace mgnn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run mgnn_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string dir() {
  const fs::path d = fs::temp_directory_path() / "mgnn_unit_cli";
  fs::create_directories(d);
  return d.string() + "/";
}

std::string small_data() {
  const std::string p = dir() + "small.mgnn";
  if (!fs::exists(p))
    mgnn_cli({"gen-data", "--classes", "3", "--dim", "4", "--per-class", "12", "--test-per-class", "4", "--seed",
              "1", "-o", p});
  return p;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(mgnn_cli({}).code, cli::usage);
  EXPECT_EQ(mgnn_cli({"bogus"}).code, cli::usage);
  EXPECT_EQ(mgnn_cli({"gen-data"}).code, cli::usage);  // -o is required
  const auto r = mgnn_cli({"gen-data", "--classes", "1", "-o", dir() + "x.mgnn"});
  EXPECT_EQ(r.code, cli::usage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(mgnn_cli({"converge", "--manifold", "klein", "-o", dir() + "k.csv"}).code, cli::usage);
  EXPECT_EQ(mgnn_cli({"--help"}).code, cli::ok);
}

TEST(Cli, MissingFilesExitOne) {
  const auto r = mgnn_cli({"predict", "--data", dir() + "absent.mgnn", "--checkpoint", dir() + "absent.mgnp"});
  EXPECT_EQ(r.code, cli::failure);
  EXPECT_NE(r.err.find("absent"), std::string::npos);
}

TEST(Cli, GenDataIsDeterministic) {
  const std::string a = dir() + "a.csv", b = dir() + "b.csv";
  const std::vector<std::string> base = {"gen-data", "--classes", "4", "--per-class", "6", "--seed", "5", "-o"};
  auto args = base;
  args.push_back(a);
  ASSERT_EQ(mgnn_cli(args).code, cli::ok);
  args.back() = b;
  ASSERT_EQ(mgnn_cli(args).code, cli::ok);
  EXPECT_EQ(read_text_file(a), read_text_file(b));
  const auto d = read_embeddings(a, DatasetFormat::csv);
  EXPECT_EQ(d.size(), 4 * 6 + 4 * 1);
}

TEST(Cli, GenGapSingleNodeCountHasEmptySlope) {
  const std::string out = dir() + "gap.csv";
  const auto r = mgnn_cli({"gen-gap", "--data", small_data(), "--Ns", "5", "--seeds", "2", "--epochs", "2",
                           "--hidden", "4", "--mlp-hidden", "4", "--mc-trials", "5", "-o", out});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  const auto rep = parse_gen_gap_csv(read_text_file(out));
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_FALSE(rep.slope.has_value());
  EXPECT_TRUE(fs::exists(dir() + "gap.json"));
  const std::string svg = read_text_file(dir() + "gap.svg");
  EXPECT_NE(svg.find("data-name=\"GCN\""), std::string::npos);
  EXPECT_NE(svg.find("data-name=\"MLP\""), std::string::npos);
}

TEST(Cli, ConvergeIdentityNetworkGivesZeros) {
  const std::string out = dir() + "conv.csv";
  const auto r = mgnn_cli({"converge", "--network", "identity", "--Ns", "32,64,128", "--trials", "2", "-o", out});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  const auto rep = parse_convergence_csv(read_text_file(out));
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& row : rep.rows) EXPECT_EQ(row.mean, 0.0);
  EXPECT_EQ(rep.manifold, "circle");
}

TEST(Cli, ConvergeCalibrationFailureExitsOne) {
  const auto r = mgnn_cli({"converge", "--sigma-ref", "4", "--Ns", "32,64", "--trials", "1", "-o", dir() + "bad.csv"});
  EXPECT_EQ(r.code, cli::failure);
  EXPECT_NE(r.err.find("calibration test failed"), std::string::npos);
}

TEST(Cli, InspectFilterTable) {
  const auto r = mgnn_cli({"inspect-filter", "--coeffs", "1,2,3", "--at", "0,2"});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  EXPECT_NE(r.out.find("a,response\n0,1\n2,17\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("low_pass false"), std::string::npos);

  const auto heat = mgnn_cli({"inspect-filter", "--coeffs", "0,1", "--kind", "heat", "--order", "2"});
  ASSERT_EQ(heat.code, cli::ok);
  EXPECT_NE(heat.out.find("low_pass true order 2"), std::string::npos) << heat.out;
  EXPECT_EQ(mgnn_cli({"inspect-filter"}).code, cli::usage);
}

TEST(Cli, TrainThenPredict) {
  const std::string ckpt = dir() + "model.mgnp", preds = dir() + "preds.csv";
  const auto t = mgnn_cli({"train", "--data", small_data(), "--nodes", "4", "--epochs", "20", "--lr", "0.01",
                           "--hidden", "8", "-o", ckpt});
  ASSERT_EQ(t.code, cli::ok) << t.err;
  const auto params = read_checkpoint(ckpt);
  EXPECT_EQ(params.input_dim(), 4);
  EXPECT_EQ(params.output_dim(), 3);

  const auto p = mgnn_cli({"predict", "--data", small_data(), "--checkpoint", ckpt, "--nodes", "4", "--split", "test",
                           "-o", preds});
  ASSERT_EQ(p.code, cli::ok) << p.err;
  const std::string csv = read_text_file(preds);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 12);
  EXPECT_NE(p.out.find("anchored accuracy"), std::string::npos);
  // Same seed, same predictions.
  mgnn_cli({"predict", "--data", small_data(), "--checkpoint", ckpt, "--nodes", "4", "--split", "test", "-o",
            preds + "2"});
  EXPECT_EQ(read_text_file(preds + "2"), csv);
}
