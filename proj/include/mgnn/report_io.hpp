#pragma once

// CSV reports, JSON sidecars, model checkpoints and SVG charts.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mgnn/risk.hpp"

namespace mgnn {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string gen_gap_csv(const GenGapReport& report);
std::string convergence_csv(const ConvergenceReport& report);

/// Parses what gen_gap_csv wrote (rows and slope; cells and config are not
/// part of the CSV).
GenGapReport parse_gen_gap_csv(const std::string& text);
ConvergenceReport parse_convergence_csv(const std::string& text);

void write_report(const GenGapReport& report, const std::filesystem::path& path);
void write_report(const ConvergenceReport& report, const std::filesystem::path& path);

/// Config snapshot, slope summary and timestamp, written next to the CSV.
std::string report_metadata_json(const GenGapReport& report, const std::string& timestamp);
std::string report_metadata_json(const ConvergenceReport& report, const std::string& timestamp);

/// "MGNP" checkpoint: magic, u32 version, u8 filter, u8 gso, u64 layers, then
/// per layer u8 activation, u64 taps, u64 d_in, u64 d_out and the taps as
/// row-major little-endian float64.
void write_checkpoint(const GnnParams& params, const std::filesystem::path& path);
GnnParams read_checkpoint(const std::filesystem::path& path);
std::string checkpoint_bytes(const GnnParams& params);
GnnParams parse_checkpoint(const std::string& bytes);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Static SVG line chart, one polyline per series.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series);

}  // namespace mgnn
