#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mgnn/report_io.hpp"

namespace mgnn {

namespace {

const char* const kGenGapHeader =
    "n_nodes,seeds,train_acc_mean,train_acc_std,test_acc_mean,test_acc_std,acc_gap,acc_gap_std,"
    "emp_risk_mean,emp_risk_std,stat_risk,stat_risk_se,risk_gap,mlp_acc_gap,slope";
const char* const kConvergenceHeader =
    "n_nodes,trials,mean,std,eigengap,mbar,slope,reference_slope,manifold,cutoff";

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Header plus data lines; rejects blank lines and CRs.
std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& header,
                                               const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw ParseError(what + ": header does not match '" + header + "'", 1);
  std::vector<std::vector<std::string>> rows;
  const auto width = split_fields(header).size();
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.size() != width)
      throw ParseError(what + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(width),
                       line_no);
    rows.push_back(std::move(fields));
  }
  return rows;
}

double parse_double(const std::string& s, std::uint64_t line, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(what + ": line " + std::to_string(line) + ": '" + s + "' is not a number", line);
  return v;
}

int parse_int(const std::string& s, std::uint64_t line, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(what + ": line " + std::to_string(line) + ": '" + s + "' is not an integer", line);
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::uint64_t line, const std::string& what) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line, what);
}

nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

nlohmann::ordered_json json_optional(const std::optional<double>& v) {
  return v ? json_number(*v) : nlohmann::ordered_json(nullptr);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string gen_gap_csv(const GenGapReport& report) {
  std::string out = std::string(kGenGapHeader) + "\n";
  for (const auto& r : report.rows) {
    const double vals[] = {r.train_acc_mean, r.train_acc_std, r.test_acc_mean, r.test_acc_std,
                           r.acc_gap,        r.acc_gap_std,   r.emp_risk_mean, r.emp_risk_std,
                           r.stat_risk,      r.stat_risk_se,  r.risk_gap,      r.mlp_acc_gap};
    out += std::to_string(r.n_nodes) + "," + std::to_string(r.seeds);
    for (double v : vals) out += "," + format_double(v);
    out += "," + optional_cell(report.slope) + "\n";
  }
  return out;
}

std::string convergence_csv(const ConvergenceReport& report) {
  std::string out = std::string(kConvergenceHeader) + "\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.n_nodes) + "," + std::to_string(r.trials) + "," + format_double(r.mean) + "," +
           format_double(r.std) + "," + format_double(r.eigengap) + "," + format_double(r.mbar) + "," +
           optional_cell(report.slope) + "," + format_double(report.reference_slope) + "," + report.manifold + "," +
           format_double(report.cutoff) + "\n";
  }
  return out;
}

GenGapReport parse_gen_gap_csv(const std::string& text) {
  const std::string what = "gen-gap report";
  const auto rows = csv_rows(text, kGenGapHeader, what);
  GenGapReport report;
  std::uint64_t line = 1;
  for (const auto& f : rows) {
    ++line;
    GenGapRow r;
    r.n_nodes = parse_int(f[0], line, what);
    r.seeds = parse_int(f[1], line, what);
    double* const fields[] = {&r.train_acc_mean, &r.train_acc_std, &r.test_acc_mean, &r.test_acc_std,
                              &r.acc_gap,        &r.acc_gap_std,   &r.emp_risk_mean, &r.emp_risk_std,
                              &r.stat_risk,      &r.stat_risk_se,  &r.risk_gap,      &r.mlp_acc_gap};
    for (std::size_t i = 0; i < std::size(fields); ++i) *fields[i] = parse_double(f[i + 2], line, what);
    const auto slope = parse_optional(f[14], line, what);
    if (line == 2) {
      report.slope = slope;
      report.mlp_acc_gap = r.mlp_acc_gap;
    } else if (slope != report.slope) {
      throw ParseError(what + ": line " + std::to_string(line) + ": slope differs from the first row", line);
    }
    report.rows.push_back(r);
  }
  return report;
}

ConvergenceReport parse_convergence_csv(const std::string& text) {
  const std::string what = "convergence report";
  const auto rows = csv_rows(text, kConvergenceHeader, what);
  ConvergenceReport report;
  std::uint64_t line = 1;
  for (const auto& f : rows) {
    ++line;
    ConvergenceRow r;
    r.n_nodes = parse_int(f[0], line, what);
    r.trials = parse_int(f[1], line, what);
    r.mean = parse_double(f[2], line, what);
    r.std = parse_double(f[3], line, what);
    r.eigengap = parse_double(f[4], line, what);
    r.mbar = parse_double(f[5], line, what);
    const auto slope = parse_optional(f[6], line, what);
    const double ref = parse_double(f[7], line, what);
    const double cutoff = parse_double(f[9], line, what);
    if (line == 2) {
      report.slope = slope;
      report.reference_slope = ref;
      report.manifold = f[8];
      report.cutoff = cutoff;
    } else if (slope != report.slope || ref != report.reference_slope || f[8] != report.manifold ||
               cutoff != report.cutoff) {
      throw ParseError(what + ": line " + std::to_string(line) + ": summary columns differ from the first row", line);
    }
    report.rows.push_back(r);
  }
  return report;
}

void write_report(const GenGapReport& report, const std::filesystem::path& path) {
  write_text_file(path, gen_gap_csv(report));
}

void write_report(const ConvergenceReport& report, const std::filesystem::path& path) {
  write_text_file(path, convergence_csv(report));
}

std::string report_metadata_json(const GenGapReport& report, const std::string& timestamp) {
  const auto& c = report.config;
  nlohmann::ordered_json j;
  j["kind"] = "gen_gap";
  j["config"] = {
      {"node_counts", c.node_counts},
      {"seeds", c.seeds},
      {"seed_base", c.seed_base},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"optimizer", c.train.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
        {"loss", to_string(c.train.loss)},
        {"batch_size", c.train.batch_size}}},
      {"model",
       {{"hidden", c.model.hidden},
        {"taps", c.model.taps},
        {"gso", to_string(c.model.gso)},
        {"filter", to_string(c.model.filter)},
        {"activation", to_string(c.model.activation)}}},
      {"mlp_hidden", c.mlp_hidden},
      {"mc_trials", c.mc_trials},
      {"graph",
       {{"sigma", json_optional(c.graph.sigma)},
        {"policy", c.graph.policy ? to_string(*c.graph.policy) : std::string("auto")}}},
  };
  j["slope"] = json_optional(report.slope);
  j["slope_excluded"] = report.slope_excluded;
  j["mlp_acc_gap"] = json_number(report.mlp_acc_gap);
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

std::string report_metadata_json(const ConvergenceReport& report, const std::string& timestamp) {
  nlohmann::ordered_json j;
  j["kind"] = "convergence";
  j["manifold"] = report.manifold;
  j["cutoff"] = json_number(report.cutoff);
  j["slope"] = json_optional(report.slope);
  j["slope_excluded"] = report.slope_excluded;
  j["reference_slope"] = json_number(report.reference_slope);
  const auto& cal = report.calibration;
  std::vector<double> observed(cal.observed.begin(), cal.observed.end());
  std::vector<double> expected(cal.expected.begin(), cal.expected.end());
  j["calibration"] = {{"n_nodes", cal.n_nodes},
                      {"sigma", json_number(cal.sigma)},
                      {"observed", observed},
                      {"expected", expected},
                      {"max_rel_error", json_number(cal.max_rel_error)}};
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series) {
  constexpr double width = 640, height = 400, left = 70, right = 150, top = 40, bottom = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double pw = width - left - right, ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << format_double(std::round(xv * 1000) / 1000)
      << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">"
      << format_double(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
    << escape_xml(x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape_xml(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    o << "<polyline class=\"series\" data-name=\"" << escape_xml(s.name) << "\" fill=\"none\" stroke=\"" << s.color
      << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      o << (first ? "" : " ") << sx(x) << "," << sy(y);
      first = false;
    }
    o << "\"/>\n";
    const double ly = top + 16 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 34 << "\" y2=\"" << ly
      << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
      << "/>\n";
    o << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace mgnn
