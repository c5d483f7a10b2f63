#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bandit_icl/error.hpp"
#include "bandit_icl/eval.hpp"

namespace bandit_icl {
namespace {

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

std::size_t common_length(const std::vector<RegretReport>& reports) {
  if (reports.empty()) return 0;
  const std::size_t n = reports.front().mean.size();
  for (const auto& r : reports) {
    if (r.mean.size() != n || r.stderr_.size() != n) fail(ErrorKind::ShapeMismatch, "reports differ in length");
  }
  return n;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

void write_report_csv(const std::filesystem::path& path, const std::vector<RegretReport>& reports) {
  const std::size_t n = common_length(reports);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "round";
  for (const auto& r : reports) out << ',' << r.policy << "_mean," << r.policy << "_stderr";
  out << '\n';
  for (std::size_t t = 0; t < n; ++t) {
    out << (t + 1);
    for (const auto& r : reports) out << ',' << fmt("%.17g", r.mean[t]) << ',' << fmt("%.17g", r.stderr_[t]);
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<RegretReport> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::ParseError, "line 1: missing header");
  std::vector<std::string> cols;
  {
    std::istringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.empty() || cols[0] != "round" || cols.size() % 2 != 1) {
    fail(ErrorKind::ParseError, "line 1: expected round,<label>_mean,<label>_stderr,...");
  }
  std::vector<RegretReport> reports((cols.size() - 1) / 2);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string& m = cols[1 + 2 * i];
    if (!m.ends_with("_mean") || cols[2 + 2 * i] != m.substr(0, m.size() - 5) + "_stderr") {
      fail(ErrorKind::ParseError, "line 1: mismatched column pair '" + m + "'");
    }
    reports[i].policy = m.substr(0, m.size() - 5);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (vals.size() != cols.size()) fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": column count");
    for (std::size_t i = 0; i < reports.size(); ++i) {
      reports[i].mean.push_back(vals[1 + 2 * i]);
      reports[i].stderr_.push_back(vals[2 + 2 * i]);
    }
  }
  return reports;
}

void write_report_svg(const std::filesystem::path& path, const std::vector<RegretReport>& reports,
                      const std::string& title) {
  const std::size_t n = common_length(reports);
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  double ymax = 0.0;
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < n; ++t) ymax = std::max(ymax, r.mean[t] + r.stderr_[t]);
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  const double xmax = n > 1 ? static_cast<double>(n) : 2.0;
  auto px = [&](double round) { return kLeft + (round - 1.0) / (xmax - 1.0) * pw; };
  auto py = [&](double v) { return kTop + ph - v / ymax * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\" width=\"640\" height=\"400\" "
         "font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt("%.2f", kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(title) << "</text>\n";
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n";
  svg << "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.2f", py(v) + 4) << "\" text-anchor=\"end\">"
        << fmt("%.3g", v) << "</text>\n";
  }
  if (n > 0) {
    for (std::size_t round : {std::size_t{1}, (n + 1) / 2, n}) {
      svg << "<text x=\"" << fmt("%.2f", px(static_cast<double>(round))) << "\" y=\"" << kTop + ph + 16
          << "\" text-anchor=\"middle\">" << round << "</text>\n";
    }
  }
  svg << "<text x=\"" << fmt("%.2f", kLeft + pw / 2) << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\">round</text>\n";

  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    const char* color = kPalette[k % kPalette.size()];
    if (n > 0) {
      svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t t = 0; t < n; ++t) {
        svg << fmt("%.2f", px(static_cast<double>(t + 1))) << ',' << fmt("%.2f", py(r.mean[t] + r.stderr_[t])) << ' ';
      }
      for (std::size_t t = n; t-- > 0;) {
        svg << fmt("%.2f", px(static_cast<double>(t + 1))) << ','
            << fmt("%.2f", py(std::max(0.0, r.mean[t] - r.stderr_[t]))) << ' ';
      }
      svg << "\"/>\n";
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t t = 0; t < n; ++t) {
        svg << fmt("%.2f", px(static_cast<double>(t + 1))) << ',' << fmt("%.2f", py(r.mean[t])) << ' ';
      }
      svg << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 32 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kW - kRight + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(r.policy) << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << svg.str();
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

void emit_report(const std::vector<RegretReport>& reports, const std::filesystem::path& csv_path,
                 const std::filesystem::path& svg_path, const std::string& title) {
  write_report_csv(csv_path, reports);
  write_report_svg(svg_path, reports, title);
}

}  // namespace bandit_icl
