#include "svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hybridlab/errors.hpp"

namespace hybridlab::cli {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_cell(const std::string& raw, std::size_t line_no) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw InputError("csv line " + std::to_string(line_no) + ": non-numeric cell \"" + s + "\"");
  }
  return v;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
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

// Tick step from {1, 2, 5} x 10^k giving at most ~6 intervals.
double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    if (f * mag >= raw) return f * mag;
  }
  return 10.0 * mag;
}

struct Range {
  double lo;
  double hi;
};

Range padded(double lo, double hi) {
  if (hi - lo < 1e-12) {
    const double pad = std::max(0.5, std::abs(lo) * 0.1);
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (t.header.empty()) {
      for (const auto& f : fields) t.header.push_back(trim(f));
      if (t.header.size() < 2) throw InputError("csv: need an x column and at least one series");
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InputError("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_cell(f, line_no));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw InputError("csv: empty input");
  if (t.rows.empty()) throw InputError("csv: no data rows");
  return t;
}

std::string render_svg(const CsvTable& table, const std::string& title) {
  constexpr double kWidth = 720, kHeight = 440;
  constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
  constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;
  static constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                      "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  double xmin = table.rows.front()[0], xmax = xmin;
  double ymin = 0.0, ymax = 0.0;
  bool first_y = true;
  for (const auto& row : table.rows) {
    xmin = std::min(xmin, row[0]);
    xmax = std::max(xmax, row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (first_y) {
        ymin = ymax = row[c];
        first_y = false;
      }
      ymin = std::min(ymin, row[c]);
      ymax = std::max(ymax, row[c]);
    }
  }
  ymin = std::min(ymin, 0.0);
  const Range xr = padded(xmin, xmax);
  Range yr = padded(ymin, ymax);
  const double ystep = nice_step(yr.hi - yr.lo);
  yr = {std::floor(yr.lo / ystep) * ystep, std::ceil(yr.hi / ystep) * ystep};
  const double xstep = nice_step(xr.hi - xr.lo);

  const auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * kPlotW; };
  const auto py = [&](double y) { return kTop + kPlotH - (y - yr.lo) / (yr.hi - yr.lo) * kPlotH; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << fmt("%.1f", kLeft + kPlotW / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
  }
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlotW << "\" height=\"" << kPlotH
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks are generated by integer index so that round-off cannot add or drop one.
  const auto tick_label = [](double v, double step) {
    const int decimals = std::max(0, static_cast<int>(std::ceil(-std::log10(step) - 1e-9)));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-6 ? 0.0 : v);
    return std::string(buf);
  };
  const long x0 = static_cast<long>(std::ceil(xr.lo / xstep - 1e-9));
  const long x1 = static_cast<long>(std::floor(xr.hi / xstep + 1e-9));
  for (long k = x0; k <= x1; ++k) {
    const double x = static_cast<double>(k) * xstep;
    const std::string sx = fmt("%.2f", px(x));
    svg << "<line x1=\"" << sx << "\" y1=\"" << fmt("%.2f", kTop + kPlotH) << "\" x2=\"" << sx << "\" y2=\""
        << fmt("%.2f", kTop + kPlotH + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << sx << "\" y=\"" << fmt("%.2f", kTop + kPlotH + 20)
        << "\" text-anchor=\"middle\">" << tick_label(x, xstep) << "</text>\n";
  }
  const long y0 = static_cast<long>(std::llround(yr.lo / ystep));
  const long y1 = static_cast<long>(std::llround(yr.hi / ystep));
  for (long k = y0; k <= y1; ++k) {
    const double y = static_cast<double>(k) * ystep;
    const std::string sy = fmt("%.2f", py(y));
    svg << "<line x1=\"" << fmt("%.2f", kLeft - 5) << "\" y1=\"" << sy << "\" x2=\"" << fmt("%.2f", kLeft + kPlotW)
        << "\" y2=\"" << sy << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << fmt("%.2f", kLeft - 8) << "\" y=\"" << fmt("%.2f", py(y) + 4)
        << "\" text-anchor=\"end\">" << tick_label(y, ystep) << "</text>\n";
  }
  svg << "<text x=\"" << fmt("%.1f", kLeft + kPlotW / 2) << "\" y=\"" << fmt("%.1f", kHeight - 15)
      << "\" text-anchor=\"middle\">" << xml_escape(table.header[0]) << "</text>\n";

  const bool markers_only = table.rows.size() == 1;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const char* color = kColors[(c - 1) % kColors.size()];
    if (markers_only) {
      const auto& row = table.rows.front();
      svg << "<circle class=\"series\" cx=\"" << fmt("%.2f", px(row[0])) << "\" cy=\"" << fmt("%.2f", py(row[c]))
          << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (r) svg << ' ';
        svg << fmt("%.2f", px(table.rows[r][0])) << ',' << fmt("%.2f", py(table.rows[r][c]));
      }
      svg << "\"/>\n";
    }
    const double ly = kTop + 10 + 20 * static_cast<double>(c - 1);
    const double lx = kLeft + kPlotW + 15;
    svg << "<line x1=\"" << fmt("%.2f", lx) << "\" y1=\"" << fmt("%.2f", ly) << "\" x2=\"" << fmt("%.2f", lx + 20)
        << "\" y2=\"" << fmt("%.2f", ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text class=\"legend\" x=\"" << fmt("%.2f", lx + 26) << "\" y=\"" << fmt("%.2f", ly + 4) << "\">"
        << xml_escape(table.header[c]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace hybridlab::cli
