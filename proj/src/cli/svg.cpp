#include "tcblran/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace tcblran::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

const char* colour(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof *kPalette)]; }

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi == lo) hi = lo + 1.0;
  }
};

void header(std::ostringstream& out, const ChartLabels& labels) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(labels.title) << "</text>\n"
      << "<text x=\"" << num(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\"" << num(kHeight - 15)
      << "\" text-anchor=\"middle\">" << escape(labels.x_label) << "</text>\n"
      << "<text transform=\"translate(18," << num(kTop + (kHeight - kTop - kBottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(labels.y_label) << "</text>\n";
}

void axes(std::ostringstream& out) {
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kRight + 15 << "\" y=\"" << num(y - 9) << "\" width=\"12\" height=\"12\" fill=\""
        << colour(i) << "\"/>\n"
        << "<text x=\"" << kWidth - kRight + 32 << "\" y=\"" << num(y + 1) << "\">" << escape(names[i])
        << "</text>\n";
  }
}

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const ChartLabels& labels, bool log_y) {
  auto ty = [log_y](double v) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    if (log_y) return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
    return v;
  };
  Range xr, yr;
  for (const auto& s : series) {
    for (double x : s.x) xr.add(x);
    for (double y : s.y) yr.add(ty(y));
  }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kHeight - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream out;
  header(out, labels);
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kHeight - kBottom + 16)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
        << num(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
        << tick_label(log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  axes(out);

  std::vector<std::string> names;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    names.push_back(s.label);
    std::string path;
    bool pen_down = false;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double y = ty(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? " L" : " M") + num(px(s.x[i])) + "," + num(py(y));
      pen_down = true;
    }
    out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colour(si) << "\" stroke-width=\"1.5\"/>\n";
  }
  legend(out, names);
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart_svg(const std::vector<BarGroup>& groups, const std::vector<std::string>& legend_names,
                          const ChartLabels& labels) {
  Range yr;
  yr.add(0.0);
  for (const auto& g : groups)
    for (double v : g.values) yr.add(v);
  yr.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto py = [&](double y) { return kHeight - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream out;
  header(out, labels);
  for (int i = 0; i <= 4; ++i) {
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
        << num(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv)
        << "</text>\n";
  }
  axes(out);

  const double slot = groups.empty() ? pw : pw / static_cast<double>(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    const double bars = static_cast<double>(std::max<std::size_t>(1, group.values.size()));
    const double bw = slot * 0.8 / bars;
    const double x0 = kLeft + slot * static_cast<double>(g) + slot * 0.1;
    for (std::size_t b = 0; b < group.values.size(); ++b) {
      const double v = group.values[b];
      if (!std::isfinite(v)) continue;
      const double top = py(v);
      out << "<rect x=\"" << num(x0 + bw * static_cast<double>(b)) << "\" y=\"" << num(top) << "\" width=\""
          << num(bw) << "\" height=\"" << num(kHeight - kBottom - top) << "\" fill=\"" << colour(b) << "\"/>\n";
    }
    out << "<text x=\"" << num(x0 + slot * 0.4) << "\" y=\"" << num(kHeight - kBottom + 16)
        << "\" text-anchor=\"middle\">" << escape(group.label) << "</text>\n";
  }
  legend(out, legend_names);
  out << "</svg>\n";
  return out.str();
}

}  // namespace tcblran::cli
