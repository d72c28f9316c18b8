#pragma once

// Minimal SVG line and scatter plots, written directly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace finsler::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool line = false;  // polyline through the points; markers otherwise
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
  std::vector<Series> series;
  std::vector<double> horizontal_rules;  // e.g. a threshold

  std::string render() const;
};

namespace detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline std::string Plot::render() const {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0) && (!log_y || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!usable(x, y)) continue;
      x0 = std::min(x0, tx(x)), x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y)), y1 = std::max(y1, ty(y));
    }
  for (double r : horizontal_rules)
    if (!log_y || r > 0) y0 = std::min(y0, ty(r)), y1 = std::max(y1, ty(r));
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.05 * (x1 - x0), pady = 0.08 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;

  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1 - (ty(y) - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << detail::num(pw) << "\" height=\"" << detail::num(ph)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double gx = x0 + (x1 - x0) * k / 4, gy = y0 + (y1 - y0) * k / 4;
    const double sx = left + pw * k / 4, sy = top + ph * (1 - k / 4.0);
    os << "<text x=\"" << detail::num(sx) << "\" y=\"" << detail::num(top + ph + 16) << "\" text-anchor=\"middle\">"
       << detail::tick(log_x ? std::pow(10, gx) : gx) << "</text>\n";
    os << "<text x=\"" << detail::num(left - 6) << "\" y=\"" << detail::num(sy + 4) << "\" text-anchor=\"end\">"
       << detail::tick(log_y ? std::pow(10, gy) : gy) << "</text>\n";
  }
  os << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
     << detail::escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << detail::num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape(y_label) << "</text>\n";
  for (double r : horizontal_rules) {
    if (log_y && r <= 0) continue;
    os << "<line x1=\"" << left << "\" x2=\"" << detail::num(left + pw) << "\" y1=\"" << detail::num(py(r)) << "\" y2=\""
       << detail::num(py(r)) << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 7];
    if (s.line) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : s.points)
        if (usable(x, y)) os << detail::num(px(x)) << ',' << detail::num(py(y)) << ' ';
      os << "\"/>\n";
    }
    for (const auto& [x, y] : s.points)
      if (usable(x, y))
        os << "<circle cx=\"" << detail::num(px(x)) << "\" cy=\"" << detail::num(py(y)) << "\" r=\"3\" fill=\"" << color
           << "\"/>\n";
    os << "<text x=\"" << detail::num(left + 8) << "\" y=\"" << detail::num(top + 16 + 15 * k) << "\" fill=\"" << color
       << "\">" << detail::escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace finsler::svg
