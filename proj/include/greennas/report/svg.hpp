#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "greennas/error.hpp"

namespace greennas::report {

inline std::string xml_escape(const std::string& s) {
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

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = {}) {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(w, 0.0)) << "\" height=\""
          << num(std::max(h, 0.0)) << "\" fill=\"" << fill << "\"" << extra << "/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333", double width = 1) {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill, const std::string& extra = {}) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill << "\""
          << extra << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) body_ << num(x) << ',' << num(y) << ' ';
    body_ << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "start", double size = 11,
            const std::string& extra = {}) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"" << extra << ">" << xml_escape(s)
          << "</text>\n";
  }
  void raw(const std::string& s) { body_ << s; }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w_) << "\" height=\"" << num(h_)
        << "\" viewBox=\"0 0 " << num(w_) << ' ' << num(h_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

// Maps data values to pixels on one axis, linear or log10.
struct Axis {
  double lo = 0, hi = 1;
  double p0 = 0, p1 = 1;  // pixel positions of lo and hi
  bool log = false;

  double operator()(double v) const {
    const double a = log ? std::log10(lo) : lo, b = log ? std::log10(hi) : hi;
    const double x = log ? std::log10(std::max(v, lo)) : v;
    return b == a ? 0.5 * (p0 + p1) : p0 + (x - a) / (b - a) * (p1 - p0);
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)) + 1e-9; e += 1.0) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) t.push_back(v);
      }
      return t;
    }
    const double span = hi - lo;
    if (span <= 0) return {lo};
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double step = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
    return t;
  }
};

// Log axis bounds padded to whole decades around positive data.
inline Axis log_axis(double min_v, double max_v, double p0, double p1) {
  require(min_v > 0, "log axis needs positive values");
  return {std::pow(10.0, std::floor(std::log10(min_v))), std::pow(10.0, std::ceil(std::log10(max_v) + 1e-12)), p0, p1,
          true};
}

inline Axis linear_axis(double min_v, double max_v, double p0, double p1, bool from_zero = true) {
  double lo = from_zero ? std::min(0.0, min_v) : min_v, hi = max_v;
  if (hi <= lo) hi = lo + 1.0;
  if (!from_zero) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, p0, p1, false};
}

inline std::string tick_label(double v, bool log) {
  if (log) return "1e" + std::to_string(static_cast<int>(std::lround(std::log10(v))));
  return num(v);
}

// Frame with ticks; `x` horizontal, `y` vertical (p0 at the bottom).
inline void draw_axes(Svg& svg, const Axis& x, const Axis& y, const std::string& xlabel, const std::string& ylabel,
                      bool x_ticks = true) {
  svg.line(x.p0, y.p0, x.p1, y.p0);
  svg.line(x.p0, y.p0, x.p0, y.p1);
  if (x_ticks)
    for (double t : x.ticks()) {
      svg.line(x(t), y.p0, x(t), y.p0 + 4);
      svg.text(x(t), y.p0 + 16, tick_label(t, x.log), "middle", 10);
    }
  for (double t : y.ticks()) {
    svg.line(x.p0 - 4, y(t), x.p0, y(t));
    svg.text(x.p0 - 6, y(t) + 3, tick_label(t, y.log), "end", 10);
  }
  svg.text(0.5 * (x.p0 + x.p1), y.p0 + 34, xlabel + (x.log ? " (log scale)" : ""), "middle", 12);
  const double cy = 0.5 * (y.p0 + y.p1);
  svg.text(x.p0 - 44, cy, ylabel + (y.log ? " (log scale)" : ""), "middle", 12,
           " transform=\"rotate(-90 " + num(x.p0 - 44) + ' ' + num(cy) + ")\"");
}

struct BarRow {
  std::string label;
  double value = 0.0;
};

// Vertical bar panel inside [left, top, width, height].
inline void bar_panel(Svg& svg, const std::vector<BarRow>& rows, double left, double top, double width, double height,
                      const std::string& title, const std::string& ylabel, bool log_y) {
  require(!rows.empty(), "bar chart needs at least one row");
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
  }
  const Axis y = log_y ? log_axis(std::max(lo, 1e-12), std::max(hi, 1e-12), top + height, top)
                       : linear_axis(0.0, hi * 1.1, top + height, top);
  const Axis x{0, static_cast<double>(rows.size()), left, left + width};
  draw_axes(svg, x, y, "", ylabel, false);
  svg.text(left + 0.5 * width, top - 8, title, "middle", 13, " font-weight=\"bold\"");
  const double slot = width / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x0 = left + slot * (static_cast<double>(i) + 0.15);
    const double base = y(y.lo), yt = y(rows[i].value);
    svg.rect(x0, yt, slot * 0.7, base - yt, palette(i), " data-label=\"" + xml_escape(rows[i].label) + "\" data-value=\"" + num(rows[i].value) + "\"");
    const double lx = x0 + slot * 0.35, ly = top + height + 12;
    svg.text(lx, ly, rows[i].label, "end", 10, " transform=\"rotate(-35 " + num(lx) + ' ' + num(ly) + ")\"");
  }
}

}  // namespace greennas::report
