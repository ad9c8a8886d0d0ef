#pragma once

// Minimal standalone SVG line charts: axes with ticks, up to a handful of
// series, and a legend. Non-finite samples break the polyline.

#include <cmath>
#include <string>
#include <vector>

#include "ensemblekit/common.hpp"

namespace ek {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline double nice_tick(double span) {
  if (!(span > 0.0)) return 1.0;
  double raw = span / 6.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double frac = raw / mag;
  double step = frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

}  // namespace detail

inline std::string render_line_chart(const std::vector<PlotSeries>& series,
                                     const std::string& x_label, const std::string& y_label,
                                     int width = 720, int height = 480) {
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (!(xlo < xhi)) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  if (!(ylo < yhi)) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  double ypad = 0.05 * (yhi - ylo);
  ylo -= ypad;
  yhi += ypad;

  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - (y - ylo) / (yhi - ylo) * (height - mt - mb); };

  static const char* colors[] = {"#1f6fb2", "#c23b22", "#3a7d44", "#8e5ba6", "#b28b1f"};
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // axes
  svg += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" + detail::svg_num(height - mb) +
         "\" x2=\"" + detail::svg_num(double(width) - mr) + "\" y2=\"" +
         detail::svg_num(height - mb) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" + detail::svg_num(mt) + "\" x2=\"" +
         detail::svg_num(ml) + "\" y2=\"" + detail::svg_num(height - mb) +
         "\" stroke=\"black\"/>\n";

  double xt = detail::nice_tick(xhi - xlo);
  for (double t = std::ceil(xlo / xt) * xt; t <= xhi + 1e-12 * xt; t += xt) {
    svg += "<line x1=\"" + detail::svg_num(px(t)) + "\" y1=\"" + detail::svg_num(height - mb) +
           "\" x2=\"" + detail::svg_num(px(t)) + "\" y2=\"" + detail::svg_num(height - mb + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::svg_num(px(t)) + "\" y=\"" + detail::svg_num(height - mb + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + format_double(std::fabs(t) < 1e-12 ? 0.0 : t) +
           "</text>\n";
  }
  double yt = detail::nice_tick(yhi - ylo);
  for (double t = std::ceil(ylo / yt) * yt; t <= yhi + 1e-12 * yt; t += yt) {
    svg += "<line x1=\"" + detail::svg_num(ml - 5) + "\" y1=\"" + detail::svg_num(py(t)) +
           "\" x2=\"" + detail::svg_num(ml) + "\" y2=\"" + detail::svg_num(py(t)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::svg_num(ml - 8) + "\" y=\"" + detail::svg_num(py(t) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + format_double(std::fabs(t) < 1e-12 ? 0.0 : t) +
           "</text>\n";
  }
  svg += "<text x=\"" + detail::svg_num((ml + width - mr) / 2) + "\" y=\"" +
         detail::svg_num(double(height) - 12) + "\" font-size=\"13\" text-anchor=\"middle\">" +
         x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + detail::svg_num((mt + height - mb) / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::svg_num((mt + height - mb) / 2) + ")\">" + y_label + "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 5];
    std::string path;
    bool pen_down = false;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? "L" : "M") + detail::svg_num(px(s.x[i])) + " " + detail::svg_num(py(s.y[i])) + " ";
      pen_down = true;
    }
    if (!path.empty())
      svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.6\"/>\n";
    double ly = mt + 16.0 * double(si) + 10.0;
    svg += "<line x1=\"" + detail::svg_num(double(width) - mr - 130) + "\" y1=\"" + detail::svg_num(ly) +
           "\" x2=\"" + detail::svg_num(double(width) - mr - 105) + "\" y2=\"" + detail::svg_num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.6\"/>\n";
    svg += "<text x=\"" + detail::svg_num(double(width) - mr - 100) + "\" y=\"" +
           detail::svg_num(ly + 4) + "\" font-size=\"12\">" + s.name + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace ek
