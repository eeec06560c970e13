#include "spd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>

#include "spd/errors.hpp"

namespace spd {

namespace {

constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
constexpr int kTicks = 5;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

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

}  // namespace

std::string render_line_plot(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::invalid_argument, "plot series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (options.x_range) std::tie(x0, x1) = *options.x_range;
  if (!(x1 > x0)) {
    x0 = 0.0;
    x1 = 1.0;
  }
  if (!(y1 > 0.0)) y1 = 1.0;
  y1 *= 1.05;

  const int w = options.width, h = options.height;
  const double pw = w - kLeft - kRight, ph = h - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - std::clamp(y, 0.0, y1) / y1 * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    out += "<text x=\"" + std::to_string(w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">" + escape(options.title) + "</text>\n";
  }

  // Axes and ticks.
  const std::string bottom = fmt("%.2f", kTop + ph), right = fmt("%.2f", kLeft + pw);
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + std::to_string(kLeft) + "\" y1=\"" + bottom + "\" x2=\"" + right + "\" y2=\"" + bottom + "\"/>\n";
  out += "<line x1=\"" + std::to_string(kLeft) + "\" y1=\"" + std::to_string(kTop) + "\" x2=\"" +
         std::to_string(kLeft) + "\" y2=\"" + bottom + "\"/>\n";
  std::string labels;
  for (int t = 0; t <= kTicks; ++t) {
    const double xv = x0 + (x1 - x0) * t / kTicks, yv = y1 * t / kTicks;
    const std::string tx = fmt("%.2f", px(xv)), ty = fmt("%.2f", py(yv));
    out += "<line x1=\"" + tx + "\" y1=\"" + bottom + "\" x2=\"" + tx + "\" y2=\"" + fmt("%.2f", kTop + ph + 5) + "\"/>\n";
    out += "<line x1=\"" + std::to_string(kLeft - 5) + "\" y1=\"" + ty + "\" x2=\"" + std::to_string(kLeft) +
           "\" y2=\"" + ty + "\"/>\n";
    labels += "<text x=\"" + tx + "\" y=\"" + fmt("%.2f", kTop + ph + 18) + "\" text-anchor=\"middle\">" +
              fmt("%.4g", xv) + "</text>\n";
    labels += "<text x=\"" + std::to_string(kLeft - 8) + "\" y=\"" + fmt("%.2f", py(yv) + 4) +
              "\" text-anchor=\"end\">" + fmt("%.4g", yv) + "</text>\n";
  }
  out += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n" + labels;
  out += "<text x=\"" + fmt("%.2f", kLeft + pw / 2) + "\" y=\"" + std::to_string(h - 10) + "\" text-anchor=\"middle\">" +
         escape(options.x_label) + "</text>\n";
  out += "<text transform=\"translate(16," + fmt("%.2f", kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(options.y_label) + "</text>\n</g>\n";

  for (const auto& s : series) {
    out += "<polyline fill=\"none\" stroke=\"" + escape(s.color) + "\" stroke-width=\"1.5\"";
    if (s.dotted) out += " stroke-dasharray=\"2,3\"";
    out += " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!first) out += ' ';
      out += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i]));
      first = false;
    }
    out += "\"/>\n";
  }

  // Legend, top right.
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = kTop + 12 + 16.0 * static_cast<double>(i);
    const double lx = kLeft + pw - 150;
    out += "<line x1=\"" + fmt("%.2f", lx) + "\" y1=\"" + fmt("%.2f", ly) + "\" x2=\"" + fmt("%.2f", lx + 24) +
           "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" + escape(series[i].color) + "\" stroke-width=\"1.5\"" +
           (series[i].dotted ? " stroke-dasharray=\"2,3\"" : "") + "/>\n";
    out += "<text x=\"" + fmt("%.2f", lx + 30) + "\" y=\"" + fmt("%.2f", ly + 4) + "\">" + escape(series[i].label) +
           "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace spd
