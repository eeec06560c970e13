#pragma once

// Minimal line plot writer for the density overlays. Output depends only on
// the inputs, so identical runs give identical files.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spd {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dotted = false;
  std::string color = "#1f4e9c";
};

struct PlotOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "density";
  int width = 640;
  int height = 420;
  /// Defaults to the extent of the data.
  std::optional<std::pair<double, double>> x_range;
};

std::string render_line_plot(const std::vector<PlotSeries>& series, const PlotOptions& options = {});

}  // namespace spd
