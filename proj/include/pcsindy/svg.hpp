#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pcsindy {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "t (s)";
  std::string y_label;
  // Fixed vertical range. Curves leaving it are clipped at the frame.
  std::optional<std::pair<double, double>> y_range;
  int width = 800;
  int height = 420;
};

// Line plot as a standalone SVG document. Non-finite points break the line.
std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace pcsindy
