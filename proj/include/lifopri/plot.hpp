#pragma once

#include <string>
#include <vector>

namespace lifopri {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_y = false;
};

/// Standalone SVG document. Non-finite points are skipped, as are
/// non-positive ones on a log axis.
std::string render_svg(const LineChart& chart);

}  // namespace lifopri
