#pragma once

#include <string>
#include <vector>

#include "recbf/sim_engine.hpp"

namespace recbf {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<double> h_rules;  // dashed horizontal guide lines
  int width = 860;
  int height = 520;
  std::size_t max_points = 2000;  // per-series decimation cap
};

// Deterministic byte-for-byte output: no timestamps, fixed palette, %.6g
// coordinates. Long series are decimated to max_points before rendering.
void write_line_plot(const std::string& path, const LinePlot& plot);

struct HistogramPlot {
  std::string title;
  std::string x_label;
  Histogram hist;
  bool normal_overlay = true;  // moment-matched curve scaled to counts
  int width = 860;
  int height = 520;
};

void write_histogram_plot(const std::string& path, const HistogramPlot& plot);

}  // namespace recbf
