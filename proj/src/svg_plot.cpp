#include "recbf/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "recbf/errors.hpp"

namespace recbf {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 38.0;
constexpr double kMarginBottom = 50.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finalize(double pad_fraction) {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double pad = pad_fraction * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step;
  if (frac <= 1.0)
    step = 1.0;
  else if (frac <= 2.0)
    step = 2.0;
  else if (frac <= 5.0)
    step = 5.0;
  else
    step = 10.0;
  return step * mag;
}

class Canvas {
 public:
  Canvas(int width, int height, Range xr, Range yr)
      : width_(width), height_(height), xr_(xr), yr_(yr) {}

  double px(double x) const {
    return kMarginLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) *
                             (width_ - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    return height_ - kMarginBottom - (y - yr_.lo) / (yr_.hi - yr_.lo) *
                                         (height_ - kMarginTop - kMarginBottom);
  }

  void open(std::ostream& out, const std::string& title) const {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
        << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << ' '
        << height_ << "\">\n";
    out << "<rect width=\"" << width_ << "\" height=\"" << height_
        << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
      out << "<text x=\"" << num(width_ / 2.0)
          << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"15\" fill=\"#222222\">"
          << escape(title) << "</text>\n";
  }

  void axes(std::ostream& out, const std::string& x_label,
            const std::string& y_label) const {
    const double x0 = kMarginLeft, x1 = width_ - kMarginRight;
    const double y0 = height_ - kMarginBottom, y1 = kMarginTop;
    const double xstep = nice_step(xr_.hi - xr_.lo, 6);
    for (double t = std::ceil(xr_.lo / xstep) * xstep; t <= xr_.hi + 1e-12;
         t += xstep) {
      const double gx = px(t);
      out << "<line x1=\"" << num(gx) << "\" y1=\"" << num(y0) << "\" x2=\""
          << num(gx) << "\" y2=\"" << num(y1)
          << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << num(gx) << "\" y=\"" << num(y0 + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"12\" fill=\"#222222\">"
          << num(t == 0.0 ? 0.0 : t) << "</text>\n";
    }
    const double ystep = nice_step(yr_.hi - yr_.lo, 6);
    for (double t = std::ceil(yr_.lo / ystep) * ystep; t <= yr_.hi + 1e-12;
         t += ystep) {
      const double gy = py(t);
      out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(gy) << "\" x2=\""
          << num(x1) << "\" y2=\"" << num(gy)
          << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(gy + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"12\" fill=\"#222222\">"
          << num(t == 0.0 ? 0.0 : t) << "</text>\n";
    }
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\""
        << num(x1 - x0) << "\" height=\"" << num(y0 - y1)
        << "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    if (!x_label.empty())
      out << "<text x=\"" << num((x0 + x1) / 2.0) << "\" y=\""
          << num(height_ - 12)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"13\" fill=\"#222222\">"
          << escape(x_label) << "</text>\n";
    if (!y_label.empty())
      out << "<text x=\"16\" y=\"" << num((y0 + y1) / 2.0)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"13\" fill=\"#222222\" transform=\"rotate(-90 16 "
          << num((y0 + y1) / 2.0) << ")\">" << escape(y_label) << "</text>\n";
  }

  int width() const { return width_; }

 private:
  int width_;
  int height_;
  Range xr_;
  Range yr_;
};

std::vector<std::size_t> decimate(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t stride = n <= cap ? 1 : (n + cap - 1) / cap;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

void legend(std::ostream& out, const Canvas& canvas,
            const std::vector<PlotSeries>& series) {
  bool any = false;
  for (const auto& s : series) any = any || !s.label.empty();
  if (!any) return;
  double y = kMarginTop + 16.0;
  const double x = canvas.width() - kMarginRight - 150.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].label.empty()) continue;
    const char* color = kPalette[i % kPaletteSize];
    out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y - 4) << "\" x2=\""
        << num(x + 26) << "\" y2=\"" << num(y - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(x + 32) << "\" y=\"" << num(y)
        << "\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\"#222222\">"
        << escape(series[i].label) << "</text>\n";
    y += 18.0;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

void write_line_plot(const std::string& path, const LinePlot& plot) {
  if (plot.series.empty()) throw ConfigError(path + ": no series to plot");
  Range xr, yr;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size())
      throw ConfigError(path + ": series '" + s.label +
                        "' x/y lengths differ");
    if (s.x.empty())
      throw ConfigError(path + ": series '" + s.label + "' is empty");
    for (double v : s.x) xr.include(v);
    for (double v : s.y) yr.include(v);
  }
  for (double r : plot.h_rules) yr.include(r);
  xr.finalize(0.0);
  yr.finalize(0.05);

  const Canvas canvas(plot.width, plot.height, xr, yr);
  std::ofstream out = open_out(path);
  canvas.open(out, plot.title);
  canvas.axes(out, plot.x_label, plot.y_label);
  for (double r : plot.h_rules)
    out << "<line x1=\"" << num(canvas.px(xr.lo)) << "\" y1=\""
        << num(canvas.py(r)) << "\" x2=\"" << num(canvas.px(xr.hi))
        << "\" y2=\"" << num(canvas.py(r))
        << "\" stroke=\"#888888\" stroke-width=\"1.5\" "
           "stroke-dasharray=\"7,5\"/>\n";
  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& s = plot.series[i];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % kPaletteSize]
        << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t j : decimate(s.x.size(), plot.max_points))
      out << num(canvas.px(s.x[j])) << ',' << num(canvas.py(s.y[j])) << ' ';
    out << "\"/>\n";
  }
  legend(out, canvas, plot.series);
  out << "</svg>\n";
  if (!out) throw ConfigError("write failed: " + path);
}

void write_histogram_plot(const std::string& path, const HistogramPlot& plot) {
  const Histogram& h = plot.hist;
  if (h.edges.size() < 2 || h.counts.size() + 1 != h.edges.size())
    throw ConfigError(path + ": malformed histogram");
  Range xr, yr;
  xr.include(h.edges.front());
  xr.include(h.edges.back());
  yr.include(0.0);
  int total = 0;
  for (int c : h.counts) {
    yr.include(static_cast<double>(c));
    total += c;
  }
  xr.finalize(0.02);
  yr.finalize(0.05);

  const Canvas canvas(plot.width, plot.height, xr, yr);
  std::ofstream out = open_out(path);
  canvas.open(out, plot.title);
  canvas.axes(out, plot.x_label, "count");
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double x0 = canvas.px(h.edges[i]);
    const double x1 = canvas.px(h.edges[i + 1]);
    const double y0 = canvas.py(0.0);
    const double y1 = canvas.py(static_cast<double>(h.counts[i]));
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\""
        << num(x1 - x0) << "\" height=\"" << num(y0 - y1) << "\" fill=\""
        << kPalette[0] << "\" fill-opacity=\"0.65\" stroke=\"#ffffff\" "
           "stroke-width=\"0.5\"/>\n";
  }
  if (plot.normal_overlay && h.stddev > 0.0 && total > 0) {
    const double bin_width = h.edges[1] - h.edges[0];
    const double scale = total * bin_width / (h.stddev * std::sqrt(2.0 * M_PI));
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[1]
        << "\" stroke-width=\"2\" points=\"";
    const int samples = 200;
    for (int i = 0; i <= samples; ++i) {
      const double x = h.edges.front() + (h.edges.back() - h.edges.front()) *
                                             static_cast<double>(i) / samples;
      const double z = (x - h.mean) / h.stddev;
      const double y = scale * std::exp(-0.5 * z * z);
      out << num(canvas.px(x)) << ',' << num(canvas.py(y)) << ' ';
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace recbf
