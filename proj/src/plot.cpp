#include "soilrf/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "soilrf/errors.hpp"
#include "soilrf/io.hpp"

namespace soilrf::plot {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 140.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  // 3 decimals are plenty for figure coordinates and keep files byte-stable.
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

}  // namespace

void write_line_chart(const ChartSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());

  Range xr{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  Range yr = xr;
  for (const Series& s : spec.series) {
    for (double v : s.x) xr.expand(v);
    for (double v : s.y) yr.expand(v);
  }
  if (!(xr.hi > xr.lo)) xr.hi = xr.lo + 1.0;
  if (!(yr.hi > yr.lo)) yr.hi = yr.lo + 1.0;
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double v) { return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto sy = [&](double v) {
    return kMarginTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << spec.title << "</text>\n";
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << kHeight - kMarginBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(fx) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(sy(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(fy) << "</text>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(sy(fy)) << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << fmt(sy(fy))
        << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << spec.x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2 << ")\">" << spec.y_label
      << "</text>\n";

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const Series& series = spec.series[s];
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (series.x.size() >= 2) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        if (i) out << ' ';
        out << fmt(sx(series.x[i])) << ',' << fmt(sy(series.y[i]));
      }
      out << "\"/>\n";
    }
    if (series.markers || series.x.size() < 2) {
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        out << "<circle cx=\"" << fmt(sx(series.x[i])) << "\" cy=\"" << fmt(sy(series.y[i]))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
    }
    const double ly = kMarginTop + 14.0 + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kMarginRight + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight + 35 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << series.label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_heatmap_panels(const std::string& title,
                          const std::vector<std::pair<std::string, OccupancyMap>>& panels,
                          const std::filesystem::path& path) {
  if (panels.empty()) throw std::invalid_argument("write_heatmap_panels: no panels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());

  constexpr double kCell = 14.0;
  constexpr double kGap = 30.0;
  double x_cursor = 20.0;
  double max_h = 0.0;
  std::vector<double> offsets;
  for (const auto& [label, map] : panels) {
    offsets.push_back(x_cursor);
    x_cursor += static_cast<double>(map.cols) * kCell + kGap;
    max_h = std::max(max_h, static_cast<double>(map.rows) * kCell);
  }
  const double width = x_cursor;
  const double height = max_h + 80.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& [label, map] = panels[p];
    const double x0 = offsets[p];
    const double y0 = 40.0;
    for (std::size_t r = 0; r < map.rows; ++r) {
      for (std::size_t c = 0; c < map.cols; ++c) {
        const int shade = static_cast<int>(std::lround(255.0 * (1.0 - map.at(r, c))));
        out << "<rect x=\"" << fmt(x0 + static_cast<double>(c) * kCell) << "\" y=\""
            << fmt(y0 + static_cast<double>(r) * kCell) << "\" width=\"" << kCell
            << "\" height=\"" << kCell << "\" fill=\"rgb(" << shade << ',' << shade << ','
            << shade << ")\" stroke=\"#eee\" stroke-width=\"0.3\"/>\n";
      }
    }
    out << "<text x=\"" << fmt(x0 + static_cast<double>(map.cols) * kCell / 2.0) << "\" y=\""
        << fmt(y0 + static_cast<double>(map.rows) * kCell + 18.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace soilrf::plot
