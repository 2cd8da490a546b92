#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soilrf/types.hpp"

namespace soilrf::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Static SVG line/scatter chart with auto-scaled axes and a legend.
void write_line_chart(const ChartSpec& spec, const std::filesystem::path& path);

/// One grayscale panel per (label, map), values mapped over [0, 1].
void write_heatmap_panels(const std::string& title,
                          const std::vector<std::pair<std::string, OccupancyMap>>& panels,
                          const std::filesystem::path& path);

}  // namespace soilrf::plot
