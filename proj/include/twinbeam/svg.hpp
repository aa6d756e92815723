#pragma once

#include <string>
#include <vector>

namespace twinbeam {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/** Minimal line-plot writer: one panel per plot, stacked vertically. */
std::string render_svg(const std::vector<Plot>& panels, int width = 640, int panel_height = 260);

void save_svg(const std::string& path, const std::vector<Plot>& panels);

}  // namespace twinbeam
