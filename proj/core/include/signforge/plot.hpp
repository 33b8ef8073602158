#pragma once

#include <string>
#include <vector>

namespace signforge {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Renders a line plot (axes, grid, legend, tick labels) to a PNG. Output is
/// a pure function of the inputs; series colors come from a fixed palette.
void render_line_plot(const std::vector<PlotSeries>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& png_path, int width = 640, int height = 420);

}  // namespace signforge
