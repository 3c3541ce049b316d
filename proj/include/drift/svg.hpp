#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace drift {

struct Series {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct Bar {
  std::string label;
  double value = 0.0;
};

// Self-contained SVG line chart: axes, tick labels, one polyline with point
// markers per series, legend. Series need equal-length non-empty xs/ys.
void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<Series>& series);

// Self-contained SVG bar chart, one labeled bar per entry.
void write_bar_chart_svg(const std::filesystem::path& path,
                         const std::string& title, const std::string& y_label,
                         const std::vector<Bar>& bars);

}  // namespace drift
