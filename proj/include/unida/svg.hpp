#pragma once

#include <string>
#include <utility>
#include <vector>

namespace unida {

// One plotted series: polyline when `line`, circle markers otherwise.
struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool line = true;
  bool dashed = false;
  int color = 0;  // palette index
};

struct SvgPlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 440;
  bool legend = true;
};

// Pure function of its inputs; coordinates are written with fixed
// precision so identical data gives byte-identical output.
std::string render_svg_plot(const SvgPlotSpec& spec, const std::vector<SvgSeries>& series);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace unida
