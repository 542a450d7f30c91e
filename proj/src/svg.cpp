#include "unida/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace unida {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// tick step of the form {1,2,5}*10^k giving 4-8 ticks
double nice_step(double range) {
  if (range <= 0.0) return 1.0;
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step;
  if (norm < 1.5)
    step = 1.0;
  else if (norm < 3.5)
    step = 2.0;
  else if (norm < 7.5)
    step = 5.0;
  else
    step = 10.0;
  return step * mag;
}

}  // namespace

std::string render_svg_plot(const SvgPlotSpec& spec, const std::vector<SvgSeries>& series) {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!any) throw std::runtime_error("render_svg_plot: no points");
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  // 5% margins in data space
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  const double ml = 62, mr = 16, mt = 34, mb = 46;
  const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
  const auto mapx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto mapy = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << " "
      << spec.height << "\">\n";
  svg << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << px(spec.width / 2.0)
      << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << xml_escape(spec.title) << "</text>\n";

  // grid + ticks
  const double xstep = nice_step(xmax - xmin), ystep = nice_step(ymax - ymin);
  svg << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-12; t += xstep)
    svg << "<line x1=\"" << px(mapx(t)) << "\" y1=\"" << px(mt) << "\" x2=\""
        << px(mapx(t)) << "\" y2=\"" << px(mt + ph) << "\"/>\n";
  for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-12; t += ystep)
    svg << "<line x1=\"" << px(ml) << "\" y1=\"" << px(mapy(t)) << "\" x2=\""
        << px(ml + pw) << "\" y2=\"" << px(mapy(t)) << "\"/>\n";
  svg << "</g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-12; t += xstep)
    svg << "<text x=\"" << px(mapx(t)) << "\" y=\"" << px(mt + ph + 16)
        << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-12; t += ystep)
    svg << "<text x=\"" << px(ml - 6) << "\" y=\"" << px(mapy(t) + 4)
        << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  svg << "</g>\n";

  svg << "<rect x=\"" << px(ml) << "\" y=\"" << px(mt) << "\" width=\"" << px(pw)
      << "\" height=\"" << px(ph)
      << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";

  // axis labels
  svg << "<text x=\"" << px(ml + pw / 2.0) << "\" y=\"" << px(spec.height - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(spec.x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << px(mt + ph / 2.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << px(mt + ph / 2.0) << ")\">" << xml_escape(spec.y_label) << "</text>\n";

  // series
  for (const auto& s : series) {
    const char* color = kPalette[((s.color % kPaletteSize) + kPaletteSize) % kPaletteSize];
    if (s.line && s.points.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
      if (s.dashed) svg << " stroke-dasharray=\"6,4\"";
      svg << " points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (i) svg << " ";
        svg << px(mapx(s.points[i].first)) << "," << px(mapy(s.points[i].second));
      }
      svg << "\"/>\n";
    }
    if (!s.line) {
      svg << "<g fill=\"" << color << "\" fill-opacity=\"0.65\">\n";
      for (const auto& [x, y] : s.points)
        svg << "<circle cx=\"" << px(mapx(x)) << "\" cy=\"" << px(mapy(y))
            << "\" r=\"2.4\"/>\n";
      svg << "</g>\n";
    } else if (s.points.size() <= 24) {
      // vertex markers on sparse lines
      svg << "<g fill=\"" << color << "\">\n";
      for (const auto& [x, y] : s.points)
        svg << "<circle cx=\"" << px(mapx(x)) << "\" cy=\"" << px(mapy(y))
            << "\" r=\"3\"/>\n";
      svg << "</g>\n";
    }
  }

  if (spec.legend) {
    double ly = mt + 10;
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (const auto& s : series) {
      if (s.label.empty()) continue;
      const char* color =
          kPalette[((s.color % kPaletteSize) + kPaletteSize) % kPaletteSize];
      svg << "<line x1=\"" << px(ml + 10) << "\" y1=\"" << px(ly) << "\" x2=\""
          << px(ml + 30) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"";
      if (s.dashed) svg << " stroke-dasharray=\"6,4\"";
      svg << "/>\n";
      svg << "<text x=\"" << px(ml + 36) << "\" y=\"" << px(ly + 4) << "\">"
          << xml_escape(s.label) << "</text>\n";
      ly += 16;
    }
    svg << "</g>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
  if (!out) throw std::runtime_error("write_text_file: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace unida
