#include "twinbeam/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "twinbeam/errors.hpp"

namespace twinbeam {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<Plot>& panels, int width, int panel_height) {
  const int ml = 60, mr = 20, mt = 30, mb = 40;
  const int height = panel_height * std::max<int>(1, static_cast<int>(panels.size()));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Plot& plot = panels[p];
    const double y0 = static_cast<double>(p) * panel_height;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : plot.series)
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
    if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }
    const double pw = width - ml - mr, ph = panel_height - mt - mb;
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return y0 + mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    os << "<text x=\"" << width / 2 << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
       << escape(plot.title) << "</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << y0 + mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"" << y0 + mt + ph + 14 << "\">" << fmt(xmin) << "</text>\n";
    os << "<text x=\"" << ml + pw << "\" y=\"" << y0 + mt + ph + 14 << "\" text-anchor=\"end\">"
       << fmt(xmax) << "</text>\n";
    os << "<text x=\"" << ml - 4 << "\" y=\"" << y0 + mt + ph << "\" text-anchor=\"end\">"
       << fmt(ymin) << "</text>\n";
    os << "<text x=\"" << ml - 4 << "\" y=\"" << y0 + mt + 10 << "\" text-anchor=\"end\">"
       << fmt(ymax) << "</text>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << y0 + mt + ph + 30
       << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
    os << "<text x=\"14\" y=\"" << y0 + mt + ph / 2 << "\" transform=\"rotate(-90 14 "
       << y0 + mt + ph / 2 << ")\" text-anchor=\"middle\">" << escape(plot.y_label) << "</text>\n";

    for (std::size_t s = 0; s < plot.series.size(); ++s) {
      const Series& ser = plot.series[s];
      const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
        if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
        os << fmt(X(ser.x[i])) << ',' << fmt(Y(ser.y[i])) << ' ';
      }
      os << "\"/>\n";
      os << "<text x=\"" << ml + pw - 4 << "\" y=\"" << y0 + mt + 14 + 13 * s
         << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(ser.label) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

void save_svg(const std::string& path, const std::vector<Plot>& panels) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << render_svg(panels);
}

}  // namespace twinbeam
