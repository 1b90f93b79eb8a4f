#include "motif/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace motif::svg {

void LinePlot::add_series(const std::vector<double>& x, const std::vector<double>& y,
                          std::string label, std::string color) {
  if (x.size() != y.size()) throw std::runtime_error("LinePlot: x/y size mismatch");
  series_.push_back({x, y, std::move(label), std::move(color)});
}

void LinePlot::write(const std::filesystem::path& path) const {
  constexpr double kW = 720, kH = 480;
  constexpr double kL = 70, kR = 20, kT = 40, kB = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series_)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
  if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double v) { return kL + (v - xmin) / (xmax - xmin) * (kW - kL - kR); };
  auto sy = [&](double v) { return kH - kB - (v - ymin) / (ymax - ymin) * (kH - kT - kB); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("LinePlot: cannot open " + path.string());
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">", kW / 2);
  out << buf << title_ << "</text>\n";

  // axes with 6 ticks each
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
                  sx(xv), kT, sx(xv), kH - kB);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n", kL,
                  sy(yv), kW - kR, sy(yv));
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n", sx(xv),
                  kH - kB + 18, xv);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", kL - 6,
                  sy(yv) + 4, yv);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                kL, kT, kW - kL - kR, kH - kT - kB);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%.0f\" y=\"%.0f\" text-anchor=\"middle\">", kW / 2,
                kH - 10);
  out << buf << x_label_ << "</text>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"16\" y=\"%.0f\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
                "%.0f)\">",
                kH / 2, kH / 2);
  out << buf << y_label_ << "</text>\n";

  double ly = kT + 16;
  for (const auto& s : series_) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", sx(s.x[i]), sy(s.y[i]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                  "stroke-width=\"2\"/>\n",
                  kL + 8, ly, kL + 32, ly, s.color.c_str());
    out << buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\">", kL + 38, ly + 4);
    out << buf << s.label << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
}

}  // namespace motif::svg
