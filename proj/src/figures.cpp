/*
 Copyright 2026 The smpc authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "smpc/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace smpc {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

SvgCanvas::SvgCanvas(double x_min, double x_max, double y_min, double y_max,
                     int width, int height)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max),
      width_(width), height_(height) {}

double SvgCanvas::px(double x) const {
  const double w = width_ - margin_left_ - margin_right_;
  return margin_left_ + (x - x_min_) / (x_max_ - x_min_) * w;
}

double SvgCanvas::py(double y) const {
  const double h = height_ - margin_top_ - margin_bottom_;
  return margin_top_ + (y_max_ - y) / (y_max_ - y_min_) * h;
}

void SvgCanvas::polyline(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::string& color, double stroke_width,
                         const std::string& dash) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
     << stroke_width << "\"";
  if (!dash.empty()) os << " stroke-dasharray=\"" << dash << "\"";
  os << " points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    os << fmt(px(xs[i])) << "," << fmt(py(ys[i])) << " ";
  }
  os << "\"/>\n";
  body_ += os.str();
}

void SvgCanvas::closed_path(const std::vector<double>& xs,
                            const std::vector<double>& ys,
                            const std::string& stroke, const std::string& fill,
                            double opacity) {
  std::ostringstream os;
  os << "<path stroke=\"" << stroke << "\" fill=\"" << fill
     << "\" fill-opacity=\"" << opacity << "\" d=\"M";
  for (size_t i = 0; i < xs.size(); ++i) {
    os << fmt(px(xs[i])) << " " << fmt(py(ys[i])) << (i == 0 ? " L" : " ");
  }
  os << "Z\"/>\n";
  body_ += os.str();
}

void SvgCanvas::band(const std::vector<double>& xs,
                     const std::vector<double>& lo,
                     const std::vector<double>& hi, const std::string& fill,
                     double opacity) {
  std::vector<double> bx, by;
  for (size_t i = 0; i < xs.size(); ++i) {
    bx.push_back(xs[i]);
    by.push_back(hi[i]);
  }
  for (size_t i = xs.size(); i-- > 0;) {
    bx.push_back(xs[i]);
    by.push_back(lo[i]);
  }
  closed_path(bx, by, "none", fill, opacity);
}

void SvgCanvas::vline(double x, const std::string& color, double stroke_width,
                      const std::string& dash) {
  std::ostringstream os;
  os << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << fmt(py(y_min_))
     << "\" x2=\"" << fmt(px(x)) << "\" y2=\"" << fmt(py(y_max_))
     << "\" stroke=\"" << color << "\" stroke-width=\"" << stroke_width
     << "\"";
  if (!dash.empty()) os << " stroke-dasharray=\"" << dash << "\"";
  os << "/>\n";
  body_ += os.str();
}

void SvgCanvas::shade_right_of(double x, const std::string& fill,
                               double opacity) {
  if (x > x_max_) return;
  std::ostringstream os;
  os << "<rect x=\"" << fmt(px(x)) << "\" y=\"" << fmt(py(y_max_))
     << "\" width=\"" << fmt(px(x_max_) - px(x)) << "\" height=\""
     << fmt(py(y_min_) - py(y_max_)) << "\" fill=\"" << fill
     << "\" fill-opacity=\"" << opacity << "\"/>\n";
  body_ += os.str();
}

void SvgCanvas::text(double x, double y, const std::string& s,
                     const std::string& color, int font_size) {
  std::ostringstream os;
  os << "<text x=\"" << fmt(px(x)) << "\" y=\"" << fmt(py(y))
     << "\" fill=\"" << color << "\" font-size=\"" << font_size
     << "\" font-family=\"sans-serif\">" << s << "</text>\n";
  body_ += os.str();
}

void SvgCanvas::axes(const std::string& x_label, const std::string& y_label,
                     int x_ticks, int y_ticks) {
  std::ostringstream os;
  const double x0 = px(x_min_), x1 = px(x_max_);
  const double y0 = py(y_min_), y1 = py(y_max_);
  os << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y1) << "\" width=\""
     << fmt(x1 - x0) << "\" height=\"" << fmt(y0 - y1)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= x_ticks; ++i) {
    const double xv = x_min_ + (x_max_ - x_min_) * i / x_ticks;
    os << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << fmt(y0) << "\" x2=\""
       << fmt(px(xv)) << "\" y2=\"" << fmt(y0 + 4) << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(y0 + 18)
       << "\" fill=\"#333\" font-size=\"11\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\">"
       << fmt(xv) << "</text>\n";
  }
  for (int i = 0; i <= y_ticks; ++i) {
    const double yv = y_min_ + (y_max_ - y_min_) * i / y_ticks;
    os << "<line x1=\"" << fmt(x0 - 4) << "\" y1=\"" << fmt(py(yv))
       << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(py(yv))
       << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(py(yv) + 4)
       << "\" fill=\"#333\" font-size=\"11\" text-anchor=\"end\" "
          "font-family=\"sans-serif\">"
       << fmt(yv) << "</text>\n";
  }
  os << "<text x=\"" << fmt(0.5 * (x0 + x1)) << "\" y=\""
     << fmt(static_cast<double>(height_) - 8)
     << "\" fill=\"#333\" font-size=\"13\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\">"
     << x_label << "</text>\n";
  os << "<text x=\"14\" y=\"" << fmt(0.5 * (y0 + y1))
     << "\" fill=\"#333\" font-size=\"13\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" transform=\"rotate(-90 14 "
     << fmt(0.5 * (y0 + y1)) << ")\">" << y_label << "</text>\n";
  body_ += os.str();
}

void SvgCanvas::legend_entry(const std::string& color,
                             const std::string& label) {
  const double lx = width_ - margin_right_ - 150;
  const double ly = margin_top_ + 14 + 18 * legend_count_++;
  std::ostringstream os;
  os << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\""
     << fmt(lx + 24) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
     << "\" stroke-width=\"2\"/>\n";
  os << "<text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(ly + 4)
     << "\" fill=\"#333\" font-size=\"12\" font-family=\"sans-serif\">"
     << label << "</text>\n";
  body_ += os.str();
}

std::string SvgCanvas::finish() const {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
     << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << " "
     << height_ << "\">\n<rect width=\"100%\" height=\"100%\" "
        "fill=\"white\"/>\n"
     << body_ << "</svg>\n";
  return os.str();
}

std::string color_for_scheme(const std::string& scheme) {
  if (scheme == "ivsmpc") return "#0f9960";
  if (scheme == "icsmpc") return "#d9822b";
  if (scheme == "lqr") return "#1f4e9c";
  return "#666666";
}

std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(40 + 200 * t);
  const int g = static_cast<int>(60 + 60 * (1.0 - std::abs(2 * t - 1)));
  const int b = static_cast<int>(200 * (1.0 - t) + 40);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace smpc
