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
#ifndef SMPC_FIGURES_HPP_
#define SMPC_FIGURES_HPP_

#include <string>
#include <vector>

#include "smpc/types.hpp"

namespace smpc {

/// Minimal SVG line-plot canvas with a linear world-to-viewport map.
class SvgCanvas {
 public:
  SvgCanvas(double x_min, double x_max, double y_min, double y_max,
            int width = 640, int height = 420);

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, double stroke_width = 1.5,
                const std::string& dash = "");
  void closed_path(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& stroke, const std::string& fill,
                   double opacity);
  void band(const std::vector<double>& xs, const std::vector<double>& lo,
            const std::vector<double>& hi, const std::string& fill,
            double opacity);
  void vline(double x, const std::string& color, double stroke_width = 1.0,
             const std::string& dash = "4,3");
  void shade_right_of(double x, const std::string& fill, double opacity);
  void text(double x, double y, const std::string& s,
            const std::string& color = "#333", int font_size = 12);
  void axes(const std::string& x_label, const std::string& y_label,
            int x_ticks = 6, int y_ticks = 5);
  void legend_entry(const std::string& color, const std::string& label);

  std::string finish() const;

 private:
  double px(double x) const;
  double py(double y) const;

  double x_min_, x_max_, y_min_, y_max_;
  int width_, height_;
  int margin_left_ = 56, margin_right_ = 16, margin_top_ = 16,
      margin_bottom_ = 44;
  int legend_count_ = 0;
  std::string body_;
};

std::string color_for_scheme(const std::string& scheme);
std::string heat_color(double t);  // 0 -> blue, 1 -> red

}  // namespace smpc

#endif  // SMPC_FIGURES_HPP_
