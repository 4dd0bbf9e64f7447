/*
 * Copyright 2026 The Skillpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Built-in nominal paths used by the synthetic scenarios and tests.

#ifndef SKILLPATH_SCENARIOS_HPP_
#define SKILLPATH_SCENARIOS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "skillpath/error.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/path.hpp"

namespace skillpath::scenarios {

/// Closed axis-aligned rectangle in the xy plane at z = 0, traced
/// counterclockwise from its lower-left corner.
inline NominalPath rectangle(double x0 = 100.0, double y0 = -150.0, double width = 400.0,
                             double height = 300.0) {
  return NominalPath({Vec3(x0, y0, 0.0), Vec3(x0 + width, y0, 0.0),
                      Vec3(x0 + width, y0 + height, 0.0), Vec3(x0, y0 + height, 0.0)},
                     true);
}

/// Perimeter of a slightly curved side window: a rounded rectangle centred on
/// the origin whose z sags along x on a cylinder of the given radius.
inline NominalPath glass_contour(double width = 600.0, double height = 350.0,
                                 double corner_radius = 60.0, double sag_radius = 2000.0,
                                 double arc_step_deg = 5.0) {
  const double hx = 0.5 * width - corner_radius;
  const double hy = 0.5 * height - corner_radius;
  const Vec3 centres[4] = {Vec3(hx, -hy, 0), Vec3(hx, hy, 0), Vec3(-hx, hy, 0), Vec3(-hx, -hy, 0)};
  const double start_deg[4] = {-90.0, 0.0, 90.0, 180.0};
  std::vector<Vec3> pts;
  const int steps = static_cast<int>(std::round(90.0 / arc_step_deg));
  for (int c = 0; c < 4; ++c) {
    for (int k = 0; k <= steps; ++k) {
      const double a = deg_to_rad(start_deg[c] + 90.0 * k / steps);
      pts.emplace_back(centres[c].x() + corner_radius * std::cos(a),
                       centres[c].y() + corner_radius * std::sin(a), 0.0);
    }
  }
  for (Vec3& p : pts) {
    p.z() = sag_radius - std::sqrt(sag_radius * sag_radius - p.x() * p.x());
  }
  return NominalPath(std::move(pts), true);
}

inline NominalPath builtin(const std::string& name) {
  if (name == "rectangle") return rectangle();
  if (name == "glass-contour") return glass_contour();
  throw Error(ErrorKind::kConfiguration, "unknown built-in path '" + name + "'");
}

}  // namespace skillpath::scenarios

#endif  // SKILLPATH_SCENARIOS_HPP_
