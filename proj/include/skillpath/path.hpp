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

// Nominal CAD/CAM path: an arc-length parameterized polyline.

#ifndef SKILLPATH_PATH_HPP_
#define SKILLPATH_PATH_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "skillpath/error.hpp"
#include "skillpath/frames.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/json_util.hpp"

namespace skillpath {

inline constexpr double kDuplicatePointTol = 1e-6;  // mm

class NominalPath {
 public:
  /// Consecutive points closer than 1e-6 mm are merged; a closed path also
  /// drops a trailing copy of its first point.
  NominalPath(std::vector<Vec3> points, bool closed,
              FrameId frame = frame::kFloor)
      : closed_(closed), frame_(std::move(frame)) {
    for (const Vec3& p : points) {
      if (!p.allFinite()) {
        throw Error(ErrorKind::kDegenerateInput, "path point is not finite");
      }
      if (points_.empty() || (p - points_.back()).norm() >= kDuplicatePointTol) {
        points_.push_back(p);
      }
    }
    if (closed_ && points_.size() > 1 &&
        (points_.back() - points_.front()).norm() < kDuplicatePointTol) {
      points_.pop_back();
    }
    if (points_.size() < 2) {
      throw Error(ErrorKind::kDegenerateInput,
                  "path needs at least 2 distinct points");
    }
    cumulative_.reserve(points_.size() + 1);
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      cumulative_.push_back(cumulative_.back() +
                            (points_[i] - points_[i - 1]).norm());
    }
    if (closed_) {
      cumulative_.push_back(cumulative_.back() +
                            (points_.front() - points_.back()).norm());
    }
    if (!(cumulative_.back() > 0.0)) {
      throw Error(ErrorKind::kDegenerateInput, "path has zero length");
    }
  }

  const std::vector<Vec3>& points() const { return points_; }
  bool closed() const { return closed_; }
  const FrameId& frame() const { return frame_; }
  double total_length() const { return cumulative_.back(); }

  /// Arc length at each vertex; closed paths carry one extra entry for the
  /// closing segment, so the last entry is always the total length.
  const std::vector<double>& arc_lengths() const { return cumulative_; }

  std::size_t segment_count() const { return cumulative_.size() - 1; }
  const Vec3& segment_start(std::size_t k) const { return points_[k]; }
  const Vec3& segment_end(std::size_t k) const {
    return points_[(k + 1) % points_.size()];
  }

  /// Open paths clamp to [0, L]; closed paths wrap, so evaluate(L) is the
  /// first point.
  Vec3 evaluate(double s) const {
    const double length = total_length();
    if (closed_) {
      s = std::fmod(s, length);
      if (s < 0.0) s += length;
    } else {
      s = std::clamp(s, 0.0, length);
    }
    const std::size_t k = segment_at(s);
    const double seg = cumulative_[k + 1] - cumulative_[k];
    const double u = (s - cumulative_[k]) / seg;
    const Vec3& a = segment_start(k);
    const Vec3& b = segment_end(k);
    return a + u * (b - a);
  }

  /// Index of the segment containing arc length s (already in range).
  std::size_t segment_at(double s) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t k = it == cumulative_.begin()
                        ? 0
                        : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    return std::min(k, segment_count() - 1);
  }

  /// Same closed contour, starting at arc length s0.
  NominalPath rotated(double s0) const {
    if (!closed_) {
      throw Error(ErrorKind::kContract, "only closed paths can be rotated");
    }
    const double length = total_length();
    s0 = std::fmod(s0, length);
    if (s0 < 0.0) s0 += length;
    const std::size_t k = segment_at(s0);
    std::vector<Vec3> pts;
    pts.reserve(points_.size() + 1);
    pts.push_back(evaluate(s0));
    for (std::size_t i = 1; i <= points_.size(); ++i) {
      pts.push_back(points_[(k + i) % points_.size()]);
    }
    return NominalPath(std::move(pts), true, frame_);
  }

  /// Opposite traversal direction; closed paths keep their start point.
  NominalPath reversed() const {
    std::vector<Vec3> pts(points_.rbegin(), points_.rend());
    if (closed_) std::rotate(pts.begin(), pts.end() - 1, pts.end());
    return NominalPath(std::move(pts), closed_, frame_);
  }

 private:
  std::vector<Vec3> points_;
  std::vector<double> cumulative_;
  bool closed_;
  FrameId frame_;
};

/// {"version":1, "units":"mm"|"m", "closed":bool, "frame":"F",
///  "points":[[x,y,z],...]}
inline NominalPath parse_nominal_path(std::string_view text,
                                      std::string_view source = "nominal path") {
  namespace jf = json_field;
  const Json doc = parse_json_text(text, source);
  const std::string root(source);
  jf::require_object(doc, root);
  jf::reject_unknown(doc, root, {"version", "units", "closed", "frame", "points"});
  jf::version(doc, root);
  const std::string units = jf::string(jf::at(doc, root, "units"), root + ".units");
  double scale = 1.0;
  if (units == "mm") {
    scale = 1.0;
  } else if (units == "m") {
    scale = 1000.0;
  } else {
    jf::fail(root + ".units", "unknown unit '" + units + "'");
  }
  const bool closed = jf::boolean(jf::at(doc, root, "closed"), root + ".closed");
  FrameId frame_id = frame::kFloor;
  if (doc.contains("frame")) frame_id = jf::string(doc["frame"], root + ".frame");
  const Json& pts = jf::at(doc, root, "points");
  if (!pts.is_array()) jf::fail(root + ".points", "expected an array");
  std::vector<Vec3> points;
  points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    points.push_back(
        scale * jf::vec3(pts[i], root + ".points[" + std::to_string(i) + "]"));
  }
  try {
    return NominalPath(std::move(points), closed, frame_id);
  } catch (const Error& e) {
    jf::fail(root, e.what());
  }
}

inline NominalPath load_nominal_path_file(const std::filesystem::path& path) {
  return parse_nominal_path(read_file(path), path.string());
}

inline std::string serialize_nominal_path(const NominalPath& path) {
  OrderedJson doc;
  doc["version"] = 1;
  doc["units"] = "mm";
  doc["closed"] = path.closed();
  doc["frame"] = path.frame();
  OrderedJson pts = OrderedJson::array();
  for (const Vec3& p : path.points()) pts.push_back({p.x(), p.y(), p.z()});
  doc["points"] = std::move(pts);
  return doc.dump(2) + "\n";
}

/// Arc-length stations spaced evenly at L/n, n = round(L / spacing). With
/// snapping, each interior vertex replaces its nearest movable station (at
/// most one vertex per station, the closest wins) so corners survive
/// resampling; the end stations never move.
/// Closed paths omit the station at L, which coincides with 0.
inline std::vector<double> resample_stations(const NominalPath& path,
                                             double spacing_mm,
                                             bool snap_vertices = true) {
  const double length = path.total_length();
  if (!(spacing_mm > 0.0) || spacing_mm >= length) {
    throw Error(ErrorKind::kDegenerateSpacing,
                "spacing must be in (0, path length)");
  }
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::round(length / spacing_mm)));
  const double h = length / static_cast<double>(n);
  const std::size_t count = path.closed() ? n : n + 1;
  std::vector<double> stations(count);
  for (std::size_t k = 0; k < count; ++k) stations[k] = static_cast<double>(k) * h;
  if (!path.closed()) stations.back() = length;

  if (snap_vertices) {
    const auto& arc = path.arc_lengths();
    std::vector<double> best(count, h);  // distance of the snapped vertex
    const std::size_t first = 1;
    const std::size_t last = path.points().size() - (path.closed() ? 0 : 1);
    for (std::size_t v = first; v < last; ++v) {
      const double sv = arc[v];
      if (n < 2) break;
      // Stations 0 and n are pinned to the path ends, so a vertex close to
      // either end takes the nearest interior station instead.
      const auto k = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(sv / h)), 1, n - 1);
      const double d = std::abs(static_cast<double>(k) * h - sv);
      if (d < best[k]) {
        best[k] = d;
        stations[k] = sv;
      }
    }
  }
  return stations;
}

inline NominalPath resample(const NominalPath& path, double spacing_mm,
                            bool snap_vertices = true) {
  std::vector<Vec3> pts;
  for (double s : resample_stations(path, spacing_mm, snap_vertices)) {
    pts.push_back(path.evaluate(s));
  }
  return NominalPath(std::move(pts), path.closed(), path.frame());
}

}  // namespace skillpath

#endif  // SKILLPATH_PATH_HPP_
