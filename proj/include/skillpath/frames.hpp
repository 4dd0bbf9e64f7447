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

// Named reference frames and the calibration chain that links them.
//
// An edge (a, b, T) stores the pose of frame b expressed in frame a, so T maps
// b-coordinates into a-coordinates. resolve(a, c) composes edges along the
// tree path: resolve(E, S) = T(E,R) * T(R,F) * T(F,S).

#ifndef SKILLPATH_FRAMES_HPP_
#define SKILLPATH_FRAMES_HPP_

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillpath/error.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/json_util.hpp"

namespace skillpath {

using FrameId = std::string;

namespace frame {
inline const FrameId kFloor = "F";
inline const FrameId kSensor = "S";
inline const FrameId kRobot = "R";
inline const FrameId kEffector = "E";
}  // namespace frame

struct FrameEdge {
  FrameId from;
  FrameId to;
  RigidTransform transform;
};

/// Immutable frame tree. Build through FrameGraph::Builder.
class FrameGraph {
 public:
  class Builder;

  FrameGraph() = default;

  const std::vector<FrameId>& frames() const { return frames_; }
  const std::vector<FrameEdge>& edges() const { return edges_; }

  bool has_frame(const FrameId& id) const {
    return std::find(frames_.begin(), frames_.end(), id) != frames_.end();
  }

  /// Pose of `to` expressed in `from`.
  RigidTransform resolve(const FrameId& from, const FrameId& to) const {
    if (!has_frame(from) || !has_frame(to)) {
      throw Error(ErrorKind::kUnresolvableFrames,
                  "unknown frame in resolve(" + from + ", " + to + ")");
    }
    if (from == to) return RigidTransform::identity();

    // BFS from `from`; parent links give the unique tree path.
    std::map<FrameId, std::pair<FrameId, RigidTransform>> parent;
    std::deque<FrameId> queue{from};
    parent.emplace(from, std::make_pair(from, RigidTransform::identity()));
    while (!queue.empty()) {
      const FrameId cur = queue.front();
      queue.pop_front();
      if (cur == to) break;
      for (const FrameEdge& e : edges_) {
        if (e.from == cur && !parent.count(e.to)) {
          parent.emplace(e.to, std::make_pair(cur, e.transform));
          queue.push_back(e.to);
        } else if (e.to == cur && !parent.count(e.from)) {
          parent.emplace(e.from, std::make_pair(cur, invert(e.transform)));
          queue.push_back(e.from);
        }
      }
    }
    if (!parent.count(to)) {
      throw Error(ErrorKind::kUnresolvableFrames,
                  "no calibration path between " + from + " and " + to);
    }
    std::vector<RigidTransform> hops;
    for (FrameId cur = to; cur != from; cur = parent.at(cur).first) {
      hops.push_back(parent.at(cur).second);
    }
    RigidTransform out = RigidTransform::identity();
    for (auto it = hops.rbegin(); it != hops.rend(); ++it) {
      out = compose(out, *it);
    }
    return out;
  }

  /// Re-expresses a pose given in `from` coordinates in `to` coordinates.
  RigidTransform map_pose(const RigidTransform& pose, const FrameId& from,
                          const FrameId& to) const {
    return compose(resolve(to, from), pose);
  }

 private:
  std::vector<FrameId> frames_;
  std::vector<FrameEdge> edges_;
};

class FrameGraph::Builder {
 public:
  Builder& add_frame(const FrameId& id) {
    if (id.empty()) {
      throw Error(ErrorKind::kConfiguration, "frame name must not be empty");
    }
    if (graph_.has_frame(id)) {
      throw Error(ErrorKind::kConfiguration, "duplicate frame '" + id + "'");
    }
    graph_.frames_.push_back(id);
    return *this;
  }

  Builder& add_default_frames() {
    for (const FrameId& id : {frame::kFloor, frame::kSensor, frame::kRobot,
                              frame::kEffector}) {
      add_frame(id);
    }
    return *this;
  }

  Builder& add_edge(const FrameId& from, const FrameId& to,
                    const RigidTransform& t) {
    for (const FrameId& id : {from, to}) {
      if (!graph_.has_frame(id)) {
        throw Error(ErrorKind::kConfiguration, "unknown frame '" + id + "'");
      }
    }
    if (from == to) {
      throw Error(ErrorKind::kConfiguration, "self edge on '" + from + "'");
    }
    for (const FrameEdge& e : graph_.edges_) {
      if (e.from == from && e.to == to) {
        throw Error(ErrorKind::kConfiguration,
                    "duplicate edge " + from + "->" + to);
      }
    }
    if (connected(from, to)) {
      throw Error(ErrorKind::kConfiguration,
                  "edge " + from + "->" + to + " closes a cycle");
    }
    graph_.edges_.push_back(FrameEdge{from, to, t});
    return *this;
  }

  FrameGraph build() const { return graph_; }

 private:
  bool connected(const FrameId& a, const FrameId& b) const {
    try {
      graph_.resolve(a, b);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  FrameGraph graph_;
};

/// Calibration document:
///   {"version":1, "frames":["F","S","R","E"],
///    "edges":[{"from":"E","to":"R","xyz_mm":[x,y,z],
///              "fixed_xyz_deg":[phi,theta,psi]}]}
/// An edge may give "rotation_matrix" (3x3 rows) instead of fixed_xyz_deg.
inline FrameGraph load_calibration(std::string_view text,
                                   std::string_view source = "calibration") {
  namespace jf = json_field;
  const Json doc = parse_json_text(text, source);
  const std::string root(source);
  jf::require_object(doc, root);
  jf::reject_unknown(doc, root, {"version", "frames", "edges"});
  jf::version(doc, root);

  FrameGraph::Builder builder;
  if (auto it = doc.find("frames"); it != doc.end()) {
    if (!it->is_array()) jf::fail(root + ".frames", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = root + ".frames[" + std::to_string(i) + "]";
      try {
        builder.add_frame(jf::string((*it)[i], where));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kConfiguration) throw;
        jf::fail(where, e.what(), ErrorKind::kConfiguration);
      }
    }
  } else {
    builder.add_default_frames();
  }

  if (auto it = doc.find("edges"); it != doc.end()) {
    if (!it->is_array()) jf::fail(root + ".edges", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& e = (*it)[i];
      const std::string where = root + ".edges[" + std::to_string(i) + "]";
      jf::require_object(e, where);
      jf::reject_unknown(e, where,
                         {"from", "to", "xyz_mm", "fixed_xyz_deg",
                          "rotation_matrix"});
      const FrameId from = jf::string(jf::at(e, where, "from"), where + ".from");
      const FrameId to = jf::string(jf::at(e, where, "to"), where + ".to");
      RigidTransform t;
      t.translation = jf::vec3(jf::at(e, where, "xyz_mm"), where + ".xyz_mm");
      const bool has_angles = e.contains("fixed_xyz_deg");
      const bool has_matrix = e.contains("rotation_matrix");
      if (has_angles == has_matrix) {
        jf::fail(where, "give exactly one of fixed_xyz_deg or rotation_matrix");
      }
      if (has_angles) {
        const Vec3 deg = jf::vec3(e["fixed_xyz_deg"], where + ".fixed_xyz_deg");
        t.rotation = fixed_xyz_to_matrix(
            FixedXYZ{deg_to_rad(deg[0]), deg_to_rad(deg[1]), deg_to_rad(deg[2])});
      } else {
        const Json& rows = e["rotation_matrix"];
        const std::string rw = where + ".rotation_matrix";
        if (!rows.is_array() || rows.size() != 3) jf::fail(rw, "expected 3 rows");
        Eigen::Matrix3d m;
        for (int r = 0; r < 3; ++r) {
          m.row(r) = jf::vec3(rows[static_cast<std::size_t>(r)],
                              rw + "[" + std::to_string(r) + "]");
        }
        try {
          t.rotation = RotationMatrix::from_matrix(m);
        } catch (const Error& err) {
          jf::fail(rw, err.what(), ErrorKind::kConfiguration);
        }
      }
      try {
        builder.add_edge(from, to, t);
      } catch (const Error& err) {
        jf::fail(where, err.what(), ErrorKind::kConfiguration);
      }
    }
  }
  return builder.build();
}

inline FrameGraph load_calibration_file(const std::filesystem::path& path) {
  return load_calibration(read_file(path), path.string());
}

}  // namespace skillpath

#endif  // SKILLPATH_FRAMES_HPP_
