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

// Session state shared by fuse, validate, serve and emit, and its versioned
// JSON file.

#ifndef SKILLPATH_SESSION_HPP_
#define SKILLPATH_SESSION_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillpath/emit.hpp"
#include "skillpath/error.hpp"
#include "skillpath/json_util.hpp"
#include "skillpath/kinematics.hpp"
#include "skillpath/pathfusion.hpp"

namespace skillpath {

struct EditRecord {
  std::size_t index = 0;
  std::string kind;  // "edit" or "revert"
  std::optional<Vec3> orientation_fixed_xyz_deg;
  std::optional<double> speed_mm_s;
  std::string author;
  std::string timestamp;
};

struct SessionState {
  std::string created;
  std::string source_digest;
  std::uint64_t revision = 0;
  bool approved = false;
  FusedPath path;      // current, possibly edited
  FusedPath original;  // as fused, for revert
  std::vector<EditRecord> edits;  // append-only
  ValidationReport report;
};

inline Vec3 fixed_xyz_deg(const RotationMatrix& r) {
  const FixedXYZ f = matrix_to_fixed_xyz(r);
  return Vec3(rad_to_deg(f.phi), rad_to_deg(f.theta), rad_to_deg(f.psi));
}

inline RotationMatrix from_fixed_xyz_deg(const Vec3& deg) {
  return fixed_xyz_to_matrix({deg_to_rad(deg[0]), deg_to_rad(deg[1]), deg_to_rad(deg[2])});
}

inline OrderedJson waypoint_json(const Waypoint& w, std::size_t index) {
  OrderedJson j;
  j["index"] = index;
  j["s_mm"] = w.s;
  j["position_mm"] = {w.position.x(), w.position.y(), w.position.z()};
  const Vec3 deg = fixed_xyz_deg(w.orientation);
  j["orientation_fixed_xyz_deg"] = {deg[0], deg[1], deg[2]};
  OrderedJson rows = OrderedJson::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back({w.orientation(r, 0), w.orientation(r, 1), w.orientation(r, 2)});
  }
  j["rotation"] = std::move(rows);
  j["speed_mm_s"] = w.speed;
  return j;
}

inline OrderedJson path_json(const FusedPath& p) {
  OrderedJson arr = OrderedJson::array();
  for (std::size_t i = 0; i < p.waypoints.size(); ++i) arr.push_back(waypoint_json(p.waypoints[i], i));
  return arr;
}

/// "ok", "warning" (near a joint limit) or "violation".
inline std::string waypoint_status(const ValidationReport& r, std::size_t i) {
  if (r.has_violation_at(i)) return "violation";
  if (i < r.waypoints.size() && r.waypoints[i].margin_warning) return "warning";
  return "ok";
}

inline OrderedJson report_json(const ValidationReport& r) {
  OrderedJson j;
  j["pass"] = r.pass();
  OrderedJson v = OrderedJson::array();
  for (const Violation& x : r.violations) {
    v.push_back(OrderedJson{{"index", x.index}, {"kind", std::string(to_string(x.kind))},
                            {"message", x.message}});
  }
  j["violations"] = std::move(v);
  OrderedJson w = OrderedJson::array();
  for (std::size_t i = 0; i < r.waypoints.size(); ++i) {
    const WaypointCheck& c = r.waypoints[i];
    OrderedJson e;
    e["index"] = i;
    e["status"] = waypoint_status(r, i);
    e["reachable"] = c.reachable;
    e["solutions"] = c.solution_count;
    if (c.joints) {
      OrderedJson q = OrderedJson::array(), mg = OrderedJson::array(), sp = OrderedJson::array();
      for (int k = 0; k < kJoints; ++k) {
        q.push_back(rad_to_deg((*c.joints)[k]));
        mg.push_back(rad_to_deg(c.limit_margins[k]));
        sp.push_back(rad_to_deg(c.joint_speeds[k]));
      }
      e["joints_deg"] = std::move(q);
      e["limit_margins_deg"] = std::move(mg);
      e["joint_speeds_deg_s"] = std::move(sp);
    } else {
      e["joints_deg"] = nullptr;
    }
    e["margin_warning"] = c.margin_warning;
    w.push_back(std::move(e));
  }
  j["waypoints"] = std::move(w);
  return j;
}

inline OrderedJson edit_json(const EditRecord& e) {
  OrderedJson j;
  j["index"] = e.index;
  j["kind"] = e.kind;
  if (e.orientation_fixed_xyz_deg) {
    const Vec3& d = *e.orientation_fixed_xyz_deg;
    j["orientation_fixed_xyz_deg"] = {d[0], d[1], d[2]};
  }
  if (e.speed_mm_s) j["speed_mm_s"] = *e.speed_mm_s;
  j["author"] = e.author;
  j["timestamp"] = e.timestamp;
  return j;
}

inline std::string serialize_session(const SessionState& s) {
  OrderedJson j;
  j["format"] = "skillpath-session";
  j["version"] = 1;
  j["created"] = s.created;
  j["source_digest"] = s.source_digest;
  j["revision"] = s.revision;
  j["approved"] = s.approved;
  j["frame"] = s.path.frame;
  j["waypoints"] = path_json(s.path);
  j["original_waypoints"] = path_json(s.original);
  OrderedJson edits = OrderedJson::array();
  for (const EditRecord& e : s.edits) edits.push_back(edit_json(e));
  j["edits"] = std::move(edits);
  j["report"] = report_json(s.report);
  return j.dump(1) + "\n";
}

namespace detail {

inline FusedPath parse_waypoints(const Json& arr, const std::string& where, const FrameId& frame) {
  namespace jf = json_field;
  if (!arr.is_array()) jf::fail(where, "expected an array");
  FusedPath p;
  p.frame = frame;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const Json& j = arr[i];
    jf::require_object(j, w);
    Waypoint wp;
    wp.s = jf::number(jf::at(j, w, "s_mm"), w + ".s_mm");
    wp.position = jf::vec3(jf::at(j, w, "position_mm"), w + ".position_mm");
    wp.speed = jf::number(jf::at(j, w, "speed_mm_s"), w + ".speed_mm_s");
    const Json& rows = jf::at(j, w, "rotation");
    if (!rows.is_array() || rows.size() != 3) jf::fail(w + ".rotation", "expected 3 rows");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) m.row(r) = jf::vec3(rows[static_cast<std::size_t>(r)], w + ".rotation");
    wp.orientation = RotationMatrix::from_matrix(m);
    p.waypoints.push_back(wp);
  }
  return p;
}

inline ViolationKind violation_kind_from(const std::string& name, const std::string& where) {
  for (ViolationKind k : {ViolationKind::kUnreachable, ViolationKind::kJointLimit,
                          ViolationKind::kJointSpeed, ViolationKind::kCartesianSpeed,
                          ViolationKind::kOrientationRate, ViolationKind::kWaypointGap,
                          ViolationKind::kContinuity}) {
    if (to_string(k) == name) return k;
  }
  json_field::fail(where, "unknown violation kind '" + name + "'");
}

}  // namespace detail

/// Loads path, edits, flags and the stored violations. Per-waypoint checks
/// are not restored; callers re-validate against the current arm model.
inline SessionState parse_session(std::string_view text, std::string_view source = "session") {
  namespace jf = json_field;
  const std::string root(source);
  const Json doc = parse_json_text(text, root);
  jf::require_object(doc, root);
  jf::version(doc, root);
  if (doc.value("format", "") != "skillpath-session") jf::fail(root + ".format", "not a session file");
  SessionState s;
  s.created = jf::string(jf::at(doc, root, "created"), root + ".created");
  s.source_digest = jf::string(jf::at(doc, root, "source_digest"), root + ".source_digest");
  const Json& rev = jf::at(doc, root, "revision");
  if (!rev.is_number_unsigned()) jf::fail(root + ".revision", "expected a non-negative integer");
  s.revision = rev.get<std::uint64_t>();
  s.approved = jf::boolean(jf::at(doc, root, "approved"), root + ".approved");
  const FrameId frame = jf::string(jf::at(doc, root, "frame"), root + ".frame");
  s.path = detail::parse_waypoints(jf::at(doc, root, "waypoints"), root + ".waypoints", frame);
  s.original =
      detail::parse_waypoints(jf::at(doc, root, "original_waypoints"), root + ".original_waypoints", frame);
  if (s.original.waypoints.size() != s.path.waypoints.size()) {
    jf::fail(root, "waypoints and original_waypoints differ in length");
  }
  for (const Json& e : jf::at(doc, root, "edits")) {
    EditRecord r;
    r.index = e.at("index").get<std::size_t>();
    r.kind = e.at("kind").get<std::string>();
    if (e.contains("orientation_fixed_xyz_deg")) {
      r.orientation_fixed_xyz_deg = jf::vec3(e["orientation_fixed_xyz_deg"], root + ".edits");
    }
    if (e.contains("speed_mm_s")) r.speed_mm_s = e["speed_mm_s"].get<double>();
    r.author = e.value("author", "");
    r.timestamp = e.value("timestamp", "");
    s.edits.push_back(std::move(r));
  }
  const Json& report = jf::at(doc, root, "report");
  jf::require_object(report, root + ".report");
  for (const Json& v : jf::at(report, root + ".report", "violations")) {
    const std::string w = root + ".report.violations";
    s.report.violations.push_back(
        Violation{v.at("index").get<std::size_t>(),
                  detail::violation_kind_from(v.at("kind").get<std::string>(), w),
                  v.value("message", "")});
  }
  return s;
}

inline SessionState load_session_file(const std::filesystem::path& path) {
  return parse_session(read_file(path), path.string());
}

/// Digest of the session's current waypoints, recorded in program headers.
inline std::string path_digest(const FusedPath& p) {
  return fnv1a_hex(path_json(p).dump());
}

}  // namespace skillpath

#endif  // SKILLPATH_SESSION_HPP_
