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

// Project configuration: which files make up a job and the parameters of
// every pipeline stage. Relative paths resolve against the config file.

#ifndef SKILLPATH_CONFIG_HPP_
#define SKILLPATH_CONFIG_HPP_

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillpath/capture.hpp"
#include "skillpath/emit.hpp"
#include "skillpath/error.hpp"
#include "skillpath/json_util.hpp"
#include "skillpath/kinematics.hpp"
#include "skillpath/pathfusion.hpp"

namespace skillpath {

namespace fs = std::filesystem;

struct FusionParameters {
  SegmentOptions segmentation{5.0, 0.5, 0.25};
  bool segment = true;
  CorrespondOptions correspondence;
  FuseOptions fuse;
  double tol_pos_mm = 0.5;
  double tol_rot_deg = 1.0;
  RotationMatrix mounting;  // marker -> tool
};

struct EmitOptions {
  std::string name = "SKILLPATH";
  std::string tool_id = "tool0";
  InformOptions inform;
};

/// Synthetic demonstration recipe used by `synth`.
struct ScenarioConfig {
  std::optional<std::string> builtin_path;  // otherwise the project's path file
  SynthesisOptions synthesis;
  TrackerErrorModel error_model;
  fs::path out_truth;
};

struct ProjectConfig {
  fs::path source;  // the config file itself
  fs::path calibration;
  fs::path arm;
  fs::path nominal_path;
  std::vector<fs::path> traces;
  fs::path session;
  std::string created = "1970-01-01T00:00:00Z";
  FusionParameters fusion;
  ValidationPolicy validation;
  EmitOptions emit;
  std::optional<ScenarioConfig> scenario;
};

namespace detail {

inline void check_range(double v, double lo, double hi, const std::string& where) {
  if (!(v >= lo && v <= hi)) {
    throw Error(ErrorKind::kConfiguration, where + ": value " + std::to_string(v) +
                                               " outside [" + std::to_string(lo) + ", " +
                                               std::to_string(hi) + "]");
  }
}

inline Vec3 read_deg3(const Json& obj, const std::string& where, const std::string& key,
                      const Vec3& fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : json_field::vec3(*it, where + "." + key);
}

inline ScenarioConfig parse_scenario(const Json& j, const std::string& where,
                                     const fs::path& base) {
  namespace jf = json_field;
  jf::require_object(j, where);
  jf::reject_unknown(j, where,
                     {"builtin_path", "speed_mm_s", "speed_profile", "sample_rate_hz",
                      "receptor_mm", "error_model", "orientation_profile", "dwell_before_s",
                      "dwell_after_s", "out_truth"});
  ScenarioConfig sc;
  if (j.contains("builtin_path")) {
    sc.builtin_path = jf::string(j["builtin_path"], where + ".builtin_path");
  }
  auto& syn = sc.synthesis;
  if (j.contains("speed_profile")) {
    syn.speed.knots.clear();
    for (const Json& k : j["speed_profile"]) {
      if (!k.is_array() || k.size() != 2) jf::fail(where + ".speed_profile", "expected [fraction, speed] pairs");
      syn.speed.knots.emplace_back(jf::number(k[0], where + ".speed_profile"),
                                   jf::number(k[1], where + ".speed_profile"));
    }
    if (syn.speed.knots.empty()) jf::fail(where + ".speed_profile", "needs at least one knot");
  } else {
    syn.speed = SpeedProfile::constant(jf::number(j, where, "speed_mm_s", 100.0));
  }
  syn.sample_rate_hz = jf::number(j, where, "sample_rate_hz", 120.0);
  check_range(syn.sample_rate_hz, 1.0, 10000.0, where + ".sample_rate_hz");
  syn.receptor_mm = read_deg3(j, where, "receptor_mm", Vec3::Zero());
  syn.dwell_before_s = jf::number(j, where, "dwell_before_s", 0.0);
  syn.dwell_after_s = jf::number(j, where, "dwell_after_s", 0.0);
  if (j.contains("orientation_profile")) {
    const Json& o = j["orientation_profile"];
    const std::string w = where + ".orientation_profile";
    jf::require_object(o, w);
    jf::reject_unknown(o, w, {"base_deg", "amplitude_deg", "cycles", "phase_deg"});
    syn.orientation.base_deg = read_deg3(o, w, "base_deg", syn.orientation.base_deg);
    syn.orientation.amplitude_deg = read_deg3(o, w, "amplitude_deg", syn.orientation.amplitude_deg);
    syn.orientation.cycles = read_deg3(o, w, "cycles", syn.orientation.cycles);
    syn.orientation.phase_deg = read_deg3(o, w, "phase_deg", syn.orientation.phase_deg);
  }
  if (j.contains("error_model")) {
    const Json& e = j["error_model"];
    const std::string w = where + ".error_model";
    jf::require_object(e, w);
    jf::reject_unknown(e, w, {"z_drift_mm_at_max_range", "drift_growth", "orientation_noise_deg",
                              "xy_jitter_mm"});
    auto& m = sc.error_model;
    m.z_drift_mm_at_max_range = jf::number(e, w, "z_drift_mm_at_max_range", m.z_drift_mm_at_max_range);
    if (e.contains("drift_growth")) {
      const std::string g = jf::string(e["drift_growth"], w + ".drift_growth");
      if (g == "linear") {
        m.drift_growth = DriftGrowth::kLinear;
      } else if (g == "quadratic") {
        m.drift_growth = DriftGrowth::kQuadratic;
      } else {
        jf::fail(w + ".drift_growth", "expected 'linear' or 'quadratic'");
      }
    }
    if (e.contains("orientation_noise_deg")) {
      const Json& r = e["orientation_noise_deg"];
      if (!r.is_array() || r.size() != 2) jf::fail(w + ".orientation_noise_deg", "expected [min, max]");
      m.orientation_noise_min_deg = jf::number(r[0], w + ".orientation_noise_deg[0]");
      m.orientation_noise_max_deg = jf::number(r[1], w + ".orientation_noise_deg[1]");
    }
    m.xy_jitter_mm = jf::number(e, w, "xy_jitter_mm", m.xy_jitter_mm);
    m.check();
  }
  sc.out_truth = base / jf::string(j.value("out_truth", Json("ground_truth.json")), where + ".out_truth");
  return sc;
}

}  // namespace detail

/// Parses a project config. When check_files is set, every referenced input
/// must exist.
inline ProjectConfig parse_project_config(std::string_view text, const fs::path& source,
                                          bool check_files = true) {
  namespace jf = json_field;
  const std::string root = source.string();
  const Json doc = parse_json_text(text, root);
  jf::require_object(doc, root);
  jf::reject_unknown(doc, root,
                     {"version", "calibration", "arm", "nominal_path", "traces", "session",
                      "created", "segmentation", "correspondence", "fusion", "validation",
                      "emit", "scenario"});
  jf::version(doc, root);
  const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");
  ProjectConfig c;
  c.source = source;
  auto file = [&](const std::string& key) {
    return base / jf::string(jf::at(doc, root, key), root + "." + key);
  };
  c.calibration = file("calibration");
  c.arm = file("arm");
  c.nominal_path = file("nominal_path");
  const Json& traces = jf::at(doc, root, "traces");
  if (!traces.is_array() || traces.empty()) jf::fail(root + ".traces", "expected a non-empty array");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    c.traces.push_back(base / jf::string(traces[i], root + ".traces[" + std::to_string(i) + "]"));
  }
  c.session = base / jf::string(doc.value("session", Json("session.json")), root + ".session");
  if (doc.contains("created")) {
    c.created = jf::string(doc["created"], root + ".created");
  } else if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    const std::time_t t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    c.created = buf;
  }

  FusionParameters& f = c.fusion;
  if (doc.contains("segmentation")) {
    const Json& s = doc["segmentation"];
    const std::string w = root + ".segmentation";
    jf::require_object(s, w);
    jf::reject_unknown(s, w, {"enabled", "speed_floor_mm_s", "dwell_s", "window_s"});
    if (s.contains("enabled")) f.segment = jf::boolean(s["enabled"], w + ".enabled");
    f.segmentation.speed_floor_mm_s = jf::number(s, w, "speed_floor_mm_s", f.segmentation.speed_floor_mm_s);
    f.segmentation.dwell_s = jf::number(s, w, "dwell_s", f.segmentation.dwell_s);
    f.segmentation.window_s = jf::number(s, w, "window_s", f.segmentation.window_s);
    detail::check_range(f.segmentation.speed_floor_mm_s, 0.0, 1e4, w + ".speed_floor_mm_s");
    detail::check_range(f.segmentation.dwell_s, 0.0, 3600.0, w + ".dwell_s");
    detail::check_range(f.segmentation.window_s, 0.0, 10.0, w + ".window_s");
  }
  if (doc.contains("correspondence")) {
    const Json& s = doc["correspondence"];
    const std::string w = root + ".correspondence";
    jf::require_object(s, w);
    jf::reject_unknown(s, w, {"weights", "grid_step_mm", "refine"});
    if (s.contains("weights")) f.correspondence.weights = jf::vec3(s["weights"], w + ".weights");
    f.correspondence.grid_step_mm = jf::number(s, w, "grid_step_mm", f.correspondence.grid_step_mm);
    if (s.contains("refine")) f.correspondence.refine = jf::boolean(s["refine"], w + ".refine");
    detail::check_range(f.correspondence.grid_step_mm, 0.01, 1000.0, w + ".grid_step_mm");
    if (!(f.correspondence.weights.minCoeff() >= 0.0) || !(f.correspondence.weights.maxCoeff() > 0.0)) {
      jf::fail(w + ".weights", "weights must be >= 0 and not all zero", ErrorKind::kConfiguration);
    }
  } else {
    // The DP grid follows the output resolution unless configured.
    f.correspondence.grid_step_mm = f.fuse.spacing_mm;
  }
  if (doc.contains("fusion")) {
    const Json& s = doc["fusion"];
    const std::string w = root + ".fusion";
    jf::require_object(s, w);
    jf::reject_unknown(s, w, {"spacing_mm", "snap_vertices", "speed_window_s", "orientation_window_s",
                              "v_min_mm_s", "v_max_mm_s", "tol_pos_mm", "tol_rot_deg",
                              "mounting_fixed_xyz_deg"});
    f.fuse.spacing_mm = jf::number(s, w, "spacing_mm", f.fuse.spacing_mm);
    if (s.contains("snap_vertices")) f.fuse.snap_vertices = jf::boolean(s["snap_vertices"], w + ".snap_vertices");
    f.fuse.speed_window_s = jf::number(s, w, "speed_window_s", f.fuse.speed_window_s);
    f.fuse.orientation_window_s = jf::number(s, w, "orientation_window_s", f.fuse.orientation_window_s);
    f.fuse.v_min_mm_s = jf::number(s, w, "v_min_mm_s", f.fuse.v_min_mm_s);
    f.fuse.v_max_mm_s = jf::number(s, w, "v_max_mm_s", f.fuse.v_max_mm_s);
    f.tol_pos_mm = jf::number(s, w, "tol_pos_mm", f.tol_pos_mm);
    f.tol_rot_deg = jf::number(s, w, "tol_rot_deg", f.tol_rot_deg);
    const Vec3 mount = detail::read_deg3(s, w, "mounting_fixed_xyz_deg", Vec3::Zero());
    f.mounting = fixed_xyz_to_matrix({deg_to_rad(mount[0]), deg_to_rad(mount[1]), deg_to_rad(mount[2])});
    detail::check_range(f.fuse.spacing_mm, 0.01, 1000.0, w + ".spacing_mm");
    detail::check_range(f.fuse.speed_window_s, 0.0, 10.0, w + ".speed_window_s");
    detail::check_range(f.fuse.orientation_window_s, 0.0, 10.0, w + ".orientation_window_s");
    detail::check_range(f.fuse.v_min_mm_s, 1e-3, 1e4, w + ".v_min_mm_s");
    detail::check_range(f.fuse.v_max_mm_s, f.fuse.v_min_mm_s, 1e4, w + ".v_max_mm_s");
    detail::check_range(f.tol_pos_mm, 1e-6, 1000.0, w + ".tol_pos_mm");
    detail::check_range(f.tol_rot_deg, 1e-6, 180.0, w + ".tol_rot_deg");
    if (!doc.contains("correspondence")) f.correspondence.grid_step_mm = f.fuse.spacing_mm;
  }
  if (doc.contains("validation")) {
    const Json& s = doc["validation"];
    const std::string w = root + ".validation";
    jf::require_object(s, w);
    jf::reject_unknown(s, w, {"max_cartesian_speed_mm_s", "max_orientation_rate_deg_s",
                              "max_waypoint_gap_mm", "continuity_bound_rad",
                              "limit_margin_warning_deg"});
    ValidationPolicy& v = c.validation;
    v.max_cartesian_speed_mm_s = jf::number(s, w, "max_cartesian_speed_mm_s", v.max_cartesian_speed_mm_s);
    v.max_orientation_rate_deg_s = jf::number(s, w, "max_orientation_rate_deg_s", v.max_orientation_rate_deg_s);
    v.max_waypoint_gap_mm = jf::number(s, w, "max_waypoint_gap_mm", v.max_waypoint_gap_mm);
    v.continuity_bound_rad = jf::number(s, w, "continuity_bound_rad", v.continuity_bound_rad);
    v.limit_margin_warning_deg = jf::number(s, w, "limit_margin_warning_deg", v.limit_margin_warning_deg);
    detail::check_range(v.max_cartesian_speed_mm_s, 1e-3, 1e5, w + ".max_cartesian_speed_mm_s");
    detail::check_range(v.max_orientation_rate_deg_s, 1e-3, 1e5, w + ".max_orientation_rate_deg_s");
    detail::check_range(v.max_waypoint_gap_mm, 1e-3, 1e5, w + ".max_waypoint_gap_mm");
    detail::check_range(v.continuity_bound_rad, 1e-6, 100.0, w + ".continuity_bound_rad");
    detail::check_range(v.limit_margin_warning_deg, 0.0, 180.0, w + ".limit_margin_warning_deg");
  }
  if (doc.contains("emit")) {
    const Json& s = doc["emit"];
    const std::string w = root + ".emit";
    jf::require_object(s, w);
    jf::reject_unknown(s, w, {"name", "tool_id", "inform"});
    if (s.contains("name")) c.emit.name = jf::string(s["name"], w + ".name");
    if (s.contains("tool_id")) c.emit.tool_id = jf::string(s["tool_id"], w + ".tool_id");
    if (s.contains("inform")) {
      const Json& i = s["inform"];
      const std::string iw = w + ".inform";
      jf::require_object(i, iw);
      jf::reject_unknown(i, iw, {"tool", "max_positions", "max_speed_field"});
      c.emit.inform.tool = static_cast<int>(jf::number(i, iw, "tool", c.emit.inform.tool));
      c.emit.inform.max_positions = static_cast<std::size_t>(
          jf::number(i, iw, "max_positions", static_cast<double>(c.emit.inform.max_positions)));
      c.emit.inform.max_speed_field = static_cast<long>(
          jf::number(i, iw, "max_speed_field", static_cast<double>(c.emit.inform.max_speed_field)));
    }
  }
  if (doc.contains("scenario")) {
    c.scenario = detail::parse_scenario(doc["scenario"], root + ".scenario", base);
  }
  if (check_files) {
    for (const fs::path& p : {c.calibration, c.arm, c.nominal_path}) {
      if (!fs::exists(p)) throw Error(ErrorKind::kIo, "file not found: " + p.string());
    }
    for (const fs::path& p : c.traces) {
      if (!fs::exists(p)) throw Error(ErrorKind::kIo, "file not found: " + p.string());
    }
  }
  return c;
}

inline ProjectConfig load_project_config(const fs::path& path, bool check_files = true) {
  return parse_project_config(read_file(path), path, check_files);
}

}  // namespace skillpath

#endif  // SKILLPATH_CONFIG_HPP_
