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

// 6R serial arm: forward kinematics over standard DH links, closed-form
// inverse kinematics for spherical-wrist arms, and path validation.
//
// Link i: Rz(q_i + offset_i) * Tz(d_i) * Tx(a_i) * Rx(alpha_i).
//
// The analytic solver covers the common industrial layout: alpha_1, alpha_3,
// alpha_4, alpha_5 = +-90 deg, alpha_2 = 0, a_4 = a_5 = a_6 = 0 and d_5 = 0, so
// joints 4-6 intersect at the wrist centre. Shoulder and elbow offsets (a_1,
// a_3, d_2, d_3) are allowed.

#ifndef SKILLPATH_KINEMATICS_HPP_
#define SKILLPATH_KINEMATICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "skillpath/error.hpp"
#include "skillpath/frames.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/json_util.hpp"
#include "skillpath/pathfusion.hpp"

namespace skillpath {

inline constexpr int kJoints = 6;
using JointVector = std::array<double, kJoints>;

struct DhRow {
  double a = 0.0;      // mm
  double alpha = 0.0;  // rad
  double d = 0.0;      // mm
  double theta_offset = 0.0;  // rad
};

struct JointLimit {
  double min = -kPi;
  double max = kPi;
};

struct ArmModel {
  std::string name;
  std::string note;
  std::array<DhRow, kJoints> dh{};
  std::array<JointLimit, kJoints> limits{};
  JointVector max_joint_speed{};  // rad/s
  RigidTransform tool;            // flange -> TCP

  bool within_limits(const JointVector& q, double slack = 0.0) const {
    for (int j = 0; j < kJoints; ++j) {
      if (q[j] < limits[j].min - slack || q[j] > limits[j].max + slack) return false;
    }
    return true;
  }

  /// Distance to the nearest limit per joint; negative when outside.
  JointVector limit_margins(const JointVector& q) const {
    JointVector m{};
    for (int j = 0; j < kJoints; ++j) {
      m[j] = std::min(q[j] - limits[j].min, limits[j].max - q[j]);
    }
    return m;
  }
};

inline RigidTransform dh_link(const DhRow& row, double q) {
  const double th = q + row.theta_offset;
  RigidTransform t;
  t.rotation = RotationMatrix::trusted(axis_rotation_z(th) * axis_rotation_x(row.alpha));
  t.translation = Vec3(row.a * std::cos(th), row.a * std::sin(th), row.d);
  return t;
}

inline RigidTransform fk_flange(const ArmModel& m, const JointVector& q) {
  RigidTransform t = RigidTransform::identity();
  for (int j = 0; j < kJoints; ++j) t = compose(t, dh_link(m.dh[j], q[j]));
  return t;
}

inline RigidTransform fk(const ArmModel& m, const JointVector& q) {
  return compose(fk_flange(m, q), m.tool);
}

namespace detail {
inline constexpr double kGeomTol = 1e-9;
inline bool near_zero(double v) { return std::abs(v) < kGeomTol; }
inline bool quarter_turn(double alpha) { return std::abs(std::cos(alpha)) < 1e-9; }
}  // namespace detail

/// Empty string when the model fits the closed-form solver, otherwise the
/// reason it does not.
inline std::string analytic_ik_defect(const ArmModel& m) {
  const auto& dh = m.dh;
  if (!detail::near_zero(dh[3].a) || !detail::near_zero(dh[4].a) ||
      !detail::near_zero(dh[5].a) || !detail::near_zero(dh[4].d)) {
    return "wrist axes do not intersect (need a4 = a5 = a6 = 0 and d5 = 0)";
  }
  if (!detail::quarter_turn(dh[3].alpha) || !detail::quarter_turn(dh[4].alpha)) {
    return "wrist twists alpha4, alpha5 must be +-90 deg";
  }
  if (!detail::quarter_turn(dh[0].alpha) || !detail::near_zero(std::sin(dh[1].alpha)) ||
      std::cos(dh[1].alpha) < 0.0 || !detail::quarter_turn(dh[2].alpha)) {
    return "arm twists must be alpha1 = +-90, alpha2 = 0, alpha3 = +-90 deg";
  }
  if (detail::near_zero(dh[1].a) || detail::near_zero(std::hypot(dh[2].a, dh[3].d))) {
    return "upper arm (a2) and forearm (a3, d4) must have nonzero length";
  }
  return {};
}

struct IkSolution {
  JointVector q{};
  bool within_limits = false;
};

struct IkHint {
  double q4 = 0.0;  // used at wrist singularity
};

/// All closed-form solutions (shoulder x elbow x wrist, up to 8). Each is
/// verified against fk; out-of-limit solutions are flagged, not dropped. An
/// unreachable target yields an empty list.
inline std::vector<IkSolution> ik(const ArmModel& m, const RigidTransform& target,
                                  const IkHint& hint = {}) {
  if (const std::string why = analytic_ik_defect(m); !why.empty()) {
    throw Error(ErrorKind::kUnsupportedModel, why);
  }
  const auto& dh = m.dh;
  const RigidTransform flange = compose(target, invert(m.tool));
  const Vec3 wrist = flange.translation -
                     dh[5].d * (flange.rotation *
                                Vec3(0.0, std::sin(dh[5].alpha), std::cos(dh[5].alpha)));

  const double s1 = std::sin(dh[0].alpha);
  const double s3 = std::sin(dh[2].alpha);
  const double s4 = std::sin(dh[3].alpha);
  const double s5 = std::sin(dh[4].alpha);
  const double lateral = -(dh[1].d + dh[2].d) * s1;
  const double a2 = dh[1].a;
  const double fa = dh[2].a, fb = -dh[3].d * s3;
  const double l3 = std::hypot(fa, fb);
  const double gamma = std::atan2(fb, fa);

  std::vector<IkSolution> out;
  const double r2 = wrist.x() * wrist.x() + wrist.y() * wrist.y();
  const double rho2 = r2 - lateral * lateral;
  if (rho2 < -1e-9) return out;
  const double rho_abs = std::sqrt(std::max(0.0, rho2));
  const bool shoulder_singular = std::sqrt(r2) < 1e-9;

  for (int shoulder : {1, -1}) {
    const double rho = shoulder * rho_abs;
    double th1;
    if (shoulder_singular) {
      th1 = dh[0].theta_offset;  // q1 is free on the shoulder axis
    } else {
      th1 = std::atan2(wrist.y(), wrist.x()) - std::atan2(lateral, rho);
    }
    const double px = rho - dh[0].a;
    const double py = (wrist.z() - dh[0].d) * s1;
    const double c = (px * px + py * py - a2 * a2 - l3 * l3) / (2.0 * a2 * l3);
    if (c > 1.0 + 1e-9 || c < -1.0 - 1e-9) continue;
    const double elbow_abs = std::acos(std::clamp(c, -1.0, 1.0));
    for (int elbow : {1, -1}) {
      const double e = elbow * elbow_abs;
      const double th2 = std::atan2(py, px) - std::atan2(l3 * std::sin(e), a2 + l3 * std::cos(e));
      const double th3 = e - gamma;

      JointVector q{};
      q[0] = th1 - dh[0].theta_offset;
      q[1] = th2 - dh[1].theta_offset;
      q[2] = th3 - dh[2].theta_offset;
      RigidTransform t03 = RigidTransform::identity();
      for (int j = 0; j < 3; ++j) t03 = compose(t03, dh_link(dh[j], q[j]));
      const Eigen::Matrix3d wrist_rot = t03.rotation.matrix().transpose() *
                                        flange.rotation.matrix() *
                                        axis_rotation_x(dh[5].alpha).transpose();
      const double sin5 = std::hypot(wrist_rot(0, 2), wrist_rot(1, 2));
      const double cos5 = -s4 * s5 * wrist_rot(2, 2);
      const bool singular = sin5 < 1e-8;
      for (int flip : {1, -1}) {
        double th4, th5;
        if (singular) {
          if (flip == -1) break;
          th4 = hint.q4 + dh[3].theta_offset;
          th5 = std::atan2(0.0, cos5);
        } else {
          th5 = std::atan2(flip * sin5, cos5);
          th4 = std::atan2(flip * s5 * wrist_rot(1, 2), flip * s5 * wrist_rot(0, 2));
        }
        const Eigen::Matrix3d pre = axis_rotation_z(th4) * axis_rotation_x(dh[3].alpha) *
                                    axis_rotation_z(th5) * axis_rotation_x(dh[4].alpha);
        const Eigen::Matrix3d r6 = pre.transpose() * wrist_rot;
        const double th6 = std::atan2(r6(1, 0), r6(0, 0));

        IkSolution sol;
        sol.q = q;
        sol.q[3] = th4 - dh[3].theta_offset;
        sol.q[4] = th5 - dh[4].theta_offset;
        sol.q[5] = th6 - dh[5].theta_offset;
        for (double& v : sol.q) v = wrap_angle(v);
        const RigidTransform check = fk(m, sol.q);
        if ((check.translation - target.translation).norm() > 1e-6 ||
            geodesic_angle(check.rotation, target.rotation) > 1e-6) {
          continue;
        }
        bool duplicate = false;
        for (const IkSolution& o : out) {
          double d = 0.0;
          for (int j = 0; j < kJoints; ++j) d = std::max(d, std::abs(wrap_angle(o.q[j] - sol.q[j])));
          duplicate = duplicate || d < 1e-9;
        }
        if (duplicate) continue;
        sol.within_limits = m.within_limits(sol.q);
        out.push_back(sol);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model documents

/// {"version":1, "name":..., "note":..., "dh":[{"a_mm","alpha_deg","d_mm",
///  "theta_offset_deg"} x6], "joint_limits_deg":[[min,max] x6],
///  "max_joint_speed_deg_s":[x6], "tool":{"xyz_mm":[..],"fixed_xyz_deg":[..]}}
inline ArmModel parse_arm_model(std::string_view text, std::string_view source = "arm model") {
  namespace jf = json_field;
  const Json doc = parse_json_text(text, source);
  const std::string root(source);
  jf::require_object(doc, root);
  jf::reject_unknown(doc, root, {"version", "name", "note", "dh", "joint_limits_deg",
                                 "max_joint_speed_deg_s", "tool"});
  jf::version(doc, root);
  ArmModel m;
  m.name = doc.contains("name") ? jf::string(doc["name"], root + ".name") : "arm";
  if (doc.contains("note")) m.note = jf::string(doc["note"], root + ".note");

  auto six = [&](const char* key) -> const Json& {
    const Json& arr = jf::at(doc, root, key);
    if (!arr.is_array() || arr.size() != kJoints) {
      jf::fail(root + "." + key, "expected 6 entries");
    }
    return arr;
  };
  const Json& dh = six("dh");
  const Json& lim = six("joint_limits_deg");
  const Json& spd = six("max_joint_speed_deg_s");
  for (std::size_t j = 0; j < kJoints; ++j) {
    const std::string w = root + ".dh[" + std::to_string(j) + "]";
    jf::require_object(dh[j], w);
    jf::reject_unknown(dh[j], w, {"a_mm", "alpha_deg", "d_mm", "theta_offset_deg"});
    m.dh[j].a = jf::number(dh[j], w, "a_mm", 0.0);
    m.dh[j].alpha = deg_to_rad(jf::number(dh[j], w, "alpha_deg", 0.0));
    m.dh[j].d = jf::number(dh[j], w, "d_mm", 0.0);
    m.dh[j].theta_offset = deg_to_rad(jf::number(dh[j], w, "theta_offset_deg", 0.0));

    const std::string lw = root + ".joint_limits_deg[" + std::to_string(j) + "]";
    if (!lim[j].is_array() || lim[j].size() != 2) jf::fail(lw, "expected [min, max]");
    m.limits[j].min = deg_to_rad(jf::number(lim[j][0], lw + "[0]"));
    m.limits[j].max = deg_to_rad(jf::number(lim[j][1], lw + "[1]"));
    if (!(m.limits[j].min < m.limits[j].max)) jf::fail(lw, "min must be < max");

    const std::string sw = root + ".max_joint_speed_deg_s[" + std::to_string(j) + "]";
    m.max_joint_speed[j] = deg_to_rad(jf::number(spd[j], sw));
    if (!(m.max_joint_speed[j] > 0.0)) jf::fail(sw, "must be positive");
  }
  if (doc.contains("tool")) {
    const Json& t = doc["tool"];
    const std::string w = root + ".tool";
    jf::require_object(t, w);
    jf::reject_unknown(t, w, {"xyz_mm", "fixed_xyz_deg"});
    if (t.contains("xyz_mm")) m.tool.translation = jf::vec3(t["xyz_mm"], w + ".xyz_mm");
    if (t.contains("fixed_xyz_deg")) {
      const Vec3 a = jf::vec3(t["fixed_xyz_deg"], w + ".fixed_xyz_deg");
      m.tool.rotation =
          fixed_xyz_to_matrix({deg_to_rad(a[0]), deg_to_rad(a[1]), deg_to_rad(a[2])});
    }
  }
  return m;
}

inline ArmModel load_arm_model_file(const std::filesystem::path& path) {
  return parse_arm_model(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationPolicy {
  double max_cartesian_speed_mm_s = 1000.0;
  double max_orientation_rate_deg_s = 180.0;
  double max_waypoint_gap_mm = 500.0;
  /// Euclidean joint-space distance allowed between consecutive waypoints.
  double continuity_bound_rad = 1.5;
  /// Below this margin a waypoint is flagged as a warning, not a violation.
  double limit_margin_warning_deg = 5.0;
};

enum class ViolationKind {
  kUnreachable,
  kJointLimit,
  kJointSpeed,
  kCartesianSpeed,
  kOrientationRate,
  kWaypointGap,
  kContinuity,
};

inline std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kUnreachable: return "unreachable";
    case ViolationKind::kJointLimit: return "joint-limit";
    case ViolationKind::kJointSpeed: return "joint-speed";
    case ViolationKind::kCartesianSpeed: return "cartesian-speed";
    case ViolationKind::kOrientationRate: return "orientation-rate";
    case ViolationKind::kWaypointGap: return "waypoint-gap";
    case ViolationKind::kContinuity: return "continuity";
  }
  return "unknown";
}

struct Violation {
  std::size_t index = 0;
  ViolationKind kind = ViolationKind::kUnreachable;
  std::string message;
};

struct WaypointCheck {
  bool reachable = false;
  std::size_t solution_count = 0;
  std::optional<JointVector> joints;  // chosen branch
  JointVector limit_margins{};
  JointVector joint_speeds{};  // rad/s over the move into this waypoint
  bool margin_warning = false;
};

struct ValidationReport {
  std::vector<WaypointCheck> waypoints;
  std::vector<Violation> violations;

  bool pass() const { return violations.empty(); }
  bool has_violation_at(std::size_t index) const {
    for (const Violation& v : violations) {
      if (v.index == index) return true;
    }
    return false;
  }
};

inline double joint_distance(const JointVector& a, const JointVector& b) {
  double s = 0.0;
  for (int j = 0; j < kJoints; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

namespace detail {

// Shifts joints by multiples of 2 pi toward `ref` while staying in limits.
inline JointVector unwrap_toward(JointVector q, const JointVector& ref, const ArmModel& m) {
  for (int j = 0; j < kJoints; ++j) {
    double best = q[j];
    for (int k = -2; k <= 2; ++k) {
      const double c = q[j] + 2.0 * kPi * k;
      const bool c_in = c >= m.limits[j].min && c <= m.limits[j].max;
      const bool b_in = best >= m.limits[j].min && best <= m.limits[j].max;
      if ((c_in && !b_in) || (c_in == b_in && std::abs(c - ref[j]) < std::abs(best - ref[j]))) {
        best = c;
      }
    }
    q[j] = best;
  }
  return q;
}

inline double min_margin(const ArmModel& m, const JointVector& q) {
  const JointVector mg = m.limit_margins(q);
  return *std::min_element(mg.begin(), mg.end());
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace detail

/// Validates waypoints [start, n) reusing the checks of `prior` for earlier
/// waypoints. start = 0 validates from scratch.
inline ValidationReport validate_from(const ArmModel& m, const FusedPath& path,
                                      const ValidationPolicy& policy,
                                      const ValidationReport& prior, std::size_t start) {
  if (path.frame != frame::kRobot) {
    throw Error(ErrorKind::kContract, "validation needs a path in the robot frame, got '" +
                                          path.frame + "'");
  }
  const std::size_t n = path.waypoints.size();
  start = std::min(start, std::min(prior.waypoints.size(), n));
  ValidationReport rep;
  rep.waypoints.assign(prior.waypoints.begin(), prior.waypoints.begin() + static_cast<long>(start));
  for (const Violation& v : prior.violations) {
    if (v.index < start) rep.violations.push_back(v);
  }
  auto violate = [&](std::size_t i, ViolationKind k, const std::string& msg) {
    rep.violations.push_back(Violation{i, k, msg});
  };
  const double warn = deg_to_rad(policy.limit_margin_warning_deg);

  for (std::size_t i = start; i < n; ++i) {
    const Waypoint& w = path.waypoints[i];
    const WaypointCheck* prev = i > 0 ? &rep.waypoints[i - 1] : nullptr;
    const std::optional<JointVector> prev_q = prev ? prev->joints : std::nullopt;

    WaypointCheck chk;
    IkHint hint;
    if (prev_q) hint.q4 = (*prev_q)[3];
    const std::vector<IkSolution> sols = ik(m, RigidTransform{w.orientation, w.position}, hint);
    chk.solution_count = sols.size();
    chk.reachable = !sols.empty();
    if (!chk.reachable) {
      violate(i, ViolationKind::kUnreachable, "waypoint " + std::to_string(i) + " is out of reach");
      rep.waypoints.push_back(chk);
      continue;
    }
    std::optional<JointVector> chosen;
    double best = 0.0;
    bool chosen_in = false;
    for (const IkSolution& s : sols) {
      const JointVector q = prev_q ? detail::unwrap_toward(s.q, *prev_q, m) : s.q;
      const bool in = m.within_limits(q);
      // Prefer in-limit branches; then continuity, or margin when there is no
      // previous selection.
      const double score = prev_q ? -joint_distance(q, *prev_q) : detail::min_margin(m, q);
      if (!chosen || (in && !chosen_in) || (in == chosen_in && score > best)) {
        chosen = q;
        best = score;
        chosen_in = in;
      }
    }
    chk.joints = chosen;
    chk.limit_margins = m.limit_margins(*chosen);
    const double margin = detail::min_margin(m, *chosen);
    chk.margin_warning = margin >= 0.0 && margin < warn;
    if (!chosen_in) {
      violate(i, ViolationKind::kJointLimit,
              "waypoint " + std::to_string(i) + " has no solution within joint limits");
    }

    if (!(w.speed > 0.0) || w.speed > policy.max_cartesian_speed_mm_s) {
      violate(i, ViolationKind::kCartesianSpeed,
              "speed " + detail::fmt(w.speed) + " mm/s outside (0, " +
                  detail::fmt(policy.max_cartesian_speed_mm_s) + "]");
    }
    if (i > 0) {
      const Waypoint& pw = path.waypoints[i - 1];
      const double gap = (w.position - pw.position).norm();
      if (gap > policy.max_waypoint_gap_mm) {
        violate(i, ViolationKind::kWaypointGap,
                "gap " + detail::fmt(gap) + " mm exceeds " + detail::fmt(policy.max_waypoint_gap_mm));
      }
      double ds = std::abs(w.s - pw.s);
      if (!(ds > 0.0)) ds = gap;
      const double dt = w.speed > 0.0 ? ds / w.speed : 0.0;
      if (dt > 0.0) {
        const double rate = rad_to_deg(geodesic_angle(pw.orientation, w.orientation)) / dt;
        if (rate > policy.max_orientation_rate_deg_s) {
          violate(i, ViolationKind::kOrientationRate,
                  "orientation rate " + detail::fmt(rate) + " deg/s exceeds " +
                      detail::fmt(policy.max_orientation_rate_deg_s));
        }
      }
      if (prev_q) {
        const double jump = joint_distance(*chosen, *prev_q);
        if (jump > policy.continuity_bound_rad) {
          violate(i, ViolationKind::kContinuity,
                  "joint-space jump " + detail::fmt(jump) + " rad exceeds " +
                      detail::fmt(policy.continuity_bound_rad));
        }
        if (dt > 0.0) {
          for (int j = 0; j < kJoints; ++j) {
            chk.joint_speeds[j] = std::abs((*chosen)[j] - (*prev_q)[j]) / dt;
            if (chk.joint_speeds[j] > m.max_joint_speed[j]) {
              violate(i, ViolationKind::kJointSpeed,
                      "joint " + std::to_string(j + 1) + " speed " +
                          detail::fmt(rad_to_deg(chk.joint_speeds[j])) + " deg/s exceeds " +
                          detail::fmt(rad_to_deg(m.max_joint_speed[j])));
            }
          }
        }
      }
    }
    rep.waypoints.push_back(chk);
  }
  std::stable_sort(rep.violations.begin(), rep.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.index < b.index; });
  return rep;
}

inline ValidationReport validate(const ArmModel& m, const FusedPath& path,
                                 const ValidationPolicy& policy = {}) {
  return validate_from(m, path, policy, ValidationReport{}, 0);
}

}  // namespace skillpath

#endif  // SKILLPATH_KINEMATICS_HPP_
