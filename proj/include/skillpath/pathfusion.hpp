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

// Fusion of CAD/CAM positions with demonstrated orientations and speeds.
//
// Positions always come from the nominal path; the tracker's positions are
// only used to find where along the path each sample was taken. That
// correspondence is a monotone assignment of samples to arc length found by
// dynamic programming over a discretized arc-length grid.

#ifndef SKILLPATH_PATHFUSION_HPP_
#define SKILLPATH_PATHFUSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "skillpath/capture.hpp"
#include "skillpath/error.hpp"
#include "skillpath/frames.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/path.hpp"

namespace skillpath {

struct Waypoint {
  Vec3 position = Vec3::Zero();  // mm
  RotationMatrix orientation;
  double speed = 0.0;  // mm/s
  double s = 0.0;      // arc length along the nominal path, mm
};

struct FusedPath {
  std::vector<Waypoint> waypoints;
  FrameId frame = frame::kFloor;
};

// ---------------------------------------------------------------------------
// Correspondence

struct CorrespondOptions {
  Vec3 weights = Vec3(1.0, 1.0, 0.1);  // x, y, z
  double grid_step_mm = 5.0;
  /// Refine each grid assignment by a local weighted projection onto the
  /// path, then restore monotonicity.
  bool refine = true;
};

struct Correspondence {
  std::vector<double> s;  // one per sample, nondecreasing
  double cost = 0.0;      // weighted squared distance at the returned s
};

inline double weighted_sq_distance(const Vec3& a, const Vec3& b, const Vec3& w) {
  const Vec3 d = a - b;
  return w.x() * d.x() * d.x() + w.y() * d.y() * d.y() + w.z() * d.z() * d.z();
}

/// Monotone assignment of samples to grid points minimizing the summed
/// weighted squared distance. Ties resolve to the smallest grid index, chosen
/// backwards from the last sample.
inline std::vector<std::size_t> monotone_assignment(const std::vector<Vec3>& samples,
                                                    const std::vector<Vec3>& grid,
                                                    const Vec3& weights,
                                                    double* cost_out = nullptr) {
  const std::size_t n = samples.size();
  const std::size_t m = grid.size();
  if (n == 0 || m == 0) {
    throw Error(ErrorKind::kDegenerateInput, "empty samples or grid");
  }
  // best[j]: minimal cost of samples [0, i] with sample i at a grid index <= j.
  std::vector<double> best(m), row(m);
  std::vector<std::uint32_t> arg(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = weighted_sq_distance(samples[i], grid[j], weights) +
               (i == 0 ? 0.0 : best[j]);
    }
    double run = std::numeric_limits<double>::infinity();
    std::uint32_t run_arg = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] < run) {
        run = row[j];
        run_arg = static_cast<std::uint32_t>(j);
      }
      best[j] = run;
      arg[i * m + j] = run_arg;
    }
  }
  if (cost_out) *cost_out = best[m - 1];
  std::vector<std::size_t> out(n);
  std::size_t j = m - 1;
  for (std::size_t i = n; i-- > 0;) {
    j = arg[i * m + j];
    out[i] = j;
  }
  return out;
}

/// Arc-length grid with spacing at most `step`, ending exactly at L.
inline std::vector<double> arc_length_grid(const NominalPath& path, double step) {
  if (!(step > 0.0)) {
    throw Error(ErrorKind::kDegenerateSpacing, "grid step must be positive");
  }
  const double length = path.total_length();
  const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil(length / step)));
  std::vector<double> grid(cells + 1);
  for (std::size_t j = 0; j <= cells; ++j) {
    grid[j] = length * static_cast<double>(j) / static_cast<double>(cells);
  }
  grid.back() = length;
  return grid;
}

namespace detail {

// Minimizes the weighted distance from p to the path over arc lengths in
// [lo, hi]; returns the arc length.
inline double local_projection(const NominalPath& path, const Vec3& p, const Vec3& w,
                               double lo, double hi) {
  const auto& arc = path.arc_lengths();
  lo = std::max(lo, 0.0);
  hi = std::min(hi, path.total_length());
  double best_s = lo;
  double best_cost = weighted_sq_distance(p, path.evaluate(lo), w);
  for (std::size_t k = path.segment_at(lo); k < path.segment_count() && arc[k] <= hi; ++k) {
    const Vec3& a = path.segment_start(k);
    const Vec3 d = path.segment_end(k) - a;
    const double den = w.x() * d.x() * d.x() + w.y() * d.y() * d.y() + w.z() * d.z() * d.z();
    double u = 0.0;
    if (den > 0.0) {
      const Vec3 r = p - a;
      u = (w.x() * d.x() * r.x() + w.y() * d.y() * r.y() + w.z() * d.z() * r.z()) / den;
    }
    const double seg = arc[k + 1] - arc[k];
    const double s = std::clamp(arc[k] + std::clamp(u, 0.0, 1.0) * seg, lo, hi);
    const double c = weighted_sq_distance(p, path.evaluate(s), w);
    if (c < best_cost) {
      best_cost = c;
      best_s = s;
    }
  }
  return best_s;
}

}  // namespace detail

inline Correspondence correspond(const NominalPath& path, const DemonstrationTrace& trace,
                                 const CorrespondOptions& opt = {}) {
  if (trace.samples.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "empty trace");
  }
  const Vec3& w = opt.weights;
  if (!(w.minCoeff() >= 0.0) || !(w.maxCoeff() > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "weights must be >= 0 and not all zero");
  }
  const std::vector<double> grid_s = arc_length_grid(path, opt.grid_step_mm);
  std::vector<Vec3> grid;
  grid.reserve(grid_s.size());
  for (double s : grid_s) grid.push_back(path.evaluate(s));
  // Closed paths: the last grid point coincides with the first but stands
  // for the end of the lap.
  std::vector<Vec3> positions;
  positions.reserve(trace.size());
  for (const auto& smp : trace.samples) positions.push_back(smp.position);

  Correspondence out;
  const std::vector<std::size_t> idx = monotone_assignment(positions, grid, w, &out.cost);
  out.s.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out.s[i] = grid_s[idx[i]];
  if (opt.refine) {
    const double step = grid_s[1] - grid_s[0];
    double floor_s = 0.0;
    out.cost = 0.0;
    for (std::size_t i = 0; i < out.s.size(); ++i) {
      double s = detail::local_projection(path, positions[i], w, out.s[i] - step,
                                          out.s[i] + step);
      s = std::max(s, floor_s);
      floor_s = s;
      out.s[i] = s;
      out.cost += weighted_sq_distance(positions[i], path.evaluate(s), w);
    }
  }
  return out;
}

/// Re-anchors a path to a demonstration: closed contours start at the point
/// nearest the first sample, and either path is reversed when the
/// demonstration runs against the CAD point order.
inline NominalPath align_path_to_trace(const NominalPath& path,
                                       const DemonstrationTrace& trace,
                                       const CorrespondOptions& opt = {}) {
  if (trace.samples.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "empty trace");
  }
  NominalPath base = path;
  if (path.closed()) {
    const double s0 = detail::local_projection(path, trace.samples.front().position,
                                               opt.weights, 0.0, path.total_length());
    base = path.rotated(s0);
  }
  CorrespondOptions coarse = opt;
  coarse.refine = false;
  const double forward = correspond(base, trace, coarse).cost;
  NominalPath rev = base.reversed();
  const double backward = correspond(rev, trace, coarse).cost;
  return backward < forward ? rev : base;
}

// ---------------------------------------------------------------------------
// Fusion

struct FuseOptions {
  double spacing_mm = 5.0;
  bool snap_vertices = true;
  double speed_window_s = 0.2;
  double orientation_window_s = 0.2;
  double v_min_mm_s = 5.0;
  double v_max_mm_s = 500.0;
};

namespace detail {

inline Eigen::Quaterniond align_hemisphere(const Eigen::Quaterniond& q,
                                           const Eigen::Quaterniond& ref) {
  return q.dot(ref) < 0.0 ? Eigen::Quaterniond(-q.coeffs()) : q;
}

// Shortest-arc slerp. When a and b are exactly antipodal in rotation space
// (quaternion dot 0) the arc direction follows `hint`.
inline Eigen::Quaterniond slerp(const Eigen::Quaterniond& a, Eigen::Quaterniond b,
                                double u, const Eigen::Quaterniond& hint) {
  double d = a.dot(b);
  if (std::abs(d) < 1e-12) {
    const double plus = (a.coeffs() + b.coeffs()).dot(hint.coeffs());
    const double minus = (a.coeffs() - b.coeffs()).dot(hint.coeffs());
    if (std::abs(minus) > std::abs(plus)) b.coeffs() = -b.coeffs();
  } else if (d < 0.0) {
    b.coeffs() = -b.coeffs();
    d = -d;
  }
  d = std::clamp(d, -1.0, 1.0);
  const double theta = std::acos(d);
  Eigen::Quaterniond out;
  if (theta < 1e-9) {
    out.coeffs() = (1.0 - u) * a.coeffs() + u * b.coeffs();
  } else {
    const double st = std::sin(theta);
    out.coeffs() = (std::sin((1.0 - u) * theta) / st) * a.coeffs() +
                   (std::sin(u * theta) / st) * b.coeffs();
  }
  return out.normalized();
}

}  // namespace detail

/// Per-sample arc-length speed: centered differences of the correspondence,
/// then a centered moving average over `window_s`. Samples parked at the
/// first or last corresponded arc length (the tool resting before or after
/// the pass) take the speed of the nearest moving sample instead of zero.
inline std::vector<double> correspondence_speeds(const DemonstrationTrace& trace,
                                                 const Correspondence& corr,
                                                 double window_s) {
  const auto& smp = trace.samples;
  const std::size_t n = smp.size();
  std::size_t first = 0, last = n - 1;
  while (first + 1 < n && corr.s[first + 1] == corr.s.front()) ++first;
  while (last > 0 && corr.s[last - 1] == corr.s.back()) --last;
  if (last <= first) {
    first = 0;
    last = n - 1;
  }
  std::vector<double> raw(n, 0.0);
  for (std::size_t i = first; i <= last; ++i) {
    const std::size_t a = i == first ? first : i - 1;
    const std::size_t b = i == last ? last : i + 1;
    raw[i] = b > a ? (corr.s[b] - corr.s[a]) / (smp[b].t - smp[a].t) : 0.0;
  }
  std::vector<double> out = raw;
  if (window_s > 0.0) {
    std::size_t lo = first, hi = first;
    double sum = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
      while (hi <= last && smp[hi].t <= smp[i].t + 0.5 * window_s) sum += raw[hi++];
      while (smp[lo].t < smp[i].t - 0.5 * window_s) sum -= raw[lo++];
      out[i] = sum / static_cast<double>(hi - lo);
    }
  }
  for (std::size_t i = 0; i < first; ++i) out[i] = out[first];
  for (std::size_t i = last + 1; i < n; ++i) out[i] = out[last];
  return out;
}

/// Orientation at each sample from a local linear fit over the samples inside
/// a centered time window, clipped at the trace ends. The fit runs in the
/// tangent space at the window's chordal mean, so a clipped window still
/// averages its samples without pulling a steadily turning tool inward.
inline std::vector<Eigen::Quaterniond> smoothed_orientations(
    const DemonstrationTrace& trace, double window_s) {
  const auto rotations = orientations_as_matrices(trace);
  std::vector<Eigen::Quaterniond> q;
  q.reserve(rotations.size());
  for (const auto& r : rotations) {
    q.push_back(r.rotation.quaternion());
    if (q.size() > 1) q.back() = detail::align_hemisphere(q.back(), q[q.size() - 2]);
  }
  if (!(window_s > 0.0)) return q;
  const auto& smp = trace.samples;
  std::vector<Eigen::Quaterniond> out(q.size());
  std::size_t lo = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double ti = smp[i].t;
    while (smp[lo].t < ti - 0.5 * window_s) ++lo;
    std::size_t hi = i + 1;
    while (hi < q.size() && smp[hi].t <= ti + 0.5 * window_s) ++hi;

    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (std::size_t j = lo; j < hi; ++j) acc += detail::align_hemisphere(q[j], q[i]).coeffs();
    Eigen::Quaterniond m;
    m.coeffs() = acc.normalized();
    m = detail::align_hemisphere(m, q[i]);

    // Least squares r(tau) = a + b tau over tangent vectors r_j at m.
    double n = 0.0, st = 0.0, stt = 0.0;
    Vec3 sr = Vec3::Zero(), str = Vec3::Zero();
    for (std::size_t j = lo; j < hi; ++j) {
      const Eigen::AngleAxisd d(m.conjugate() * detail::align_hemisphere(q[j], m));
      const Vec3 r = d.angle() * d.axis();
      const double tau = smp[j].t - ti;
      n += 1.0;
      st += tau;
      stt += tau * tau;
      sr += r;
      str += tau * r;
    }
    const double det = n * stt - st * st;
    const Vec3 a = det > 1e-12 * n * stt ? Vec3((stt * sr - st * str) / det) : Vec3(sr / n);
    const double angle = a.norm();
    const Eigen::Quaterniond delta =
        angle > 0.0 ? Eigen::Quaterniond(Eigen::AngleAxisd(angle, a / angle)) : Eigen::Quaterniond::Identity();
    out[i] = detail::align_hemisphere(Eigen::Quaterniond(m * delta).normalized(), q[i]);
  }
  return out;
}

/// Waypoints at the resampled stations of `path`: position from the path,
/// orientation and speed interpolated between the two samples whose
/// corresponded arc lengths bracket the station.
inline FusedPath fuse(const NominalPath& path, const DemonstrationTrace& trace,
                      const Correspondence& corr, const FuseOptions& opt = {}) {
  if (corr.s.size() != trace.size()) {
    throw Error(ErrorKind::kContract, "correspondence length does not match trace");
  }
  if (trace.size() < 2) {
    throw Error(ErrorKind::kDegenerateInput, "trace needs at least 2 samples");
  }
  if (!(opt.v_min_mm_s > 0.0) || opt.v_max_mm_s < opt.v_min_mm_s) {
    throw Error(ErrorKind::kConfiguration, "speed clamps must satisfy 0 < v_min <= v_max");
  }
  const std::vector<double> speeds =
      correspondence_speeds(trace, corr, opt.speed_window_s);
  const std::vector<Eigen::Quaterniond> quats =
      smoothed_orientations(trace, opt.orientation_window_s);
  std::vector<double> stations = resample_stations(path, opt.spacing_mm, opt.snap_vertices);
  if (path.closed()) stations.push_back(path.total_length());

  FusedPath out;
  out.frame = path.frame();
  out.waypoints.reserve(stations.size());
  Eigen::Quaterniond prev = quats.front();
  for (double s : stations) {
    const auto it = std::upper_bound(corr.s.begin(), corr.s.end(), s);
    Eigen::Quaterniond q;
    double v;
    if (it == corr.s.begin()) {
      q = quats.front();
      v = speeds.front();
    } else if (it == corr.s.end()) {
      q = quats.back();
      v = speeds.back();
    } else {
      const auto i = static_cast<std::size_t>(it - corr.s.begin()) - 1;
      const double u = (s - corr.s[i]) / (corr.s[i + 1] - corr.s[i]);
      q = detail::slerp(quats[i], quats[i + 1], u, prev);
      v = speeds[i] + u * (speeds[i + 1] - speeds[i]);
    }
    q = detail::align_hemisphere(q, prev);
    // The closing station of a loop is the starting pose.
    if (path.closed() && !out.waypoints.empty() && s == path.total_length()) {
      q = out.waypoints.front().orientation.quaternion();
      q = detail::align_hemisphere(q, prev);
    }
    prev = q;
    Waypoint wp;
    wp.s = s;
    wp.position = path.evaluate(s);
    wp.orientation = RotationMatrix::from_quaternion(q);
    wp.speed = std::clamp(v, opt.v_min_mm_s, opt.v_max_mm_s);
    out.waypoints.push_back(wp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Downsampling

/// Errors of reconstructing waypoint k by interpolating between waypoints a
/// and b (linear position, geodesic orientation, both by arc length).
inline std::pair<double, double> reconstruction_error(const FusedPath& path, std::size_t a,
                                                      std::size_t b, std::size_t k) {
  const Waypoint& wa = path.waypoints[a];
  const Waypoint& wb = path.waypoints[b];
  const Waypoint& wk = path.waypoints[k];
  const double u = (wk.s - wa.s) / (wb.s - wa.s);
  const Vec3 p = wa.position + u * (wb.position - wa.position);
  const Eigen::Quaterniond qa = wa.orientation.quaternion();
  const Eigen::Quaterniond q = detail::slerp(qa, wb.orientation.quaternion(), u, qa);
  return {(p - wk.position).norm(),
          geodesic_angle(RotationMatrix::from_quaternion(q), wk.orientation)};
}

/// Recursive deviation split: keeps the endpoints and, inside any span whose
/// worst interior waypoint reaches either tolerance, keeps that waypoint and
/// recurses on both halves.
inline FusedPath downsample(const FusedPath& path, double tol_pos_mm, double tol_rot_deg) {
  if (!(tol_pos_mm > 0.0) || !(tol_rot_deg > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "tolerances must be positive");
  }
  const std::size_t n = path.waypoints.size();
  if (n <= 2) return path;
  const double tol_rot = deg_to_rad(tol_rot_deg);
  std::vector<bool> keep(n, false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t worst_k = a;
    for (std::size_t k = a + 1; k < b; ++k) {
      const auto [ep, er] = reconstruction_error(path, a, b, k);
      const double score = std::max(ep / tol_pos_mm, er / tol_rot);
      if (score > worst) {
        worst = score;
        worst_k = k;
      }
    }
    if (worst >= 1.0) {
      keep[worst_k] = true;
      stack.emplace_back(worst_k, b);
      stack.emplace_back(a, worst_k);
    }
  }
  FusedPath out;
  out.frame = path.frame;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.waypoints.push_back(path.waypoints[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame mapping

/// Maps waypoints into the robot frame. Positions go through resolve(R,
/// path frame); orientations are marker orientations in the sensor frame, so
/// they go through resolve(R, S) and then the marker-to-tool mounting
/// rotation. The mounting offset is ignored because positions already
/// describe the tool point.
inline FusedPath to_robot_frame(const FusedPath& path, const FrameGraph& g,
                                const RotationMatrix& mounting = RotationMatrix::identity(),
                                const FrameId& robot = frame::kRobot,
                                const FrameId& sensor = frame::kSensor) {
  const RigidTransform position_map = g.resolve(robot, path.frame);
  const RotationMatrix orientation_map = g.resolve(robot, sensor).rotation;
  FusedPath out;
  out.frame = robot;
  out.waypoints.reserve(path.waypoints.size());
  for (const Waypoint& w : path.waypoints) {
    Waypoint m = w;
    m.position = position_map.apply(w.position);
    m.orientation = orientation_map * w.orientation * mounting;
    out.waypoints.push_back(m);
  }
  return out;
}

}  // namespace skillpath

#endif  // SKILLPATH_PATHFUSION_HPP_
