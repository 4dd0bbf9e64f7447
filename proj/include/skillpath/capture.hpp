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

// Demonstration traces from the magnetic tracker: parsing, serialization,
// segmentation, and a synthetic trace generator with the tracker's error
// behaviour (z drift growing with receptor range, small x/y jitter, bounded
// orientation noise).

#ifndef SKILLPATH_CAPTURE_HPP_
#define SKILLPATH_CAPTURE_HPP_

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "skillpath/error.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/json_util.hpp"
#include "skillpath/path.hpp"

namespace skillpath {

inline constexpr std::string_view kTraceMagic = "# skillpath-trace v1";
inline constexpr std::string_view kTraceHeader =
    "t_s,x_mm,y_mm,z_mm,azimuth_deg,elevation_deg,roll_deg";

enum class PositionTrust { kLow, kMedium, kHigh };

/// Tracker angles exactly as recorded, in degrees.
struct TrackerAngles {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double roll_deg = 0.0;

  EulerZYX to_radians() const {
    return EulerZYX{deg_to_rad(azimuth_deg), deg_to_rad(elevation_deg),
                    deg_to_rad(roll_deg)};
  }
  static TrackerAngles from_radians(const EulerZYX& e) {
    return TrackerAngles{rad_to_deg(e.psi), rad_to_deg(e.theta),
                         rad_to_deg(e.phi)};
  }
  bool operator==(const TrackerAngles&) const = default;
};

// x and y are usable, z is dominated by range-dependent drift.
inline constexpr std::array<PositionTrust, 3> kDefaultTrust = {
    PositionTrust::kMedium, PositionTrust::kMedium, PositionTrust::kLow};

struct DemonstrationSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();  // mm, sensor frame {S}
  TrackerAngles orientation;
  std::array<PositionTrust, 3> trust = kDefaultTrust;
};

struct TraceMeta {
  std::string source;
  double nominal_rate_hz = 0.0;
};

struct DemonstrationTrace {
  std::vector<DemonstrationSample> samples;
  TraceMeta meta;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Shortest representation that parses back to the same double.
inline void append_double(std::string& out, double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

inline double median_rate(const std::vector<DemonstrationSample>& s) {
  if (s.size() < 2) return 0.0;
  std::vector<double> dt;
  for (std::size_t i = 1; i < s.size(); ++i) dt.push_back(s[i].t - s[i - 1].t);
  std::nth_element(dt.begin(), dt.begin() + static_cast<long>(dt.size() / 2), dt.end());
  const double m = dt[dt.size() / 2];
  return m > 0.0 ? 1.0 / m : 0.0;
}

}  // namespace detail

/// Parses the CSV trace format. Errors name the 1-based file line.
inline DemonstrationTrace parse_trace(std::string_view text,
                                      std::string_view source = "trace") {
  DemonstrationTrace trace;
  trace.meta.source = std::string(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw Error(ErrorKind::kParse, std::string(source) + ":" +
                                       std::to_string(line_no) + ": " + msg);
  };
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kTraceMagic) fail("bad magic line (expected '# skillpath-trace v1')");
      continue;
    }
    if (line_no == 2) {
      if (detail::trim(line) != kTraceHeader) fail("unexpected column header");
      continue;
    }
    if (detail::trim(line).empty()) continue;

    std::array<double, 7> v{};
    std::size_t col = 0, start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field =
          line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      if (col >= v.size()) fail("too many columns (expected 7)");
      if (!detail::parse_double(field, v[col])) {
        fail("column " + std::to_string(col + 1) + " is not a finite number");
      }
      ++col;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (col != v.size()) fail("expected 7 columns, found " + std::to_string(col));
    DemonstrationSample s;
    s.t = v[0];
    s.position = Vec3(v[1], v[2], v[3]);
    s.orientation = TrackerAngles{v[4], v[5], v[6]};
    if (!trace.samples.empty() && !(s.t > trace.samples.back().t)) {
      fail("timestamps must be strictly increasing");
    }
    trace.samples.push_back(s);
  }
  if (line_no < 2) {
    ++line_no;
    fail("missing header");
  }
  trace.meta.nominal_rate_hz = detail::median_rate(trace.samples);
  return trace;
}

inline DemonstrationTrace load_trace_file(const std::filesystem::path& path) {
  return parse_trace(read_file(path), path.string());
}

inline std::string serialize_trace(const DemonstrationTrace& trace) {
  std::string out;
  out.reserve(64 * (trace.size() + 2));
  out.append(kTraceMagic).push_back('\n');
  out.append(kTraceHeader).push_back('\n');
  for (const DemonstrationSample& s : trace.samples) {
    const std::array<double, 7> v = {
        s.t, s.position.x(), s.position.y(), s.position.z(),
        s.orientation.azimuth_deg, s.orientation.elevation_deg,
        s.orientation.roll_deg};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out.push_back(',');
      detail::append_double(out, v[i]);
    }
    out.push_back('\n');
  }
  return out;
}

struct TimedRotation {
  double t = 0.0;
  RotationMatrix rotation;
};

inline std::vector<TimedRotation> orientations_as_matrices(
    const DemonstrationTrace& trace) {
  std::vector<TimedRotation> out;
  out.reserve(trace.size());
  for (const DemonstrationSample& s : trace.samples) {
    out.push_back({s.t, euler_zyx_to_matrix(s.orientation.to_radians())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation

struct SegmentOptions {
  double speed_floor_mm_s = 5.0;
  double dwell_s = 0.5;
  /// Half-width of the position averaging used for the speed estimate; 0
  /// uses raw finite differences.
  double window_s = 0.0;
};

/// Planar (x, y) speed over each interval (i, i+1); z is not trusted.
inline std::vector<double> planar_interval_speeds(const DemonstrationTrace& trace,
                                                  double window_s) {
  const auto& s = trace.samples;
  std::vector<double> speeds;
  if (s.size() < 2) return speeds;
  speeds.resize(s.size() - 1);
  std::size_t lo = 0, hi = 0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    if (window_s <= 0.0) {
      const Vec3 d = s[k + 1].position - s[k].position;
      speeds[k] = std::hypot(d.x(), d.y()) / (s[k + 1].t - s[k].t);
      continue;
    }
    const double mid = 0.5 * (s[k].t + s[k + 1].t);
    while (s[lo].t < mid - window_s) ++lo;
    while (hi + 1 < s.size() && s[hi + 1].t <= mid + window_s) ++hi;
    const std::size_t a = std::min(lo, k);
    const std::size_t b = std::max(hi, k + 1);
    // before: [a, k], after: [k+1, b]
    double bx = 0, by = 0, bt = 0, ax = 0, ay = 0, at = 0;
    for (std::size_t i = a; i <= k; ++i) {
      bx += s[i].position.x();
      by += s[i].position.y();
      bt += s[i].t;
    }
    for (std::size_t i = k + 1; i <= b; ++i) {
      ax += s[i].position.x();
      ay += s[i].position.y();
      at += s[i].t;
    }
    const double nb = static_cast<double>(k + 1 - a);
    const double na = static_cast<double>(b - k);
    speeds[k] = std::hypot(ax / na - bx / nb, ay / na - by / nb) / (at / na - bt / nb);
  }
  if (window_s > 0.0) {
    // A truncated window at either end averages a handful of samples and
    // reads jitter as motion; hold the nearest full-window estimate instead.
    const auto full = [&](std::size_t k) {
      const double mid = 0.5 * (s[k].t + s[k + 1].t);
      return mid - window_s >= s.front().t && mid + window_s <= s.back().t;
    };
    std::size_t first = 0, last = speeds.size() - 1;
    while (first < speeds.size() && !full(first)) ++first;
    while (last > first && !full(last)) --last;
    if (first < speeds.size() && full(last)) {
      for (std::size_t k = 0; k < first; ++k) speeds[k] = speeds[first];
      for (std::size_t k = last + 1; k < speeds.size(); ++k) speeds[k] = speeds[last];
    }
  }
  return speeds;
}

/// Splits a trace at dwells: maximal runs of slow intervals lasting at least
/// dwell_s. Returns the remaining pieces that contain real motion, in order.
inline std::vector<DemonstrationTrace> segment_trace(const DemonstrationTrace& trace,
                                                     const SegmentOptions& opt = {}) {
  std::vector<DemonstrationTrace> out;
  const auto& s = trace.samples;
  if (s.size() < 2) return out;
  const std::vector<double> speed = planar_interval_speeds(trace, opt.window_s);
  const std::size_t n = speed.size();
  std::vector<bool> slow(n), dwell(n, false);
  for (std::size_t k = 0; k < n; ++k) slow[k] = speed[k] < opt.speed_floor_mm_s;
  for (std::size_t k = 0; k < n;) {
    if (!slow[k]) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j < n && slow[j]) ++j;
    if (s[j].t - s[k].t >= opt.dwell_s) {
      for (std::size_t i = k; i < j; ++i) dwell[i] = true;
    }
    k = j;
  }
  std::size_t start = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (k == n || dwell[k]) {
      // samples [start, k] joined by non-dwell intervals [start, k)
      bool moving = false;
      for (std::size_t i = start; i < k; ++i) moving = moving || !slow[i];
      if (k > start && moving) {
        DemonstrationTrace seg;
        seg.meta = trace.meta;
        seg.samples.assign(s.begin() + static_cast<long>(start),
                           s.begin() + static_cast<long>(k) + 1);
        out.push_back(std::move(seg));
      }
      start = k + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthesis

enum class DriftGrowth { kLinear, kQuadratic };

struct TrackerErrorModel {
  double z_drift_mm_at_max_range = 60.0;
  DriftGrowth drift_growth = DriftGrowth::kLinear;
  /// Each sample's orientation is perturbed by an angle drawn uniformly from
  /// [min, max] about a random axis.
  double orientation_noise_min_deg = 1.0;
  double orientation_noise_max_deg = 5.0;
  double xy_jitter_mm = 1.0;

  static TrackerErrorModel noiseless() {
    return TrackerErrorModel{0.0, DriftGrowth::kLinear, 0.0, 0.0, 0.0};
  }

  void check() const {
    if (!(z_drift_mm_at_max_range >= 0.0) || !(orientation_noise_min_deg >= 0.0) ||
        !(orientation_noise_max_deg >= orientation_noise_min_deg) ||
        !(xy_jitter_mm >= 0.0)) {
      throw Error(ErrorKind::kConfiguration,
                  "error model magnitudes must be >= 0 with min <= max");
    }
  }
};

/// Piecewise-linear speed over the normalized arc length s / L.
struct SpeedProfile {
  std::vector<std::pair<double, double>> knots{{0.0, 100.0}, {1.0, 100.0}};

  static SpeedProfile constant(double v) { return SpeedProfile{{{0.0, v}, {1.0, v}}}; }

  double at(double fraction) const {
    if (fraction <= knots.front().first) return knots.front().second;
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (fraction <= knots[i].first) {
        const auto [f0, v0] = knots[i - 1];
        const auto [f1, v1] = knots[i];
        const double u = f1 > f0 ? (fraction - f0) / (f1 - f0) : 1.0;
        return v0 + u * (v1 - v0);
      }
    }
    return knots.back().second;
  }
};

/// Ground-truth tool orientation as a smooth function of arc length:
/// angle_i = base_i + amplitude_i * sin(2 pi cycles_i s / L + phase_i), tracker
/// (azimuth, elevation, roll) order, degrees.
struct OrientationProfile {
  Vec3 base_deg = Vec3::Zero();
  Vec3 amplitude_deg = Vec3(15.0, 10.0, 5.0);
  Vec3 cycles = Vec3(1.0, 2.0, 1.0);
  Vec3 phase_deg = Vec3(0.0, 0.0, 90.0);

  TrackerAngles at(double s, double length) const {
    Vec3 a;
    for (int i = 0; i < 3; ++i) {
      a[i] = base_deg[i] + amplitude_deg[i] * std::sin(2.0 * kPi * cycles[i] * s / length +
                                                       deg_to_rad(phase_deg[i]));
    }
    return TrackerAngles{a[0], a[1], a[2]};
  }
};

struct SynthesisOptions {
  double sample_rate_hz = 120.0;
  /// Maps path coordinates into the sensor frame; samples are reported in
  /// sensor coordinates and z drift acts along the sensor z axis.
  RigidTransform sensor_from_path;
  /// Receptor location in sensor coordinates.
  Vec3 receptor_mm = Vec3::Zero();
  SpeedProfile speed;
  OrientationProfile orientation;
  /// Stationary time before and after the pass.
  double dwell_before_s = 0.0;
  double dwell_after_s = 0.0;
};

struct GroundTruthSample {
  double t = 0.0;
  double s = 0.0;
  Vec3 position = Vec3::Zero();  // path frame
  TrackerAngles orientation;
};

struct SynthesizedTrace {
  DemonstrationTrace trace;
  std::vector<GroundTruthSample> truth;
};

namespace detail {

// Platform-stable draws: mt19937_64 is fully specified, the std
// distributions are not.
class StableRng {
 public:
  explicit StableRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }
  Vec3 unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double a = uniform(0.0, 2.0 * kPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(r * std::cos(a), r * std::sin(a), z);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detail

/// Walks the path at the given speed profile and corrupts the samples with
/// the tracker error model. Deterministic for a fixed seed.
inline SynthesizedTrace synthesize_trace(const NominalPath& path,
                                         const SynthesisOptions& opt,
                                         const TrackerErrorModel& model,
                                         std::uint64_t seed) {
  model.check();
  if (!(opt.sample_rate_hz > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "sample rate must be positive");
  }
  for (const auto& [f, v] : opt.speed.knots) {
    if (!(v > 0.0)) throw Error(ErrorKind::kDegenerateInput, "speeds must be > 0");
  }
  const double length = path.total_length();
  const double dt = 1.0 / opt.sample_rate_hz;
  auto speed_at = [&](double s) { return opt.speed.at(s / length); };

  // Arc-length schedule: dwell, RK4 walk ending exactly at L, dwell.
  std::vector<std::pair<double, double>> schedule;  // (t, s)
  double t = 0.0;
  const auto dwell_steps = [&](double secs) {
    return static_cast<std::size_t>(std::llround(secs * opt.sample_rate_hz));
  };
  for (std::size_t i = 0; i < dwell_steps(opt.dwell_before_s); ++i) {
    schedule.emplace_back(t, 0.0);
    t += dt;
  }
  double s = 0.0;
  schedule.emplace_back(t, s);
  while (s < length) {
    const double k1 = speed_at(s);
    const double k2 = speed_at(s + 0.5 * dt * k1);
    const double k3 = speed_at(s + 0.5 * dt * k2);
    const double k4 = speed_at(s + dt * k3);
    const double next = s + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    if (next >= length) {
      const double frac = (length - s) / (next - s);
      if (frac * dt > 1e-9) schedule.emplace_back(t + frac * dt, length);
      t += frac * dt;
      s = length;
      break;
    }
    t += dt;
    s = next;
    schedule.emplace_back(t, s);
  }
  for (std::size_t i = 0; i < dwell_steps(opt.dwell_after_s); ++i) {
    t += dt;
    schedule.emplace_back(t, length);
  }

  SynthesizedTrace out;
  out.truth.reserve(schedule.size());
  double max_range = 0.0;
  for (const auto& [ts, ss] : schedule) {
    GroundTruthSample g;
    g.t = ts;
    g.s = ss;
    g.position = path.evaluate(ss);
    g.orientation = opt.orientation.at(ss, length);
    max_range = std::max(
        max_range, (opt.sensor_from_path.apply(g.position) - opt.receptor_mm).norm());
    out.truth.push_back(g);
  }

  detail::StableRng rng(seed);
  out.trace.meta.source = "synthetic";
  out.trace.meta.nominal_rate_hz = opt.sample_rate_hz;
  out.trace.samples.reserve(out.truth.size());
  for (const GroundTruthSample& g : out.truth) {
    DemonstrationSample d;
    d.t = g.t;
    d.position = opt.sensor_from_path.apply(g.position);
    const double range =
        max_range > 0.0 ? (d.position - opt.receptor_mm).norm() / max_range : 0.0;
    const double growth =
        model.drift_growth == DriftGrowth::kLinear ? range : range * range;
    d.position.z() += model.z_drift_mm_at_max_range * growth;
    if (model.xy_jitter_mm > 0.0) {
      d.position.x() += model.xy_jitter_mm * rng.normal();
      d.position.y() += model.xy_jitter_mm * rng.normal();
    }
    d.orientation = g.orientation;
    if (model.orientation_noise_max_deg > 0.0) {
      const Vec3 axis = rng.unit_vector();
      const double angle = deg_to_rad(rng.uniform(model.orientation_noise_min_deg,
                                                  model.orientation_noise_max_deg));
      const RotationMatrix truth = euler_zyx_to_matrix(g.orientation.to_radians());
      const RotationMatrix noisy =
          truth * RotationMatrix::trusted(Eigen::AngleAxisd(angle, axis).toRotationMatrix());
      d.orientation = TrackerAngles::from_radians(matrix_to_euler_zyx(noisy));
    }
    out.trace.samples.push_back(d);
  }
  return out;
}

/// Ground truth as JSON: {"version":1, "samples":[{"t_s", "s_mm",
/// "position_mm", "euler_zyx_deg"}]}.
inline std::string serialize_ground_truth(const std::vector<GroundTruthSample>& truth) {
  Json samples = Json::array();
  for (const GroundTruthSample& g : truth) {
    samples.push_back(Json{
        {"t_s", g.t},
        {"s_mm", g.s},
        {"position_mm", {g.position.x(), g.position.y(), g.position.z()}},
        {"euler_zyx_deg",
         {g.orientation.azimuth_deg, g.orientation.elevation_deg, g.orientation.roll_deg}}});
  }
  return Json{{"version", 1}, {"samples", samples}}.dump(1) + "\n";
}

inline std::vector<GroundTruthSample> parse_ground_truth(std::string_view text) {
  namespace jf = json_field;
  const Json doc = parse_json_text(text, "ground truth");
  jf::version(doc, "ground truth");
  std::vector<GroundTruthSample> out;
  for (const Json& j : jf::at(doc, "ground truth", "samples")) {
    GroundTruthSample g;
    g.t = jf::number(jf::at(j, "sample", "t_s"), "t_s");
    g.s = jf::number(jf::at(j, "sample", "s_mm"), "s_mm");
    g.position = jf::vec3(jf::at(j, "sample", "position_mm"), "position_mm");
    const Vec3 e = jf::vec3(jf::at(j, "sample", "euler_zyx_deg"), "euler_zyx_deg");
    g.orientation = TrackerAngles{e[0], e[1], e[2]};
    out.push_back(g);
  }
  return out;
}

}  // namespace skillpath

#endif  // SKILLPATH_CAPTURE_HPP_
