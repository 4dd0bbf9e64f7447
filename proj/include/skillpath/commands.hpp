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

// The pipeline commands behind the CLI: synth, fuse, validate, emit.
//
// Exit codes: 0 success / validation passed, 2 validation failures, 1 any
// hard error (bad input, missing file, refusal to emit).

#ifndef SKILLPATH_COMMANDS_HPP_
#define SKILLPATH_COMMANDS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "skillpath/capture.hpp"
#include "skillpath/config.hpp"
#include "skillpath/emit.hpp"
#include "skillpath/error.hpp"
#include "skillpath/frames.hpp"
#include "skillpath/kinematics.hpp"
#include "skillpath/pathfusion.hpp"
#include "skillpath/scenarios.hpp"
#include "skillpath/session.hpp"

namespace skillpath {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidationFailed = 2;

enum class Backend { kPortable, kInform };

inline Backend parse_backend(std::string_view name) {
  if (name == "portable") return Backend::kPortable;
  if (name == "inform") return Backend::kInform;
  throw Error(ErrorKind::kConfiguration, "unknown backend '" + std::string(name) +
                                             "' (expected portable or inform)");
}

/// Error tagged with the pipeline stage it came from.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

/// Demonstration positions re-expressed in the path's frame; orientations
/// stay relative to the sensor.
inline DemonstrationTrace trace_in_frame(const DemonstrationTrace& trace, const FrameGraph& g,
                                         const FrameId& target) {
  const RigidTransform t = g.resolve(target, frame::kSensor);
  DemonstrationTrace out = trace;
  for (auto& s : out.samples) s.position = t.apply(s.position);
  return out;
}

struct FusionResult {
  NominalPath aligned_path;
  DemonstrationTrace segment;
  Correspondence correspondence;
  FusedPath fused;         // path frame, before downsampling
  FusedPath robot_path;    // downsampled, robot frame
  ValidationReport report;
};

/// parse -> segment -> correspond -> fuse -> downsample -> robot frame ->
/// validate, on already loaded inputs.
inline FusionResult run_fusion(const NominalPath& nominal, const std::vector<DemonstrationTrace>& traces,
                               const FrameGraph& g, const ArmModel& arm,
                               const FusionParameters& fp, const ValidationPolicy& policy) {
  FusionResult r{nominal, {}, {}, {}, {}, {}};
  r.segment = run_stage("segment", [&] {
    DemonstrationTrace best;
    for (const DemonstrationTrace& raw : traces) {
      const DemonstrationTrace t = trace_in_frame(raw, g, nominal.frame());
      std::vector<DemonstrationTrace> segs;
      if (fp.segment) {
        segs = segment_trace(t, fp.segmentation);
      } else {
        segs.push_back(t);
      }
      for (auto& s : segs) {
        if (best.samples.empty() || s.duration() > best.duration()) best = std::move(s);
      }
    }
    if (best.size() < 2) {
      throw Error(ErrorKind::kDegenerateInput, "no active demonstration segment found");
    }
    return best;
  });
  r.aligned_path = run_stage("correspond", [&] {
    return align_path_to_trace(nominal, r.segment, fp.correspondence);
  });
  r.correspondence = run_stage("correspond", [&] {
    return correspond(r.aligned_path, r.segment, fp.correspondence);
  });
  r.fused = run_stage("fuse", [&] { return fuse(r.aligned_path, r.segment, r.correspondence, fp.fuse); });
  const FusedPath reduced =
      run_stage("downsample", [&] { return downsample(r.fused, fp.tol_pos_mm, fp.tol_rot_deg); });
  r.robot_path = run_stage("frames", [&] { return to_robot_frame(reduced, g, fp.mounting); });
  r.report = run_stage("validate", [&] { return validate(arm, r.robot_path, policy); });
  return r;
}

inline std::string input_digest(const ProjectConfig& c) {
  std::string all = read_file(c.calibration) + read_file(c.arm) + read_file(c.nominal_path);
  for (const auto& t : c.traces) all += read_file(t);
  return fnv1a_hex(all);
}

inline void print_violations(const ValidationReport& r, std::ostream& err, std::size_t limit = 20) {
  std::size_t shown = 0;
  for (const Violation& v : r.violations) {
    if (shown++ == limit) {
      err << "  ... " << (r.violations.size() - limit) << " more\n";
      break;
    }
    err << "  waypoint " << v.index << " [" << to_string(v.kind) << "]: " << v.message << "\n";
  }
}

/// Runs the full pipeline and writes the session file (config.session unless
/// overridden).
inline int cmd_fuse(const std::filesystem::path& config_path,
                    const std::optional<std::filesystem::path>& session_out,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const ProjectConfig c = run_stage("config", [&] { return load_project_config(config_path); });
    const FrameGraph g = run_stage("calibration", [&] { return load_calibration_file(c.calibration); });
    const ArmModel arm = run_stage("arm", [&] { return load_arm_model_file(c.arm); });
    const NominalPath nominal = run_stage("path", [&] { return load_nominal_path_file(c.nominal_path); });
    std::vector<DemonstrationTrace> traces;
    for (const auto& t : c.traces) {
      traces.push_back(run_stage("trace", [&] { return load_trace_file(t); }));
    }
    const FusionResult r = run_fusion(nominal, traces, g, arm, c.fusion, c.validation);

    SessionState s;
    s.created = c.created;
    s.source_digest = run_stage("session", [&] { return input_digest(c); });
    s.path = r.robot_path;
    s.original = r.robot_path;
    s.report = r.report;
    const auto target = session_out.value_or(c.session);
    run_stage("session", [&] {
      write_file_atomic(target, serialize_session(s));
      return 0;
    });
    out << "fused " << r.fused.waypoints.size() << " waypoints, kept " << s.path.waypoints.size()
        << " after downsampling; session written to " << target.string() << "\n";
    if (!r.report.pass()) {
      err << "validation failed with " << r.report.violations.size() << " violation(s):\n";
      print_violations(r.report, err);
      return kExitValidationFailed;
    }
    out << "validation passed\n";
    return kExitOk;
  } catch (const StageError& e) {
    err << "skillpath fuse: " << e.what() << "\n";
    return kExitError;
  }
}

/// Re-validates a session against the config's arm model and policy.
inline int cmd_validate(const std::filesystem::path& config_path,
                        const std::filesystem::path& session_path, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  try {
    const ProjectConfig c =
        run_stage("config", [&] { return load_project_config(config_path, false); });
    const ArmModel arm = run_stage("arm", [&] { return load_arm_model_file(c.arm); });
    SessionState s = run_stage("session", [&] { return load_session_file(session_path); });
    s.report = run_stage("validate", [&] { return validate(arm, s.path, c.validation); });
    run_stage("session", [&] {
      write_file_atomic(session_path, serialize_session(s));
      return 0;
    });
    if (!s.report.pass()) {
      err << "validation failed with " << s.report.violations.size() << " violation(s):\n";
      print_violations(s.report, err);
      return kExitValidationFailed;
    }
    out << "validation passed (" << s.path.waypoints.size() << " waypoints)\n";
    return kExitOk;
  } catch (const StageError& e) {
    err << "skillpath validate: " << e.what() << "\n";
    return kExitError;
  }
}

/// Program bytes for a session. forced marks emission without approval.
inline std::string render_program(const SessionState& s, const EmitOptions& opt, Backend backend,
                                  bool forced) {
  ProgramHeader h;
  h.tool_id = opt.tool_id;
  h.created = s.created;
  h.source_digest = path_digest(s.path);
  h.forced = forced;
  const RobotProgram p = compile(s.path, opt.name, h);
  return backend == Backend::kPortable ? emit_portable(p) : emit_inform(p, opt.inform);
}

inline int cmd_emit(const std::filesystem::path& config_path,
                    const std::filesystem::path& session_path, Backend backend,
                    const std::filesystem::path& out_path, bool force,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const ProjectConfig c =
        run_stage("config", [&] { return load_project_config(config_path, false); });
    SessionState s = run_stage("session", [&] { return load_session_file(session_path); });
    // The stored report may predate an arm model change; trust a fresh one.
    const ArmModel arm = run_stage("arm", [&] { return load_arm_model_file(c.arm); });
    s.report = run_stage("validate", [&] { return validate(arm, s.path, c.validation); });
    const bool ready = s.approved && s.report.pass();
    if (!ready && !force) {
      err << "skillpath emit: refusing to emit: session "
          << (s.report.pass() ? "is not approved" : "has validation violations")
          << "; approve it in the review service or pass --force\n";
      return kExitError;
    }
    if (!ready) {
      err << "skillpath emit: warning: emitting an unapproved session (--force); "
             "the program header records this\n";
    }
    const std::string bytes =
        run_stage("emit", [&] { return render_program(s, c.emit, backend, !ready); });
    run_stage("emit", [&] {
      write_file_atomic(out_path, bytes);
      return 0;
    });
    out << "wrote " << out_path.string() << " (" << bytes.size() << " bytes)\n";
    return kExitOk;
  } catch (const StageError& e) {
    err << "skillpath emit: " << e.what() << "\n";
    return kExitError;
  }
}

struct SynthSummary {
  std::size_t samples = 0;
  double max_z_error_mm = 0.0;
  double max_orientation_error_deg = 0.0;
};

/// Writes a synthetic trace (first trace path of the config) and its ground
/// truth. Built-in scenarios also write their nominal path.
inline SynthSummary synthesize_for_config(const ProjectConfig& c, std::uint64_t seed) {
  if (!c.scenario) {
    throw Error(ErrorKind::kConfiguration, c.source.string() + ": no \"scenario\" section");
  }
  const ScenarioConfig& sc = *c.scenario;
  NominalPath path = sc.builtin_path ? scenarios::builtin(*sc.builtin_path)
                                     : load_nominal_path_file(c.nominal_path);
  if (sc.builtin_path) write_file_atomic(c.nominal_path, serialize_nominal_path(path));
  const FrameGraph g = load_calibration_file(c.calibration);
  SynthesisOptions opt = sc.synthesis;
  opt.sensor_from_path = g.resolve(frame::kSensor, path.frame());
  const SynthesizedTrace st = synthesize_trace(path, opt, sc.error_model, seed);
  write_file_atomic(c.traces.front(), serialize_trace(st.trace));
  write_file_atomic(sc.out_truth, serialize_ground_truth(st.truth));

  SynthSummary sum;
  sum.samples = st.trace.size();
  for (std::size_t i = 0; i < st.truth.size(); ++i) {
    const Vec3 truth_s = opt.sensor_from_path.apply(st.truth[i].position);
    sum.max_z_error_mm = std::max(sum.max_z_error_mm,
                                  std::abs(st.trace.samples[i].position.z() - truth_s.z()));
    sum.max_orientation_error_deg = std::max(
        sum.max_orientation_error_deg,
        rad_to_deg(geodesic_angle(euler_zyx_to_matrix(st.trace.samples[i].orientation.to_radians()),
                                  euler_zyx_to_matrix(st.truth[i].orientation.to_radians()))));
  }
  return sum;
}

inline int cmd_synth(const std::filesystem::path& config_path, std::uint64_t seed,
                     std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const ProjectConfig c =
        run_stage("config", [&] { return load_project_config(config_path, false); });
    const SynthSummary s = run_stage("synth", [&] { return synthesize_for_config(c, seed); });
    out << "wrote " << s.samples << " samples to " << c.traces.front().string()
        << "; max z error " << s.max_z_error_mm << " mm, max orientation error "
        << s.max_orientation_error_deg << " deg\n";
    return kExitOk;
  } catch (const StageError& e) {
    err << "skillpath synth: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace skillpath

#endif  // SKILLPATH_COMMANDS_HPP_
