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

// Robot program IR and its two serializers: a canonical portable JSON job and
// an INFORM-flavored .JBI text for MOTOMAN controllers.
//
// The INFORM output is a documented subset (Cartesian MOVL in the robot base
// frame, one tool, no pulse records). It has not been verified on a
// controller.

#ifndef SKILLPATH_EMIT_HPP_
#define SKILLPATH_EMIT_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "skillpath/error.hpp"
#include "skillpath/frames.hpp"
#include "skillpath/geometry.hpp"
#include "skillpath/json_util.hpp"
#include "skillpath/pathfusion.hpp"

namespace skillpath {

struct Move {
  Vec3 position = Vec3::Zero();  // mm, robot frame
  FixedXYZ orientation;          // rad
  double speed = 0.0;            // mm/s
};

struct ProgramHeader {
  std::string tool_id;
  std::string source_digest;
  std::string created;  // ISO-8601 UTC, e.g. 2026-10-16T00:00:00Z
  bool forced = false;  // emitted without operator approval
};

struct RobotProgram {
  std::string name;
  FrameId frame = frame::kRobot;
  std::vector<Move> moves;
  ProgramHeader header;
};

/// One linear move per waypoint, orientation as fixed x-y-z angles.
inline RobotProgram compile(const FusedPath& path, std::string name,
                            ProgramHeader header = {}) {
  if (path.frame != frame::kRobot) {
    throw Error(ErrorKind::kContract,
                "programs are compiled from robot-frame paths, got '" + path.frame + "'");
  }
  if (path.waypoints.empty()) {
    throw Error(ErrorKind::kContract, "cannot compile an empty path");
  }
  RobotProgram p;
  p.name = std::move(name);
  p.header = std::move(header);
  p.moves.reserve(path.waypoints.size());
  for (const Waypoint& w : path.waypoints) {
    p.moves.push_back(Move{w.position, matrix_to_fixed_xyz(w.orientation), w.speed});
  }
  return p;
}

/// FNV-1a, 64 bit, as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

/// Fixed-point decimal, no locale, no exponent, no negative zero.
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  if (ec != std::errc()) throw Error(ErrorKind::kEmit, "number out of range");
  std::string s(buf, ptr);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

// ---------------------------------------------------------------------------
// Portable job

inline constexpr int kPortableMmDecimals = 3;
inline constexpr int kPortableDegDecimals = 4;
inline constexpr int kPortableSpeedDecimals = 1;

/// Canonical JSON: sorted keys, two-space indent, one move per line, LF.
inline std::string emit_portable(const RobotProgram& p) {
  auto str = [](const std::string& s) { return Json(s).dump(); };
  auto triple = [](const std::array<double, 3>& v, int dec) {
    return "[" + format_fixed(v[0], dec) + ", " + format_fixed(v[1], dec) + ", " +
           format_fixed(v[2], dec) + "]";
  };
  std::string out;
  out += "{\n";
  out += "  \"format\": \"skillpath-job\",\n";
  out += "  \"frame\": " + str(p.frame) + ",\n";
  out += "  \"header\": {\n";
  out += "    \"created\": " + str(p.header.created) + ",\n";
  out += std::string("    \"forced\": ") + (p.header.forced ? "true" : "false") + ",\n";
  out += "    \"source_digest\": " + str(p.header.source_digest) + ",\n";
  out += "    \"tool_id\": " + str(p.header.tool_id) + "\n";
  out += "  },\n";
  out += "  \"moves\": [\n";
  for (std::size_t i = 0; i < p.moves.size(); ++i) {
    const Move& m = p.moves[i];
    out += "    {\"kind\": \"linear\", \"orientation_fixed_xyz_deg\": ";
    out += triple({rad_to_deg(m.orientation.phi), rad_to_deg(m.orientation.theta),
                   rad_to_deg(m.orientation.psi)},
                  kPortableDegDecimals);
    out += ", \"position_mm\": ";
    out += triple({m.position.x(), m.position.y(), m.position.z()}, kPortableMmDecimals);
    out += ", \"speed_mm_s\": " + format_fixed(m.speed, kPortableSpeedDecimals) + "}";
    out += i + 1 < p.moves.size() ? ",\n" : "\n";
  }
  out += "  ],\n";
  out += "  \"name\": " + str(p.name) + ",\n";
  out += "  \"version\": 1\n";
  out += "}\n";
  return out;
}

inline RobotProgram parse_portable(std::string_view text) {
  namespace jf = json_field;
  const std::string root = "portable job";
  const Json doc = parse_json_text(text, root);
  jf::require_object(doc, root);
  jf::reject_unknown(doc, root, {"format", "frame", "header", "moves", "name", "version"});
  jf::version(doc, root);
  if (jf::string(jf::at(doc, root, "format"), root + ".format") != "skillpath-job") {
    jf::fail(root + ".format", "expected 'skillpath-job'");
  }
  RobotProgram p;
  p.name = jf::string(jf::at(doc, root, "name"), root + ".name");
  p.frame = jf::string(jf::at(doc, root, "frame"), root + ".frame");
  const Json& h = jf::at(doc, root, "header");
  jf::require_object(h, root + ".header");
  jf::reject_unknown(h, root + ".header", {"created", "forced", "source_digest", "tool_id"});
  p.header.created = jf::string(jf::at(h, root + ".header", "created"), "created");
  p.header.forced = jf::boolean(jf::at(h, root + ".header", "forced"), "forced");
  p.header.source_digest = jf::string(jf::at(h, root + ".header", "source_digest"), "source_digest");
  p.header.tool_id = jf::string(jf::at(h, root + ".header", "tool_id"), "tool_id");
  const Json& moves = jf::at(doc, root, "moves");
  if (!moves.is_array()) jf::fail(root + ".moves", "expected an array");
  for (std::size_t i = 0; i < moves.size(); ++i) {
    const std::string w = root + ".moves[" + std::to_string(i) + "]";
    const Json& mj = moves[i];
    jf::require_object(mj, w);
    jf::reject_unknown(mj, w, {"kind", "orientation_fixed_xyz_deg", "position_mm", "speed_mm_s"});
    if (jf::string(jf::at(mj, w, "kind"), w + ".kind") != "linear") {
      jf::fail(w + ".kind", "only 'linear' moves are supported");
    }
    Move m;
    m.position = jf::vec3(jf::at(mj, w, "position_mm"), w + ".position_mm");
    const Vec3 a = jf::vec3(jf::at(mj, w, "orientation_fixed_xyz_deg"),
                            w + ".orientation_fixed_xyz_deg");
    m.orientation = FixedXYZ{deg_to_rad(a[0]), deg_to_rad(a[1]), deg_to_rad(a[2])};
    m.speed = jf::number(jf::at(mj, w, "speed_mm_s"), w + ".speed_mm_s");
    p.moves.push_back(m);
  }
  return p;
}

// ---------------------------------------------------------------------------
// INFORM-flavored job

struct InformOptions {
  int tool = 0;
  std::size_t max_positions = 999;
  /// Largest V= value; the field is in 0.1 mm/s units.
  long max_speed_field = 9999;
};

inline bool valid_job_name(std::string_view name) {
  if (name.empty() || name.size() > 32) return false;
  for (char c : name) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

inline std::string inform_date(const std::string& iso) {
  // 2026-10-16T08:30:00Z -> 2026/10/16 08:30
  if (iso.size() >= 16 && iso[4] == '-' && iso[7] == '-' && iso[10] == 'T') {
    return iso.substr(0, 4) + "/" + iso.substr(5, 2) + "/" + iso.substr(8, 2) + " " +
           iso.substr(11, 5);
  }
  return "1970/01/01 00:00";
}

inline std::string emit_inform(const RobotProgram& p, const InformOptions& opt = {}) {
  if (!valid_job_name(p.name)) {
    throw Error(ErrorKind::kEmit,
                "job name must be 1-32 characters of [A-Za-z0-9_-], got '" + p.name + "'");
  }
  if (p.moves.empty()) throw Error(ErrorKind::kEmit, "job has no moves");
  if (p.moves.size() > opt.max_positions) {
    throw Error(ErrorKind::kEmit, std::to_string(p.moves.size()) +
                                      " moves exceed the position budget of " +
                                      std::to_string(opt.max_positions));
  }
  std::vector<long> speed_fields;
  for (std::size_t i = 0; i < p.moves.size(); ++i) {
    const double v = std::round(p.moves[i].speed * 10.0);
    if (!(v >= 1.0) || v > static_cast<double>(opt.max_speed_field)) {
      throw Error(ErrorKind::kEmit, "move " + std::to_string(i) + ": speed " +
                                        format_fixed(p.moves[i].speed, 1) +
                                        " mm/s does not fit the V= field (1.." +
                                        std::to_string(opt.max_speed_field) + ")");
    }
    speed_fields.push_back(static_cast<long>(v));
  }
  auto pos_label = [](std::size_t i) {
    std::string n = std::to_string(i);
    return "C" + std::string(5 - std::min<std::size_t>(5, n.size()), '0') + n;
  };
  const std::string nl = "\r\n";
  std::string out;
  out += "/JOB" + nl;
  out += "//NAME " + p.name + nl;
  out += "//POS" + nl;
  out += "///NPOS " + std::to_string(p.moves.size()) + ",0,0,0,0,0" + nl;
  out += "///TOOL " + std::to_string(opt.tool) + nl;
  out += "///POSTYPE ROBOT" + nl;
  out += "///RECTAN" + nl;
  out += "///RCONF 0,0,0,0,0,0,0,0" + nl;
  for (std::size_t i = 0; i < p.moves.size(); ++i) {
    const Move& m = p.moves[i];
    out += pos_label(i) + "=" + format_fixed(m.position.x(), 3) + "," +
           format_fixed(m.position.y(), 3) + "," + format_fixed(m.position.z(), 3) + "," +
           format_fixed(rad_to_deg(m.orientation.phi), 4) + "," +
           format_fixed(rad_to_deg(m.orientation.theta), 4) + "," +
           format_fixed(rad_to_deg(m.orientation.psi), 4) + nl;
  }
  out += "//INST" + nl;
  out += "///DATE " + inform_date(p.header.created) + nl;
  out += "///COMM SKILLPATH FLAVORED SUBSET" + nl;
  out += "///ATTR SC,RW" + nl;
  out += "///GROUP1 RB1" + nl;
  out += "NOP" + nl;
  if (p.header.forced) out += "'EMITTED WITHOUT APPROVAL" + nl;
  for (std::size_t i = 0; i < p.moves.size(); ++i) {
    out += "MOVL " + pos_label(i) + " V=" + std::to_string(speed_fields[i]) + nl;
  }
  out += "END" + nl;
  return out;
}

}  // namespace skillpath

#endif  // SKILLPATH_EMIT_HPP_
