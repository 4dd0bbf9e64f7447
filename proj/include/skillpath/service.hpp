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

// Review service behind the HTTP API. Transport-independent so it can be
// tested without sockets; http_server.hpp maps routes onto it.
//
// Readers take an immutable snapshot; mutations go through one writer,
// check the optimistic revision token, persist the session file and only
// then publish the new snapshot and answer.

#ifndef SKILLPATH_SERVICE_HPP_
#define SKILLPATH_SERVICE_HPP_

#include <charconv>
#include <ctime>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "skillpath/commands.hpp"
#include "skillpath/config.hpp"
#include "skillpath/json_util.hpp"
#include "skillpath/kinematics.hpp"
#include "skillpath/session.hpp"

namespace skillpath {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline Response error_response(int status, std::string_view reason, std::string_view message) {
  OrderedJson j;
  j["error"] = std::string(message);
  j["reason"] = std::string(reason);
  return Response{status, "application/json", j.dump() + "\n"};
}

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// The GET /api/path document: the session without the original waypoints.
inline std::string path_view(const SessionState& s) {
  OrderedJson j;
  j["format"] = "skillpath-path-view";
  j["version"] = 1;
  j["revision"] = s.revision;
  j["approved"] = s.approved;
  j["created"] = s.created;
  j["source_digest"] = s.source_digest;
  j["frame"] = s.path.frame;
  j["waypoints"] = path_json(s.path);
  j["edit_count"] = s.edits.size();
  j["report"] = report_json(s.report);
  return j.dump() + "\n";
}

class SessionService {
 public:
  using Clock = std::function<std::string()>;

  SessionService(std::filesystem::path session_file, ArmModel arm, ValidationPolicy policy,
                 EmitOptions emit, Clock clock = utc_now)
      : file_(std::move(session_file)),
        arm_(std::move(arm)),
        policy_(policy),
        emit_(std::move(emit)),
        clock_(std::move(clock)) {
    SessionState s = load_session_file(file_);
    s.report = validate(arm_, s.path, policy_);
    publish(std::make_shared<const SessionState>(std::move(s)));
  }

  static SessionService from_config(const ProjectConfig& c, const std::filesystem::path& session) {
    return SessionService(session, load_arm_model_file(c.arm), c.validation, c.emit);
  }

  SessionService(SessionService&& o) noexcept
      : file_(std::move(o.file_)),
        arm_(std::move(o.arm_)),
        policy_(o.policy_),
        emit_(std::move(o.emit_)),
        clock_(std::move(o.clock_)),
        snapshot_(std::move(o.snapshot_)) {}

  std::shared_ptr<const SessionState> snapshot() const { return std::atomic_load(&snapshot_); }

  Response get_path() const { return Response{200, "application/json", path_view(*snapshot())}; }

  /// Body: {"revision": n, "orientation_fixed_xyz_deg"?: [3], "speed_mm_s"?: v, "author"?: s}
  Response patch_waypoint(std::string_view index_text, std::string_view body) {
    EditRecord rec;
    rec.kind = "edit";
    std::uint64_t revision = 0;
    try {
      const Json j = parse_request(body, {"revision", "orientation_fixed_xyz_deg", "speed_mm_s", "author"});
      revision = read_revision(j);
      if (j.contains("orientation_fixed_xyz_deg")) {
        rec.orientation_fixed_xyz_deg =
            json_field::vec3(j["orientation_fixed_xyz_deg"], "orientation_fixed_xyz_deg");
      }
      if (j.contains("speed_mm_s")) {
        const double v = json_field::number(j["speed_mm_s"], "speed_mm_s");
        if (!(v > 0.0)) return error_response(400, "invalid-field", "speed_mm_s must be positive");
        rec.speed_mm_s = v;
      }
      if (!rec.orientation_fixed_xyz_deg && !rec.speed_mm_s) {
        return error_response(400, "empty-edit",
                              "an edit needs orientation_fixed_xyz_deg and/or speed_mm_s");
      }
      rec.author = author_of(j);
    } catch (const Error& e) {
      return bad_request(e);
    }
    return mutate(index_text, revision, [&](SessionState& s, std::size_t i) {
      Waypoint& w = s.path.waypoints[i];
      if (rec.orientation_fixed_xyz_deg) w.orientation = from_fixed_xyz_deg(*rec.orientation_fixed_xyz_deg);
      if (rec.speed_mm_s) w.speed = *rec.speed_mm_s;
      rec.index = i;
      rec.timestamp = clock_();
      s.edits.push_back(rec);
      return i;
    });
  }

  /// Body: {"revision": n, "author"?: s}
  Response revert(std::string_view index_text, std::string_view body) {
    std::uint64_t revision = 0;
    std::string author;
    try {
      const Json j = parse_request(body, {"revision", "author"});
      revision = read_revision(j);
      author = author_of(j);
    } catch (const Error& e) {
      return bad_request(e);
    }
    return mutate(index_text, revision, [&](SessionState& s, std::size_t i) {
      s.path.waypoints[i] = s.original.waypoints[i];
      EditRecord rec;
      rec.index = i;
      rec.kind = "revert";
      rec.author = author;
      rec.timestamp = clock_();
      s.edits.push_back(std::move(rec));
      return i;
    });
  }

  /// Body: {"revision": n}
  Response approve(std::string_view body) {
    std::uint64_t revision = 0;
    try {
      revision = read_revision(parse_request(body, {"revision", "author"}));
    } catch (const Error& e) {
      return bad_request(e);
    }
    std::lock_guard<std::mutex> lock(writer_);
    const auto cur = snapshot();
    if (revision != cur->revision) return stale(cur->revision);
    if (!cur->report.pass()) {
      return error_response(409, "validation-failed",
                            std::to_string(cur->report.violations.size()) +
                                " validation violation(s); fix them before approving");
    }
    SessionState next = *cur;
    next.approved = true;
    ++next.revision;
    return commit(std::move(next));
  }

  /// The exact bytes `skillpath emit` would write for this session.
  Response program(std::string_view backend_name) const {
    Backend backend;
    try {
      backend = parse_backend(backend_name.empty() ? "portable" : backend_name);
    } catch (const Error& e) {
      return error_response(400, "unknown-backend", e.what());
    }
    const auto cur = snapshot();
    if (!cur->approved || !cur->report.pass()) {
      return error_response(409, "not-approved", "the session must be approved before a program exists");
    }
    try {
      return Response{200,
                      backend == Backend::kPortable ? "application/json" : "text/plain; charset=utf-8",
                      render_program(*cur, emit_, backend, false)};
    } catch (const Error& e) {
      return error_response(422, "emit-failed", e.what());
    }
  }

 private:
  static Json parse_request(std::string_view body, std::initializer_list<std::string_view> keys) {
    const Json j = parse_json_text(body.empty() ? std::string_view("{}") : body, "request body");
    json_field::require_object(j, "request body");
    json_field::reject_unknown(j, "request body", keys);
    return j;
  }

  static std::uint64_t read_revision(const Json& j) {
    if (!j.contains("revision")) json_field::fail("request body", "missing revision token");
    if (!j["revision"].is_number_unsigned()) {
      json_field::fail("revision", "expected a non-negative integer");
    }
    return j["revision"].get<std::uint64_t>();
  }

  static std::string author_of(const Json& j) {
    return j.contains("author") ? json_field::string(j["author"], "author") : "operator";
  }

  static Response bad_request(const Error& e) {
    const bool syntax = std::string_view(e.what()).find("malformed JSON") != std::string_view::npos;
    return error_response(400, syntax ? "malformed-json" : "invalid-field", e.what());
  }

  static Response stale(std::uint64_t current) {
    return error_response(409, "stale-revision",
                          "revision token is stale; current revision is " + std::to_string(current));
  }

  /// Applies an edit to waypoint `index_text` under the writer lock.
  template <typename Apply>
  Response mutate(std::string_view index_text, std::uint64_t revision, Apply&& apply) {
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(index_text.data(), index_text.data() + index_text.size(), index);
    if (ec != std::errc() || ptr != index_text.data() + index_text.size()) {
      return error_response(400, "invalid-index", "waypoint index must be a non-negative integer");
    }
    std::lock_guard<std::mutex> lock(writer_);
    const auto cur = snapshot();
    if (index >= cur->path.waypoints.size()) {
      return error_response(404, "no-such-waypoint",
                            "waypoint " + std::to_string(index) + " does not exist (" +
                                std::to_string(cur->path.waypoints.size()) + " waypoints)");
    }
    if (revision != cur->revision) return stale(cur->revision);
    SessionState next = *cur;
    const std::size_t first_changed = apply(next, index);
    next.approved = false;
    ++next.revision;
    next.report = validate_from(arm_, next.path, policy_, cur->report, first_changed);
    return commit(std::move(next));
  }

  Response commit(SessionState next) {
    try {
      write_file_atomic(file_, serialize_session(next));
    } catch (const std::exception& e) {
      return error_response(500, "persist-failed", e.what());
    }
    auto snap = std::make_shared<const SessionState>(std::move(next));
    publish(snap);
    return Response{200, "application/json", path_view(*snap)};
  }

  void publish(std::shared_ptr<const SessionState> s) { std::atomic_store(&snapshot_, std::move(s)); }

  std::filesystem::path file_;
  ArmModel arm_;
  ValidationPolicy policy_;
  EmitOptions emit_;
  Clock clock_;
  std::shared_ptr<const SessionState> snapshot_;
  std::mutex writer_;
};

}  // namespace skillpath

#endif  // SKILLPATH_SERVICE_HPP_
