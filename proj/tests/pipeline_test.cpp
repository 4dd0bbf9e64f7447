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

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "gtest/gtest.h"
#include "skillpath/commands.hpp"
#include "skillpath/http_server.hpp"
#include "skillpath/service.hpp"
// After Eigen: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include "httplib.h"

namespace skillpath {
namespace {

namespace fs = std::filesystem;

const fs::path kData = SKILLPATH_DATA_DIR;

// A scratch copy of a data/ fixture. The arm model stays in data/.
class Project {
 public:
  Project(const std::string& fixture, const std::string& tag) {
    dir_ = fs::temp_directory_path() / ("skillpath_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    fs::copy_file(kData / fixture / "calibration.json", dir_ / "calibration.json");
    Json cfg = parse_json_text(read_file(kData / fixture / "project.json"), "project");
    cfg["arm"] = (kData / "arms" / "motoman_hp6_nominal.json").string();
    config_ = cfg;
    Save();
  }
  ~Project() { fs::remove_all(dir_); }

  Json& config() { return config_; }
  void Save() { write_file_atomic(ConfigPath(), config_.dump(2) + "\n"); }
  fs::path ConfigPath() const { return dir_ / "project.json"; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
  Json config_;
};

struct CmdResult {
  int code;
  std::string out, err;
};

template <typename F>
CmdResult Capture(F&& f) {
  std::ostringstream out, err;
  const int code = f(out, err);
  return CmdResult{code, out.str(), err.str()};
}

CmdResult Synth(const Project& p, std::uint64_t seed = 7) {
  return Capture([&](auto& o, auto& e) { return cmd_synth(p.ConfigPath(), seed, o, e); });
}
CmdResult Fuse(const Project& p) {
  return Capture([&](auto& o, auto& e) { return cmd_fuse(p.ConfigPath(), std::nullopt, o, e); });
}
CmdResult Emit(const Project& p, Backend b, const fs::path& out, bool force = false) {
  return Capture([&](auto& o, auto& e) {
    return cmd_emit(p.ConfigPath(), p / "session.json", b, out, force, o, e);
  });
}

std::string FixedClock() { return "2026-01-15T12:00:00Z"; }

SessionService Service(const Project& p) {
  const ProjectConfig c = load_project_config(p.ConfigPath());
  return SessionService(p / "session.json", load_arm_model_file(c.arm), c.validation, c.emit,
                        FixedClock);
}

Json Body(const Response& r) { return parse_json_text(r.body, "response"); }

std::string Rev(std::uint64_t r, const std::string& extra = "") {
  return "{\"revision\": " + std::to_string(r) + (extra.empty() ? "" : ", " + extra) + "}";
}

TEST(CommandsTest, RectangleFusesOntoTheNominalPath) {
  Project p("rectangle", "rect_fuse");
  ASSERT_EQ(Synth(p).code, kExitOk);
  const CmdResult r = Fuse(p);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("validation passed"), std::string::npos);

  const ProjectConfig c = load_project_config(p.ConfigPath());
  const SessionState s = load_session_file(c.session);
  EXPECT_EQ(s.created, "2026-01-15T09:30:00Z");
  EXPECT_EQ(s.revision, 0u);
  EXPECT_FALSE(s.approved);
  EXPECT_EQ(s.path.frame, "R");
  EXPECT_TRUE(s.report.pass());

  // Same inputs through the library: path-frame waypoints sit exactly on the
  // rectangle x in {100, 500}, y in {-150, 150}, z = 0.
  const FrameGraph g = load_calibration_file(c.calibration);
  const FusionResult fr =
      run_fusion(load_nominal_path_file(c.nominal_path), {load_trace_file(c.traces[0])}, g,
                 load_arm_model_file(c.arm), c.fusion, c.validation);
  for (const Waypoint& w : fr.fused.waypoints) {
    const Vec3& q = w.position;
    EXPECT_EQ(q.z(), 0.0);
    EXPECT_TRUE(q.x() == 100.0 || q.x() == 500.0 || q.y() == -150.0 || q.y() == 150.0) << q.transpose();
  }
  const RigidTransform rf = g.resolve("R", "F");
  ASSERT_EQ(s.path.waypoints.size(), fr.robot_path.waypoints.size());
  std::size_t matched = 0;
  for (std::size_t k = 0; k < s.path.waypoints.size(); ++k) {
    EXPECT_EQ(s.path.waypoints[k].position, fr.robot_path.waypoints[k].position);
    for (const Waypoint& w : fr.fused.waypoints) {
      if (w.s == s.path.waypoints[k].s) {
        EXPECT_EQ(s.path.waypoints[k].position, rf.apply(w.position));
        ++matched;
      }
    }
  }
  EXPECT_EQ(matched, s.path.waypoints.size());
}

TEST(CommandsTest, UnreachableCellFailsValidation) {
  Project rect("rectangle", "unreach_src");
  ASSERT_EQ(Synth(rect).code, kExitOk);
  Project p("unreachable", "unreach");
  p.config()["nominal_path"] = (rect / "rectangle_path.json").string();
  p.config()["traces"] = Json::array({(rect / "trace.csv").string()});
  p.Save();
  const CmdResult r = Fuse(p);
  EXPECT_EQ(r.code, kExitValidationFailed);
  EXPECT_NE(r.err.find("[unreachable]"), std::string::npos) << r.err;
  EXPECT_TRUE(fs::exists(p / "session.json"));
  const SessionState s = load_session_file(p / "session.json");
  EXPECT_FALSE(s.report.pass());
}

TEST(CommandsTest, MissingInputIsAHardErrorNamingTheStage) {
  Project p("rectangle", "missing");
  const CmdResult r = Fuse(p);  // no synth: neither the path nor the trace exists
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("config:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("rectangle_path.json"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(p / "session.json"));
}

TEST(CommandsTest, MalformedTraceNamesTheLine) {
  Project p("rectangle", "badtrace");
  ASSERT_EQ(Synth(p).code, kExitOk);
  std::string t = read_file(p / "trace.csv");
  const auto third = t.find('\n', t.find('\n', t.find('\n') + 1) + 1);
  t.insert(third + 1, "0.5,not-a-number,0,0,0,0,0\n");
  write_file_atomic(p / "trace.csv", t);
  const CmdResult r = Fuse(p);
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("trace:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("trace.csv:4:"), std::string::npos) << r.err;
}

TEST(CommandsTest, SynthIsDeterministicPerSeed) {
  Project a("glass", "synth_a"), b("glass", "synth_b");
  ASSERT_EQ(Synth(a).code, kExitOk);
  ASSERT_EQ(Synth(b).code, kExitOk);
  EXPECT_EQ(read_file(a / "trace.csv"), read_file(b / "trace.csv"));
  EXPECT_EQ(read_file(a / "ground_truth.json"), read_file(b / "ground_truth.json"));
  ASSERT_EQ(Synth(b, 8).code, kExitOk);
  EXPECT_NE(read_file(a / "trace.csv"), read_file(b / "trace.csv"));
}

TEST(CommandsTest, EmitRequiresApproval) {
  Project p("rectangle", "emit_gate");
  ASSERT_EQ(Synth(p).code, kExitOk);
  ASSERT_EQ(Fuse(p).code, kExitOk);
  const CmdResult refused = Emit(p, Backend::kPortable, p / "job.json");
  EXPECT_EQ(refused.code, kExitError);
  EXPECT_NE(refused.err.find("not approved"), std::string::npos) << refused.err;
  EXPECT_FALSE(fs::exists(p / "job.json"));

  const CmdResult forced = Emit(p, Backend::kInform, p / "job.jbi", true);
  ASSERT_EQ(forced.code, kExitOk) << forced.err;
  EXPECT_NE(forced.err.find("warning"), std::string::npos);
  const std::string jbi = read_file(p / "job.jbi");
  EXPECT_NE(jbi.find("//NAME RECT_GLUE\r\n"), std::string::npos);
  EXPECT_NE(jbi.find("'EMITTED WITHOUT APPROVAL"), std::string::npos);
}

TEST(CommandsTest, ApprovedSessionEmitsTheServicePreviewBytes) {
  Project p("rectangle", "emit_ok");
  ASSERT_EQ(Synth(p).code, kExitOk);
  ASSERT_EQ(Fuse(p).code, kExitOk);
  SessionService svc = Service(p);
  EXPECT_EQ(svc.program("portable").status, 409);
  ASSERT_EQ(svc.approve(Rev(0)).status, 200);
  for (const auto& [name, backend] :
       {std::pair{"portable", Backend::kPortable}, std::pair{"inform", Backend::kInform}}) {
    const fs::path out = p / (std::string("job.") + name);
    const CmdResult r = Emit(p, backend, out);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const Response preview = svc.program(name);
    ASSERT_EQ(preview.status, 200);
    EXPECT_EQ(read_file(out), preview.body);
  }
  const RobotProgram prog = parse_portable(read_file(p / "job.portable"));
  EXPECT_FALSE(prog.header.forced);
  EXPECT_EQ(prog.header.tool_id, "nozzle1");
  EXPECT_EQ(prog.header.created, "2026-01-15T09:30:00Z");
  EXPECT_EQ(prog.header.source_digest, path_digest(load_session_file(p / "session.json").path));
}

TEST(CommandsTest, ValidateRewritesTheReport) {
  Project p("rectangle", "revalidate");
  ASSERT_EQ(Synth(p).code, kExitOk);
  ASSERT_EQ(Fuse(p).code, kExitOk);
  SessionState s = load_session_file(p / "session.json");
  s.path.waypoints[3].speed = 4000.0;
  write_file_atomic(p / "session.json", serialize_session(s));
  const CmdResult r = Capture(
      [&](auto& o, auto& e) { return cmd_validate(p.ConfigPath(), p / "session.json", o, e); });
  EXPECT_EQ(r.code, kExitValidationFailed);
  EXPECT_NE(r.err.find("waypoint 3 [cartesian-speed]"), std::string::npos) << r.err;
  EXPECT_TRUE(load_session_file(p / "session.json").report.has_violation_at(3));
}

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    project_ = new Project("rectangle", "service");
    ASSERT_EQ(Synth(*project_).code, kExitOk);
    ASSERT_EQ(Fuse(*project_).code, kExitOk);
    pristine_ = new std::string(read_file(*project_ / "session.json"));
  }
  static void TearDownTestSuite() {
    delete project_;
    delete pristine_;
  }
  void SetUp() override { write_file_atomic(*project_ / "session.json", *pristine_); }

  static SessionState OnDisk() { return load_session_file(*project_ / "session.json"); }

  static Project* project_;
  static std::string* pristine_;
};
Project* ServiceTest::project_ = nullptr;
std::string* ServiceTest::pristine_ = nullptr;

TEST_F(ServiceTest, EditPersistsBeforeResponding) {
  SessionService svc = Service(*project_);
  const Response r =
      svc.patch_waypoint("2", Rev(0, R"("speed_mm_s": 42.5, "orientation_fixed_xyz_deg": [180, 0, 10], "author": "ana")"));
  ASSERT_EQ(r.status, 200) << r.body;
  const Json view = Body(r);
  EXPECT_EQ(view["revision"], 1);
  EXPECT_EQ(view["approved"], false);
  EXPECT_EQ(view["edit_count"], 1);
  EXPECT_EQ(view["waypoints"][2]["speed_mm_s"], 42.5);

  const SessionState disk = OnDisk();
  EXPECT_EQ(disk.revision, 1u);
  EXPECT_EQ(disk.path.waypoints[2].speed, 42.5);
  ASSERT_EQ(disk.edits.size(), 1u);
  EXPECT_EQ(disk.edits[0].author, "ana");
  EXPECT_EQ(disk.edits[0].timestamp, "2026-01-15T12:00:00Z");
  EXPECT_LT(rad_to_deg(geodesic_angle(disk.path.waypoints[2].orientation,
                                      from_fixed_xyz_deg(Vec3(180, 0, 10)))),
            1e-9);
  EXPECT_EQ(Body(svc.get_path()), view);
}

TEST_F(ServiceTest, StaleRevisionIsRejected) {
  SessionService svc = Service(*project_);
  ASSERT_EQ(svc.patch_waypoint("1", Rev(0, R"("speed_mm_s": 50)")).status, 200);
  const Response r = svc.patch_waypoint("1", Rev(0, R"("speed_mm_s": 60)"));
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(Body(r)["reason"], "stale-revision");
  EXPECT_EQ(OnDisk().path.waypoints[1].speed, 50.0);
  EXPECT_EQ(svc.approve(Rev(0)).status, 409);
}

TEST_F(ServiceTest, RequestErrors) {
  SessionService svc = Service(*project_);
  auto reason = [](const Response& r) { return Body(r)["reason"].get<std::string>(); };
  const Response missing = svc.patch_waypoint("100000", Rev(0, R"("speed_mm_s": 50)"));
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(reason(missing), "no-such-waypoint");
  // 404 wins over a stale token.
  EXPECT_EQ(svc.patch_waypoint("100000", Rev(9, R"("speed_mm_s": 50)")).status, 404);
  EXPECT_EQ(reason(svc.patch_waypoint("x1", Rev(0, R"("speed_mm_s": 50)"))), "invalid-index");
  EXPECT_EQ(reason(svc.patch_waypoint("-1", Rev(0, R"("speed_mm_s": 50)"))), "invalid-index");
  EXPECT_EQ(reason(svc.patch_waypoint("1", "{not json")), "malformed-json");
  EXPECT_EQ(reason(svc.patch_waypoint("1", Rev(0))), "empty-edit");
  EXPECT_EQ(reason(svc.patch_waypoint("1", Rev(0, R"("speed_mm_s": -3)"))), "invalid-field");
  EXPECT_EQ(reason(svc.patch_waypoint("1", Rev(0, R"("position_mm": [0, 0, 0])"))), "invalid-field");
  EXPECT_EQ(reason(svc.patch_waypoint("1", R"({"speed_mm_s": 50})")), "invalid-field");
  EXPECT_EQ(reason(svc.patch_waypoint("1", Rev(0, R"("orientation_fixed_xyz_deg": [1, 2])"))),
            "invalid-field");
  EXPECT_EQ(reason(svc.program("kuka")), "unknown-backend");
  EXPECT_EQ(svc.snapshot()->revision, 0u);
  EXPECT_EQ(read_file(*project_ / "session.json"), *pristine_);
}

TEST_F(ServiceTest, RevertRestoresTheFusedWaypoint) {
  SessionService svc = Service(*project_);
  const Waypoint original = svc.snapshot()->path.waypoints[4];
  ASSERT_EQ(svc.patch_waypoint("4", Rev(0, R"("speed_mm_s": 11)")).status, 200);
  const Response r = svc.revert("4", Rev(1, R"("author": "bo")"));
  ASSERT_EQ(r.status, 200);
  const SessionState disk = OnDisk();
  EXPECT_EQ(disk.revision, 2u);
  EXPECT_EQ(disk.path.waypoints[4].speed, original.speed);
  EXPECT_EQ(disk.path.waypoints[4].position, original.position);
  ASSERT_EQ(disk.edits.size(), 2u);
  EXPECT_EQ(disk.edits[1].kind, "revert");
}

TEST_F(ServiceTest, ApprovalNeedsAPassingReportAndEditsClearIt) {
  SessionService svc = Service(*project_);
  ASSERT_EQ(svc.patch_waypoint("3", Rev(0, R"("speed_mm_s": 5000)")).status, 200);
  EXPECT_EQ(svc.snapshot()->report.has_violation_at(3), true);
  const Response refused = svc.approve(Rev(1));
  EXPECT_EQ(refused.status, 409);
  EXPECT_EQ(Body(refused)["reason"], "validation-failed");
  EXPECT_EQ(Body(svc.program("inform"))["reason"], "not-approved");

  ASSERT_EQ(svc.revert("3", Rev(1)).status, 200);
  ASSERT_EQ(svc.approve(Rev(2)).status, 200);
  EXPECT_TRUE(OnDisk().approved);
  EXPECT_EQ(svc.program("inform").status, 200);
  EXPECT_EQ(svc.program("").content_type, "application/json");

  ASSERT_EQ(svc.patch_waypoint("0", Rev(3, R"("speed_mm_s": 90)")).status, 200);
  EXPECT_FALSE(svc.snapshot()->approved);
  EXPECT_EQ(svc.program("portable").status, 409);
}

TEST_F(ServiceTest, IncrementalReportMatchesFullValidation) {
  SessionService svc = Service(*project_);
  ASSERT_EQ(svc.patch_waypoint("6", Rev(0, R"("orientation_fixed_xyz_deg": [150, 20, 0])")).status, 200);
  const auto s = svc.snapshot();
  const ValidationReport full =
      validate(load_arm_model_file(kData / "arms" / "motoman_hp6_nominal.json"), s->path);
  ASSERT_EQ(s->report.violations.size(), full.violations.size());
  for (std::size_t k = 0; k < full.violations.size(); ++k) {
    EXPECT_EQ(s->report.violations[k].message, full.violations[k].message);
  }
}

TEST_F(ServiceTest, FailedPersistLeavesStateUnchanged) {
  Project scratch("rectangle", "persist");
  fs::create_directories(scratch / "sub");
  fs::copy_file(*project_ / "session.json", scratch / "sub/session.json");
  const ProjectConfig c = load_project_config(project_->ConfigPath());
  SessionService svc(scratch / "sub/session.json", load_arm_model_file(c.arm), c.validation, c.emit,
                     FixedClock);
  fs::remove_all(scratch / "sub");
  const Response r = svc.patch_waypoint("1", Rev(0, R"("speed_mm_s": 50)"));
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(Body(r)["reason"], "persist-failed");
  EXPECT_EQ(svc.snapshot()->revision, 0u);
  EXPECT_EQ(svc.snapshot()->edits.size(), 0u);
}

TEST_F(ServiceTest, ReadersNeverSeeTornState) {
  SessionService svc = Service(*project_);
  std::atomic<bool> done{false};
  std::atomic<int> reads{0}, torn{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 3; ++t) {
    readers.emplace_back([&] {
      while (!done.load()) {
        const Json v = Body(svc.get_path());
        // Every mutation here is one edit and one revision.
        if (v["revision"] != v["edit_count"]) ++torn;
        ++reads;
      }
    });
  }
  for (std::uint64_t r = 0; r < 20; ++r) {
    const std::string body = Rev(r, "\"speed_mm_s\": " + std::to_string(60 + r));
    ASSERT_EQ(svc.patch_waypoint(std::to_string(r % 5), body).status, 200);
  }
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_GT(reads.load(), 0);
  EXPECT_EQ(torn.load(), 0);
  EXPECT_EQ(OnDisk().revision, 20u);
}

TEST_F(ServiceTest, HttpRoutes) {
  SessionService svc = Service(*project_);
  ReviewServer server(svc);
  const int port = server.bind(BindAddress{"127.0.0.1", 0});
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto get = cli.Get("/api/path");
  ASSERT_TRUE(get);
  EXPECT_EQ(get->status, 200);
  EXPECT_EQ(parse_json_text(get->body, "view")["format"], "skillpath-path-view");

  auto patch = cli.Patch("/api/waypoints/1", Rev(0, R"("speed_mm_s": 70)"), "application/json");
  ASSERT_TRUE(patch);
  EXPECT_EQ(patch->status, 200);
  auto stale = cli.Patch("/api/waypoints/1", Rev(0, R"("speed_mm_s": 71)"), "application/json");
  ASSERT_TRUE(stale);
  EXPECT_EQ(stale->status, 409);
  auto program = cli.Get("/api/program?backend=inform");
  ASSERT_TRUE(program);
  EXPECT_EQ(program->status, 409);
  auto approve = cli.Post("/api/approve", Rev(1), "application/json");
  ASSERT_TRUE(approve);
  EXPECT_EQ(approve->status, 200);
  program = cli.Get("/api/program?backend=inform");
  ASSERT_TRUE(program);
  EXPECT_EQ(program->status, 200);
  EXPECT_EQ(program->body, svc.program("inform").body);
  auto revert = cli.Post("/api/revert/1", Rev(2), "application/json");
  ASSERT_TRUE(revert);
  EXPECT_EQ(revert->status, 200);
  auto nothing = cli.Get("/api/nothing");
  ASSERT_TRUE(nothing);
  EXPECT_EQ(nothing->status, 404);
  EXPECT_EQ(parse_json_text(nothing->body, "error")["reason"], "no-such-route");

  server.stop();
  th.join();
}

TEST(BindTest, ParsesHostAndPort) {
  EXPECT_EQ(parse_bind("0.0.0.0:9000").host, "0.0.0.0");
  EXPECT_EQ(parse_bind("0.0.0.0:9000").port, 9000);
  EXPECT_EQ(parse_bind("9001").port, 9001);
  EXPECT_THROW(parse_bind("host:99999"), Error);
  EXPECT_THROW(parse_bind("host:"), Error);
}

int Cli(const std::string& args) {
  const std::string cmd = std::string(SKILLPATH_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, EndToEndAndExitCodes) {
  Project p("glass", "cli");
  const std::string cfg = "--config " + p.ConfigPath().string();
  EXPECT_EQ(Cli("synth " + cfg + " --seed 7"), 0);
  EXPECT_EQ(Cli("fuse " + cfg), 0);
  EXPECT_EQ(Cli("validate " + cfg), 0);
  EXPECT_EQ(Cli("emit " + cfg + " --backend inform --out " + (p / "a.jbi").string()), 1);
  EXPECT_EQ(Cli("emit " + cfg + " --backend inform --force --out " + (p / "a.jbi").string()), 0);
  EXPECT_EQ(Cli("emit " + cfg + " --backend cobol --force --out " + (p / "b.jbi").string()), 1);
  EXPECT_NE(Cli("fuse"), 0);
  EXPECT_EQ(Cli("fuse --config " + (p / "nope.json").string()), 1);
  EXPECT_NE(read_file(p / "a.jbi").find("//NAME GLASS_GLUE"), std::string::npos);
}

}  // namespace
}  // namespace skillpath
