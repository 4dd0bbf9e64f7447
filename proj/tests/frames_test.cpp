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

#include "skillpath/frames.hpp"

#include <random>
#include <string>

#include "gtest/gtest.h"

namespace skillpath {
namespace {

RigidTransform RandomTransform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-kPi, kPi), x(-1000.0, 1000.0);
  return RigidTransform{euler_zyx_to_matrix({a(rng), a(rng) / 2, a(rng)}),
                        Vec3(x(rng), x(rng), x(rng))};
}

// Eq. chain E <- R <- F <- S with the given links.
FrameGraph Chain(const RigidTransform& er, const RigidTransform& rf, const RigidTransform& fs) {
  return FrameGraph::Builder()
      .add_default_frames()
      .add_edge("E", "R", er)
      .add_edge("R", "F", rf)
      .add_edge("F", "S", fs)
      .build();
}

TEST(FramesTest, ResolveSelfIsIdentity) {
  const FrameGraph g = FrameGraph::Builder().add_default_frames().build();
  EXPECT_EQ(g.resolve("F", "F").homogeneous(), Eigen::Matrix4d::Identity());
}

TEST(FramesTest, IdentityLinksResolveToIdentity) {
  const auto id = RigidTransform::identity();
  EXPECT_LT(transform_distance(Chain(id, id, id).resolve("E", "S"), id), 1e-15);
}

TEST(FramesTest, PureTranslationsAddUp) {
  const FrameGraph g = Chain(RigidTransform::translate(0, 0, 100), RigidTransform::translate(500, 0, 0),
                             RigidTransform::translate(0, 200, 0));
  const RigidTransform t = g.resolve("E", "S");
  EXPECT_EQ(t.translation, Vec3(500, 200, 100));
  EXPECT_EQ(t.rotation.matrix(), Eigen::Matrix3d::Identity());
  EXPECT_EQ(g.resolve("S", "E").translation, Vec3(-500, -200, -100));
}

TEST(FramesTest, ResolveMatchesDirectComposition) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform a = RandomTransform(rng), b = RandomTransform(rng), c = RandomTransform(rng);
    const FrameGraph g = Chain(a, b, c);
    const Eigen::Matrix4d oracle = a.homogeneous() * b.homogeneous() * c.homogeneous();
    EXPECT_LT((g.resolve("E", "S").homogeneous() - oracle).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((g.resolve("S", "E").homogeneous() - oracle.inverse()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FramesTest, InverseAndTrianglePropertiesOnRandomTrees) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    FrameGraph::Builder b;
    const int n = 2 + static_cast<int>(rng() % 7);
    for (int k = 0; k < n; ++k) b.add_frame("f" + std::to_string(k));
    for (int k = 1; k < n; ++k) {
      const int parent = static_cast<int>(rng() % static_cast<unsigned>(k));
      // Random edge direction exercises both stored and inverted hops.
      if (rng() % 2) {
        b.add_edge("f" + std::to_string(parent), "f" + std::to_string(k), RandomTransform(rng));
      } else {
        b.add_edge("f" + std::to_string(k), "f" + std::to_string(parent), RandomTransform(rng));
      }
    }
    const FrameGraph g = b.build();
    for (int i = 0; i < 10; ++i) {
      const std::string x = "f" + std::to_string(rng() % n), y = "f" + std::to_string(rng() % n),
                        z = "f" + std::to_string(rng() % n);
      EXPECT_LT(transform_distance(g.resolve(x, y) * g.resolve(y, x), RigidTransform::identity()),
                1e-9);
      EXPECT_LT(transform_distance(g.resolve(x, z), g.resolve(x, y) * g.resolve(y, z)), 1e-9);
    }
  }
}

TEST(FramesTest, MapPoseRoundTrip) {
  std::mt19937_64 rng(4);
  const FrameGraph g = Chain(RandomTransform(rng), RandomTransform(rng), RandomTransform(rng));
  const RigidTransform pose = RandomTransform(rng);
  const RigidTransform there = g.map_pose(pose, "S", "E");
  EXPECT_LT(transform_distance(g.map_pose(there, "E", "S"), pose), 1e-9);
  // A point known in S lands where resolve(E, S) sends it.
  EXPECT_LT((there.translation - g.resolve("E", "S").apply(pose.translation)).norm(), 1e-9);
}

TEST(FramesTest, MapPoseUnderPureTranslation) {
  const FrameGraph g = FrameGraph::Builder()
                           .add_default_frames()
                           .add_edge("R", "F", RigidTransform::translate(10, 20, 30))
                           .build();
  const RigidTransform pose{euler_zyx_to_matrix({0.3, 0.2, 0.1}), Vec3(1, 2, 3)};
  const RigidTransform m = g.map_pose(pose, "F", "R");
  EXPECT_EQ(m.translation, Vec3(11, 22, 33));
  EXPECT_EQ(m.rotation.matrix(), pose.rotation.matrix());
}

TEST(FramesTest, DisconnectedFramesAreUnresolvable) {
  const FrameGraph g = load_calibration(R"({"version": 1, "edges": []})");
  EXPECT_EQ(g.frames().size(), 4u);
  try {
    g.resolve("E", "S");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnresolvableFrames);
  }
  EXPECT_THROW(g.resolve("F", "nowhere"), Error);
}

TEST(FramesTest, BuilderRejectsDuplicatesCyclesAndUnknowns) {
  auto b = FrameGraph::Builder().add_default_frames();
  b.add_edge("E", "R", RigidTransform::identity());
  EXPECT_THROW(b.add_edge("E", "R", RigidTransform::identity()), Error);
  b.add_edge("R", "F", RigidTransform::identity());
  EXPECT_THROW(b.add_edge("F", "E", RigidTransform::identity()), Error);  // cycle
  EXPECT_THROW(b.add_edge("F", "F", RigidTransform::identity()), Error);
  EXPECT_THROW(b.add_edge("F", "Q", RigidTransform::identity()), Error);
  EXPECT_THROW(b.add_frame("F"), Error);
}

TEST(FramesTest, LoadCalibrationComposesDeclaredEdges) {
  const FrameGraph g = load_calibration(R"({
    "version": 1,
    "edges": [
      {"from": "E", "to": "R", "xyz_mm": [0, 0, 100], "fixed_xyz_deg": [0, 0, 90]},
      {"from": "R", "to": "F", "xyz_mm": [500, 0, 0], "fixed_xyz_deg": [180, 0, 0]},
      {"from": "F", "to": "S", "xyz_mm": [0, 200, 0], "fixed_xyz_deg": [10, 20, 30]}
    ]})");
  auto t = [](double x, double y, double z, double a, double b, double c) {
    return RigidTransform{fixed_xyz_to_matrix({deg_to_rad(a), deg_to_rad(b), deg_to_rad(c)}),
                          Vec3(x, y, z)};
  };
  const RigidTransform oracle =
      compose(compose(t(0, 0, 100, 0, 0, 90), t(500, 0, 0, 180, 0, 0)), t(0, 200, 0, 10, 20, 30));
  EXPECT_LT(transform_distance(g.resolve("E", "S"), oracle), 1e-9);
}

TEST(FramesTest, LoadCalibrationErrors) {
  auto kind_of = [](const char* doc) {
    try {
      load_calibration(doc, "cal.json");
    } catch (const Error& e) {
      return std::make_pair(e.kind(), std::string(e.what()));
    }
    return std::make_pair(ErrorKind::kIo, std::string("no error"));
  };
  const auto dup = kind_of(R"({"version": 1, "edges": [
      {"from": "E", "to": "R", "xyz_mm": [0, 0, 0], "fixed_xyz_deg": [0, 0, 0]},
      {"from": "E", "to": "R", "xyz_mm": [0, 0, 0], "fixed_xyz_deg": [0, 0, 0]}]})");
  EXPECT_EQ(dup.first, ErrorKind::kConfiguration);
  EXPECT_NE(dup.second.find("cal.json.edges[1]"), std::string::npos) << dup.second;
  EXPECT_NE(dup.second.find("duplicate"), std::string::npos) << dup.second;

  EXPECT_EQ(kind_of(R"({"version": 1, "edges": [
      {"from": "E", "to": "X", "xyz_mm": [0, 0, 0], "fixed_xyz_deg": [0, 0, 0]}]})").first,
            ErrorKind::kConfiguration);
  const auto unknown = kind_of(R"({"version": 1, "edges": [], "extra": 1})");
  EXPECT_NE(unknown.second.find("unknown key 'extra'"), std::string::npos) << unknown.second;
  const auto syntax = kind_of("{\"version\": 1,\n \"edges\": [}");
  EXPECT_EQ(syntax.first, ErrorKind::kParse);
  EXPECT_NE(syntax.second.find("line 2"), std::string::npos) << syntax.second;
  EXPECT_EQ(kind_of(R"({"version": 2})").first, ErrorKind::kParse);
  EXPECT_EQ(kind_of(R"({"version": 1, "edges": [
      {"from": "E", "to": "R", "xyz_mm": [0, 0, 0]}]})").first,
            ErrorKind::kParse);
}

TEST(FramesTest, MatrixRotationsFollowTheRepairPolicy) {
  const std::string repaired = R"({"version": 1, "edges": [{"from": "R", "to": "S",
      "xyz_mm": [0, 0, 0], "rotation_matrix": [[1, 5e-7, 0], [0, 1, 0], [0, 0, 1]]}]})";
  const FrameGraph g = load_calibration(repaired);
  EXPECT_LT(orthonormality_defect(g.resolve("R", "S").rotation.matrix()), 1e-12);

  const std::string rejected = R"({"version": 1, "edges": [{"from": "R", "to": "S",
      "xyz_mm": [0, 0, 0], "rotation_matrix": [[1, 1e-3, 0], [0, 1, 0], [0, 0, 1]]}]})";
  try {
    load_calibration(rejected);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
    EXPECT_NE(std::string(e.what()).find("rotation_matrix"), std::string::npos);
  }
}

TEST(FramesTest, CustomFrames) {
  const FrameGraph g = load_calibration(R"({"version": 1, "frames": ["F", "S", "R", "E", "J1"],
      "edges": [{"from": "F", "to": "J1", "xyz_mm": [1, 2, 3], "fixed_xyz_deg": [0, 0, 0]}]})");
  EXPECT_TRUE(g.has_frame("J1"));
  EXPECT_EQ(g.resolve("F", "J1").translation, Vec3(1, 2, 3));
}

TEST(FramesTest, ShippedCalibrationsLoad) {
  for (const char* name : {"rectangle", "glass", "unreachable"}) {
    const FrameGraph g =
        load_calibration_file(std::string(SKILLPATH_DATA_DIR) + "/" + name + "/calibration.json");
    EXPECT_NO_THROW(g.resolve("R", "S")) << name;
    EXPECT_NO_THROW(g.resolve("R", "F")) << name;
  }
}

}  // namespace
}  // namespace skillpath
