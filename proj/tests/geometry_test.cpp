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

#include "skillpath/geometry.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"

namespace skillpath {
namespace {

// Independent reference: Eigen's axis-angle products.
Eigen::Matrix3d EigenZyx(double psi, double theta, double phi) {
  return (Eigen::AngleAxisd(psi, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(phi, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

double MaxAbs(const Eigen::Matrix3d& m) { return m.cwiseAbs().maxCoeff(); }

TEST(GeometryTest, QuarterTurnAboutZMapsXToY) {
  const RotationMatrix r = euler_zyx_to_matrix({kPi / 2, 0.0, 0.0});
  EXPECT_LT((r * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
}

TEST(GeometryTest, ZyxMatchesAxisAngleProduct) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const double psi = a(rng), theta = a(rng) / 2, phi = a(rng);
    EXPECT_LT(MaxAbs(euler_zyx_to_matrix({psi, theta, phi}).matrix() - EigenZyx(psi, theta, phi)),
              1e-14);
  }
}

TEST(GeometryTest, FixedXyzEqualsZyxWithReorderedAngles) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const double x = a(rng), y = a(rng), z = a(rng);
    // Extrinsic x then y then z: the matrix is Rz * Ry * Rx.
    const Eigen::Matrix3d extrinsic =
        axis_rotation_z(z) * axis_rotation_y(y) * axis_rotation_x(x);
    EXPECT_LT(MaxAbs(fixed_xyz_to_matrix({x, y, z}).matrix() - extrinsic), 1e-14);
    EXPECT_LT(MaxAbs(fixed_xyz_to_matrix({x, y, z}).matrix() -
                     euler_zyx_to_matrix({z, y, x}).matrix()),
              1e-12);
  }
}

TEST(GeometryTest, RoundTripAwayFromGimbalLock) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> a(-kPi + 1e-6, kPi);
  std::uniform_real_distribution<double> t(-kPi / 2 + 1e-3, kPi / 2 - 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const FixedXYZ f{a(rng), t(rng), a(rng)};
    const FixedXYZ g = matrix_to_fixed_xyz(fixed_xyz_to_matrix(f));
    EXPECT_NEAR(g.phi, f.phi, 1e-9);
    EXPECT_NEAR(g.theta, f.theta, 1e-9);
    EXPECT_NEAR(g.psi, f.psi, 1e-9);
  }
}

TEST(GeometryTest, GimbalLockPinsPhiAndKeepsMatrix) {
  for (double theta : {kPi / 2, -kPi / 2}) {
    const RotationMatrix r = fixed_xyz_to_matrix({0.7, theta, -0.4});
    const FixedXYZ f = matrix_to_fixed_xyz(r);
    EXPECT_EQ(f.phi, 0.0);
    EXPECT_NEAR(std::abs(f.theta), kPi / 2, 1e-7);
    EXPECT_LT(MaxAbs(fixed_xyz_to_matrix(f).matrix() - r.matrix()), 1e-9);
  }
}

TEST(GeometryTest, NormalizedIsIdempotent) {
  const FixedXYZ f = normalized(FixedXYZ{3.5, 2.0, -7.0});
  const FixedXYZ g = normalized(f);
  EXPECT_NEAR(f.phi, g.phi, 1e-12);
  EXPECT_NEAR(f.theta, g.theta, 1e-12);
  EXPECT_NEAR(f.psi, g.psi, 1e-12);
  EXPECT_LE(std::abs(f.theta), kPi / 2);
}

TEST(GeometryTest, NonFiniteAnglesAreRejected) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    euler_zyx_to_matrix({nan, 0.0, 0.0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidAngle);
  }
  EXPECT_THROW(fixed_xyz_to_matrix({0.0, std::numeric_limits<double>::infinity(), 0.0}), Error);
}

TEST(GeometryTest, NearRotationsAreRepairedFarOnesRejected) {
  const Eigen::Matrix3d r = EigenZyx(0.3, -0.2, 1.1);
  EXPECT_EQ(RotationMatrix::from_matrix(r).matrix(), r);

  Eigen::Matrix3d slightly = r;
  slightly(0, 1) += 3e-7;
  const RotationMatrix fixed = RotationMatrix::from_matrix(slightly);
  EXPECT_LT(orthonormality_defect(fixed.matrix()), 1e-12);
  EXPECT_LT(MaxAbs(fixed.matrix() - r), 1e-6);

  Eigen::Matrix3d bad = r;
  bad(1, 1) += 1e-3;
  try {
    RotationMatrix::from_matrix(bad);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidRotation);
  }
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_THROW(RotationMatrix::from_matrix(reflection), Error);
}

TEST(GeometryTest, WrapAngleRange) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(-5.0 * 2 * kPi + 0.25), 0.25, 1e-12);
}

TEST(GeometryTest, GeodesicAngleOfKnownRotation) {
  const RotationMatrix a = euler_zyx_to_matrix({0.2, 0.1, -0.3});
  const RotationMatrix d = RotationMatrix::trusted(
      Eigen::AngleAxisd(0.37, Vec3(1, 2, 3).normalized()).toRotationMatrix());
  EXPECT_NEAR(geodesic_angle(a, a * d), 0.37, 1e-12);
  EXPECT_NEAR(geodesic_angle(a, a), 0.0, 1e-12);
}

TEST(GeometryTest, TransformComposeAndInvert) {
  const RigidTransform a{euler_zyx_to_matrix({0.4, -0.1, 0.2}), Vec3(10, -20, 5)};
  const RigidTransform b{euler_zyx_to_matrix({-1.0, 0.3, 0.0}), Vec3(1, 2, 3)};
  const Vec3 p(7, 8, 9);
  EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
  EXPECT_LT((invert(a).apply(a.apply(p)) - p).norm(), 1e-12);
  EXPECT_LT(transform_distance(a * invert(a), RigidTransform::identity()), 1e-12);
  EXPECT_LT(((a * b).homogeneous() - a.homogeneous() * b.homogeneous()).cwiseAbs().maxCoeff(),
            1e-12);
}

}  // namespace
}  // namespace skillpath
