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

// Rotation representations and rigid transforms.
//
// The rotation matrix is the canonical internal form. Euler triples exist only
// at I/O boundaries: the tracker reports intrinsic z-y'-x'' angles, the robot
// consumes extrinsic (fixed-axis) x-y-z angles. Both describe Rz*Ry*Rx.

#ifndef SKILLPATH_GEOMETRY_HPP_
#define SKILLPATH_GEOMETRY_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "skillpath/error.hpp"

namespace skillpath {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kOrthonormalTol = 1e-9;
inline constexpr double kRepairableTol = 1e-6;
inline constexpr double kGimbalLockTol = 1e-8;

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

// Wraps into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// Intrinsic z-y'-x'' angles as reported by the tracker (azimuth, elevation,
/// roll). Radians.
struct EulerZYX {
  double psi = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// Extrinsic x-y-z angles about the static axes, the robot's input
/// convention. Radians.
struct FixedXYZ {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
};

inline void require_finite(double a, double b, double c) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw Error(ErrorKind::kInvalidAngle, "angles must be finite");
  }
}

/// Largest violation of R^T R = I and det R = 1.
inline double orthonormality_defect(const Eigen::Matrix3d& m) {
  const double ortho =
      (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m.determinant() - 1.0));
}

class RotationMatrix {
 public:
  RotationMatrix() : m_(Eigen::Matrix3d::Identity()) {}

  static RotationMatrix identity() { return RotationMatrix(); }

  /// Accepts matrices within 1e-9 of SO(3) as-is, repairs those within 1e-6
  /// by polar projection, rejects the rest.
  static RotationMatrix from_matrix(const Eigen::Matrix3d& m) {
    if (!m.allFinite()) {
      throw Error(ErrorKind::kInvalidRotation, "matrix has non-finite entries");
    }
    const double defect = orthonormality_defect(m);
    if (defect <= kOrthonormalTol) return RotationMatrix(m);
    if (defect <= kRepairableTol) return RotationMatrix(project_to_so3(m));
    std::ostringstream os;
    os << "matrix is not a rotation (defect " << defect << ")";
    throw Error(ErrorKind::kInvalidRotation, os.str());
  }

  /// For products of known rotations; skips the orthonormality check.
  static RotationMatrix trusted(const Eigen::Matrix3d& m) {
    return RotationMatrix(m);
  }

  static RotationMatrix from_quaternion(const Eigen::Quaterniond& q) {
    return RotationMatrix(q.normalized().toRotationMatrix());
  }

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Eigen::Quaterniond quaternion() const {
    return Eigen::Quaterniond(m_).normalized();
  }

  RotationMatrix transpose() const { return RotationMatrix(m_.transpose()); }

  friend RotationMatrix operator*(const RotationMatrix& a,
                                  const RotationMatrix& b) {
    return RotationMatrix(a.m_ * b.m_);
  }
  friend Vec3 operator*(const RotationMatrix& r, const Vec3& v) {
    return r.m_ * v;
  }

  static Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(
        m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
    return u * v.transpose();
  }

 private:
  explicit RotationMatrix(const Eigen::Matrix3d& m) : m_(m) {}

  Eigen::Matrix3d m_;
};

inline Eigen::Matrix3d axis_rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

inline Eigen::Matrix3d axis_rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

inline Eigen::Matrix3d axis_rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

/// Tracker orientation: rotate about z by psi, then about the moved y' by
/// theta, then about the moved x'' by phi. Body-axis moves post-multiply.
inline RotationMatrix euler_zyx_to_matrix(const EulerZYX& e) {
  require_finite(e.psi, e.theta, e.phi);
  Eigen::Matrix3d r = axis_rotation_z(e.psi);
  r = r * axis_rotation_y(e.theta);
  r = r * axis_rotation_x(e.phi);
  return RotationMatrix::trusted(r);
}

/// Robot orientation: fixed-axis x, y, z in that order, written out in closed
/// form. Equal to euler_zyx_to_matrix with the triple reordered.
inline RotationMatrix fixed_xyz_to_matrix(const FixedXYZ& f) {
  require_finite(f.phi, f.theta, f.psi);
  const double cf = std::cos(f.phi), sf = std::sin(f.phi);
  const double ct = std::cos(f.theta), st = std::sin(f.theta);
  const double cp = std::cos(f.psi), sp = std::sin(f.psi);
  Eigen::Matrix3d r;
  r << cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,  //
      sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,   //
      -st, ct * sf, ct * cf;
  return RotationMatrix::trusted(r);
}

/// Extracts fixed x-y-z angles. theta lands in [-pi/2, pi/2], phi and psi in
/// (-pi, pi]. At gimbal lock phi is pinned to 0 and psi absorbs the free
/// rotation.
inline FixedXYZ matrix_to_fixed_xyz(const RotationMatrix& rot) {
  const Eigen::Matrix3d& r = rot.matrix();
  if (!r.allFinite() || orthonormality_defect(r) > kRepairableTol) {
    throw Error(ErrorKind::kInvalidRotation, "matrix is not orthonormal");
  }
  FixedXYZ out;
  out.theta = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double cos_theta = std::hypot(r(0, 0), r(1, 0));
  if (cos_theta < kGimbalLockTol) {
    out.phi = 0.0;
    out.psi = wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
  } else {
    out.psi = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
    out.phi = wrap_angle(std::atan2(r(2, 1), r(2, 2)));
  }
  return out;
}

inline FixedXYZ normalized(const FixedXYZ& f) {
  return matrix_to_fixed_xyz(fixed_xyz_to_matrix(f));
}

inline EulerZYX matrix_to_euler_zyx(const RotationMatrix& rot) {
  const FixedXYZ f = matrix_to_fixed_xyz(rot);
  return EulerZYX{f.psi, f.theta, f.phi};
}

inline EulerZYX normalized(const EulerZYX& e) {
  return matrix_to_euler_zyx(euler_zyx_to_matrix(e));
}

/// Geodesic distance on SO(3), radians in [0, pi].
inline double geodesic_angle(const RotationMatrix& a, const RotationMatrix& b) {
  const Eigen::Quaterniond rel = a.quaternion().conjugate() * b.quaternion();
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

struct RigidTransform {
  RotationMatrix rotation;
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return RigidTransform{}; }

  static RigidTransform translate(double x, double y, double z) {
    return RigidTransform{RotationMatrix::identity(), Vec3(x, y, z)};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Eigen::Matrix4d homogeneous() const {
    Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
    h.topLeftCorner<3, 3>() = rotation.matrix();
    h.topRightCorner<3, 1>() = translation;
    return h;
  }
};

/// a after b: maps b-coordinates through b, then through a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform{a.rotation * b.rotation,
                        a.rotation * b.translation + a.translation};
}

inline RigidTransform invert(const RigidTransform& t) {
  const RotationMatrix rt = t.rotation.transpose();
  return RigidTransform{rt, -(rt * t.translation)};
}

inline RigidTransform operator*(const RigidTransform& a,
                                const RigidTransform& b) {
  return compose(a, b);
}

/// Max elementwise difference of the homogeneous matrices.
inline double transform_distance(const RigidTransform& a,
                                 const RigidTransform& b) {
  return (a.homogeneous() - b.homogeneous()).cwiseAbs().maxCoeff();
}

}  // namespace skillpath

#endif  // SKILLPATH_GEOMETRY_HPP_
