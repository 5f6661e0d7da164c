// Copyright 2026 The cdpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdpose/rotation.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cdpose/error.hpp"

namespace cdpose
{

namespace
{

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kEps = 1e-12;

}  // namespace

RotationMatrix RotationMatrix::from_matrix(const Eigen::Matrix3d & m, double tol)
{
  RotationMatrix r(m);
  if (!m.allFinite() || r.orthonormality_residual() > tol ||
    std::abs(m.determinant() - 1.0) > tol)
  {
    throw Error(ErrorCode::kOutOfRange, "matrix is not a proper rotation");
  }
  return r;
}

double RotationMatrix::orthonormality_residual() const
{
  return (m_.transpose() * m_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

bool EulerAngles::in_range() const
{
  return std::isfinite(yaw) && std::isfinite(pitch) && std::isfinite(roll) &&
         std::abs(yaw) <= 180.0 && std::abs(pitch) <= 90.0 && std::abs(roll) <= 180.0;
}

RotationMatrix sixd_to_matrix(const SixDRep & rep)
{
  if (!rep.a.allFinite() || !rep.b.allFinite()) {
    throw Error(ErrorCode::kDegenerateInput, "6D representation has non-finite components");
  }
  const double a_norm = rep.a.norm();
  if (a_norm <= kEps) {
    throw Error(ErrorCode::kDegenerateInput, "6D representation: first column is zero");
  }
  const Vec3 c1 = rep.a / a_norm;
  const Vec3 b_perp = rep.b - c1.dot(rep.b) * c1;
  const double b_norm = b_perp.norm();
  if (b_norm <= kEps) {
    throw Error(ErrorCode::kDegenerateInput, "6D representation: columns are parallel");
  }
  const Vec3 c2 = b_perp / b_norm;
  const Vec3 c3 = c1.cross(c2);

  Eigen::Matrix3d m;
  m.col(0) = c1;
  m.col(1) = c2;
  m.col(2) = c3;
  return RotationMatrix(m);
}

RotationMatrix euler_to_matrix(const EulerAngles & e)
{
  const Eigen::Matrix3d m =
    (Eigen::AngleAxisd(e.yaw * kDegToRad, Vec3::UnitY()) *
    Eigen::AngleAxisd(-e.pitch * kDegToRad, Vec3::UnitX()) *
    Eigen::AngleAxisd(e.roll * kDegToRad, Vec3::UnitZ())).toRotationMatrix();
  return RotationMatrix(m);
}

EulerAngles matrix_to_euler(const RotationMatrix & rot)
{
  // With R = Ry(y) Rx(-p) Rz(r):
  //   m12 = sin p,  m02 = sin y cos p,  m22 = cos y cos p,
  //   m10 = cos p sin r,  m11 = cos p cos r.
  const Eigen::Matrix3d & m = rot.matrix();
  const double sp = std::clamp(m(1, 2), -1.0, 1.0);
  EulerAngles e;
  e.pitch = std::asin(sp) * kRadToDeg;
  const double cp = std::sqrt(m(1, 0) * m(1, 0) + m(1, 1) * m(1, 1));
  if (cp > 1e-9) {
    e.yaw = std::atan2(m(0, 2), m(2, 2)) * kRadToDeg;
    e.roll = std::atan2(m(1, 0), m(1, 1)) * kRadToDeg;
  } else {
    // Gimbal lock: m00 = cos(y ∓ r), m20 = −sin(y ∓ r); put everything in yaw.
    e.pitch = sp > 0 ? 90.0 : -90.0;
    e.yaw = std::atan2(-m(2, 0), m(0, 0)) * kRadToDeg;
    e.roll = 0.0;
  }
  return e;
}

EulerAngles compose_head_neck(const EulerAngles & head, const EulerAngles & neck)
{
  return matrix_to_euler(euler_to_matrix(neck) * euler_to_matrix(head));
}

}  // namespace cdpose
