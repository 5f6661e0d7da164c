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

#ifndef CDPOSE_ROTATION_HPP_
#define CDPOSE_ROTATION_HPP_

#include <Eigen/Core>

namespace cdpose
{

using Vec3 = Eigen::Vector3d;

/// Two columns of an unconstrained 3x3 matrix, as emitted by a 6D rotation head.
struct SixDRep
{
  Vec3 a;
  Vec3 b;
};

/// Head-pose angles in degrees.
///
/// Camera frame: x points to image right, y up, z toward the camera. The
/// composed rotation is intrinsic yaw → pitch → roll:
///
///   R = Ry(yaw) · Rx(−pitch) · Rz(roll)
///
/// so that +yaw turns the face toward the subject's left, +pitch lifts the
/// face (extension, retrocollis) and +roll tilts the head toward the
/// subject's right shoulder.
struct EulerAngles
{
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  bool in_range() const;
  friend bool operator==(const EulerAngles &, const EulerAngles &) = default;
};

/// Proper rotation (orthonormal, det = +1). Only constructible through the
/// conversion functions below or `from_matrix`, which validates.
class RotationMatrix
{
public:
  RotationMatrix() : m_(Eigen::Matrix3d::Identity()) {}

  /// Throws OutOfRange if `m` is not orthonormal with det +1 within `tol`.
  static RotationMatrix from_matrix(const Eigen::Matrix3d & m, double tol = 1e-9);

  const Eigen::Matrix3d & matrix() const {return m_;}
  double operator()(int r, int c) const {return m_(r, c);}

  RotationMatrix operator*(const RotationMatrix & rhs) const
  {
    return RotationMatrix(m_ * rhs.m_);
  }

  /// max |mᵀm − I| elementwise.
  double orthonormality_residual() const;

private:
  explicit RotationMatrix(const Eigen::Matrix3d & m) : m_(m) {}

  friend RotationMatrix sixd_to_matrix(const SixDRep & rep);
  friend RotationMatrix euler_to_matrix(const EulerAngles & e);

  Eigen::Matrix3d m_;
};


/// Gram–Schmidt orthonormalization. Throws DegenerateInput when `a` is
/// (numerically) zero or `b` is parallel to `a`.
RotationMatrix sixd_to_matrix(const SixDRep & rep);

/// Decomposition in the yaw → pitch → roll order. At gimbal lock
/// (|pitch| = 90°) roll is reported as 0 and yaw absorbs the rest.
EulerAngles matrix_to_euler(const RotationMatrix & m);

RotationMatrix euler_to_matrix(const EulerAngles & e);

/// Orientation seen by the camera when the head rotates on top of the neck:
/// neck is applied first in the kinematic chain.
EulerAngles compose_head_neck(const EulerAngles & head, const EulerAngles & neck);

}  // namespace cdpose

#endif  // CDPOSE_ROTATION_HPP_
