// Minimal rigid-body math: se(3) twists, the exponential map, pose
// composition and the left-perturbation point Jacobian.
//
// Twist ordering is (v, w) throughout; Jacobian columns follow it.
// Poses are updated by left multiplication T <- exp(dxi) * T.

#pragma once

#include <Eigen/Core>

#include "carloam/types.hpp"

namespace carloam {

/// se(3) tangent element: linear part v (m), angular part w (rad).
struct Twist {
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();

  Eigen::Matrix<double, 6, 1> vector() const {
    Eigen::Matrix<double, 6, 1> x;
    x << v, w;
    return x;
  }
  static Twist from_vector(const Eigen::Matrix<double, 6, 1>& x) {
    return Twist{x.head<3>(), x.tail<3>()};
  }
};

/// Rigid transform as rotation matrix + translation.
struct PoseSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static PoseSE3 identity() { return PoseSE3{}; }
};

/// 3x6 Jacobian of a transformed point w.r.t. a left perturbation,
/// [ I | -[Tp]x ].
using PointJacobian = Eigen::Matrix<double, 3, 6>;

/// Skew-symmetric matrix such that hat(w) * u == w x u.
Mat3 hat(const Vec3& w);

/// Exponential map se(3) -> SE(3). Rodrigues rotation plus the SE(3) left
/// Jacobian for the translation; Taylor fallback below 1e-8 rad.
PoseSE3 exp_se3(const Twist& xi);

Vec3 transform_point(const PoseSE3& T, const Vec3& p);
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 inverse(const PoseSE3& T);

/// Jacobian of the left-perturbed point at the origin; tp must already be
/// the transformed (world-frame) point.
PointJacobian point_jacobian(const Vec3& tp);

/// Rotation angle of R in radians, in [0, pi]. Used by metrics and tests
/// only; the optimizer never needs the full log map.
double rotation_angle(const Mat3& rotation);

}  // namespace carloam
