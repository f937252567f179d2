#include "carloam/se3.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace carloam {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return m;
}

PoseSE3 exp_se3(const Twist& xi) {
  const double theta = xi.w.norm();
  const Mat3 W = hat(xi.w);
  const Mat3 W2 = W * W;

  Mat3 rotation;
  Mat3 V;  // left Jacobian mapping v to the translation
  if (theta < kSmallAngle) {
    rotation = Mat3::Identity() + W + 0.5 * W2;
    V = Mat3::Identity() + 0.5 * W + W2 / 6.0;
  } else {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    const double t2 = theta * theta;
    rotation = Mat3::Identity() + (st / theta) * W + ((1.0 - ct) / t2) * W2;
    V = Mat3::Identity() + ((1.0 - ct) / t2) * W + ((theta - st) / (t2 * theta)) * W2;
  }
  return PoseSE3{rotation, V * xi.v};
}

Vec3 transform_point(const PoseSE3& T, const Vec3& p) {
  return T.rotation * p + T.translation;
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return PoseSE3{a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

PoseSE3 inverse(const PoseSE3& T) {
  Mat3 rt = T.rotation.transpose();
  return PoseSE3{rt, -(rt * T.translation)};
}

PointJacobian point_jacobian(const Vec3& tp) {
  PointJacobian j;
  j.leftCols<3>() = Mat3::Identity();
  j.rightCols<3>() = -hat(tp);
  return j;
}

double rotation_angle(const Mat3& rotation) {
  // Quaternion form: well conditioned near 0 and pi, where acos of the
  // trace loses ~8 digits.
  const Eigen::Quaterniond q(rotation);
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

}  // namespace carloam
