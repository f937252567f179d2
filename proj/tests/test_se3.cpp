#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "carloam/se3.hpp"

using namespace carloam;

namespace {

Twist random_twist(std::mt19937_64& rng, double vmag, double wmag) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Twist xi;
  xi.v = Vec3(u(rng), u(rng), u(rng)) * vmag;
  xi.w = Vec3(u(rng), u(rng), u(rng)) * wmag;
  return xi;
}

}  // namespace

TEST_CASE("exp of zero twist is identity") {
  const PoseSE3 T = exp_se3(Twist{});
  CHECK((T.rotation - Mat3::Identity()).norm() == doctest::Approx(0.0));
  CHECK(T.translation.norm() == doctest::Approx(0.0));
}

TEST_CASE("hat matches cross product") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 w(u(rng), u(rng), u(rng)), x(u(rng), u(rng), u(rng));
    CHECK((hat(w) * x - w.cross(x)).norm() < 1e-14);
  }
}

TEST_CASE("group laws on random samples") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 120; ++i) {
    const PoseSE3 a = exp_se3(random_twist(rng, 2.0, 2.5));
    const PoseSE3 b = exp_se3(random_twist(rng, 2.0, 2.5));
    const PoseSE3 c = exp_se3(random_twist(rng, 2.0, 2.5));

    // rotation stays orthonormal with unit determinant
    CHECK((a.rotation * a.rotation.transpose() - Mat3::Identity()).norm() < 1e-9);
    CHECK(a.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));

    // inverse
    const PoseSE3 ai = inverse(a);
    const PoseSE3 id = compose(a, ai);
    CHECK((id.rotation - Mat3::Identity()).norm() < 1e-10);
    CHECK(id.translation.norm() < 1e-10);

    // associativity
    const PoseSE3 l = compose(compose(a, b), c);
    const PoseSE3 r = compose(a, compose(b, c));
    CHECK((l.rotation - r.rotation).norm() < 1e-10);
    CHECK((l.translation - r.translation).norm() < 1e-10);

    // action consistency: (a*b) p == a (b p)
    const Vec3 p = random_twist(rng, 3.0, 0.0).v;
    CHECK((transform_point(compose(a, b), p) - transform_point(a, transform_point(b, p))).norm() <
          1e-10);
  }
}

TEST_CASE("exp near zero angle stays finite and orthonormal") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    Twist xi = random_twist(rng, 1.0, 1.0);
    xi.w *= 1e-12;  // force the Taylor branch
    const PoseSE3 T = exp_se3(xi);
    CHECK((T.rotation * T.rotation.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK((T.translation - xi.v).norm() < 1e-10);
  }
}

TEST_CASE("point_jacobian matches central finite differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const PoseSE3 T = exp_se3(random_twist(rng, 2.0, 2.0));
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 tp = transform_point(T, p);
    const PointJacobian J = point_jacobian(tp);
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
      d(k) = h;
      const Vec3 fp = transform_point(compose(exp_se3(Twist::from_vector(d)), T), p);
      const Vec3 fm = transform_point(compose(exp_se3(Twist::from_vector(-d)), T), p);
      const Vec3 fd = (fp - fm) / (2.0 * h);
      CHECK((J.col(k) - fd).norm() < 1e-5);
    }
  }
}

TEST_CASE("rotation_angle recovers the generator norm") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    Twist xi;
    Vec3 axis(u(rng) - 1.5, u(rng) - 1.5, u(rng) - 1.5);
    if (axis.norm() < 1e-6) axis = Vec3::UnitX();
    const double ang = u(rng);
    xi.w = axis.normalized() * ang;
    CHECK(rotation_angle(exp_se3(xi).rotation) == doctest::Approx(ang).epsilon(1e-8));
  }
  CHECK(rotation_angle(Mat3::Identity()) == doctest::Approx(0.0));
}
