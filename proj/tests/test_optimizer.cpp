#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <vector>

#include "carloam/color.hpp"
#include "carloam/features.hpp"
#include "carloam/optimizer.hpp"
#include "carloam/synth.hpp"

using namespace carloam;

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6) v = Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

Vec3 random_vec(std::mt19937_64& rng, double mag) {
  std::uniform_real_distribution<double> u(-mag, mag);
  return Vec3(u(rng), u(rng), u(rng));
}

RgbColor random_near_color(std::mt19937_64& rng, const RgbColor& base, int spread) {
  std::uniform_int_distribution<int> jitter(-spread, spread);
  auto clamp8 = [](int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); };
  return RgbColor{clamp8(base.r + jitter(rng)), clamp8(base.g + jitter(rng)),
                  clamp8(base.b + jitter(rng))};
}

EdgeCorrespondence make_edge(const Vec3& anchor, const Vec3& dir,
                             std::optional<RgbColor> color = std::nullopt) {
  EdgeCorrespondence c;
  c.anchor = MapPoint{anchor, color};
  c.direction = dir;
  return c;
}

PlaneCorrespondence make_plane(const Vec3& anchor, const Vec3& n,
                               std::optional<RgbColor> color = std::nullopt) {
  PlaneCorrespondence c;
  c.anchor = MapPoint{anchor, color};
  c.normal = n;
  return c;
}

// Independent classic point-to-plane row, written out longhand.
Eigen::Matrix<double, 1, 6> classic_plane_row(const Vec3& n, double d, const Vec3& q) {
  const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
  Eigen::Matrix<double, 1, 6> row;
  row.head<3>() = s * n.transpose();
  row.tail<3>() = s * (q.cross(n)).transpose();  // n^T * (-hat(q)) = (q x n)^T
  return row;
}

// Independent edge row via the projection-matrix derivative:
// d = |P u| with P = I - dir dir^T, grad_u d = (P u)^T / d.
Eigen::Matrix<double, 1, 6> classic_edge_row(const Vec3& dir, const Vec3& anchor, const Vec3& q) {
  const Vec3 u = q - anchor;
  const Vec3 pu = u - dir * dir.dot(u);
  const double d = pu.norm();
  Eigen::Matrix<double, 1, 6> row;
  row.head<3>() = pu.transpose() / d;
  row.tail<3>() = (q.cross(pu)).transpose() / d;  // (pu/d)^T * (-hat(q))
  return row;
}

}  // namespace

TEST_CASE("point_to_edge_distance basics and projection-formula oracle") {
  const auto corr = make_edge(Vec3::Zero(), Vec3::UnitZ());
  CHECK(point_to_edge_distance(Vec3(0, 0, 2.5), corr) == doctest::Approx(0.0));  // on the line
  CHECK(point_to_edge_distance(Vec3(1, 0, 0), corr) == doctest::Approx(1.0));

  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto c = make_edge(random_vec(rng, 3.0), random_unit(rng));
    const Vec3 q = random_vec(rng, 3.0);
    const Vec3 u = q - c.anchor.position;
    const double via_projection = (u - c.direction * c.direction.dot(u)).norm();
    CHECK(std::abs(point_to_edge_distance(q, c) - via_projection) < 1e-12);
  }
}

TEST_CASE("point_to_plane_distance basics and plane-fit oracle") {
  const auto corr = make_plane(Vec3::Zero(), Vec3::UnitZ());
  CHECK(point_to_plane_distance(Vec3(3, 4, 0.7), corr) == doctest::Approx(0.7));
  CHECK(point_to_plane_distance(Vec3(3, 4, 0), corr) == doctest::Approx(0.0));

  // Independent least-squares plane fit: scatter points on a random plane,
  // fit z = ax + by + c by normal equations, compare distances.
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec3 n = (Vec3(0.2, -0.1, 1.0) + 0.3 * random_vec(rng, 1.0)).normalized();
    const Vec3 p0 = random_vec(rng, 2.0);
    // Basis in the plane.
    const Vec3 e1 = n.cross(Vec3::UnitX()).norm() > 0.1 ? n.cross(Vec3::UnitX()).normalized()
                                                        : n.cross(Vec3::UnitY()).normalized();
    const Vec3 e2 = n.cross(e1);
    std::vector<Vec3> pts;
    for (int i = 0; i < 30; ++i) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      pts.push_back(p0 + u(rng) * e1 + u(rng) * e2);
    }
    // LS fit z = ax + by + c.
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Vec3 b = Vec3::Zero();
    for (const auto& p : pts) {
      const Vec3 row(p.x(), p.y(), 1.0);
      A += row * row.transpose();
      b += row * p.z();
    }
    const Vec3 abc = A.ldlt().solve(b);
    const Vec3 n_fit = Vec3(-abc[0], -abc[1], 1.0).normalized();

    auto corr2 = make_plane(pts.front(), n);
    const Vec3 q = random_vec(rng, 2.0);
    const double got = std::abs(point_to_plane_distance(q, corr2));
    const double want = std::abs(q.z() - abc[0] * q.x() - abc[1] * q.y() - abc[2]) /
                        std::sqrt(abc[0] * abc[0] + abc[1] * abc[1] + 1.0);
    CHECK(std::abs(got - want) < 1e-9);
  }
}

TEST_CASE("color_weight cases") {
  OptimizerConfig cfg;
  const RgbColor red{255, 0, 0}, blue{0, 0, 255};

  CHECK(color_weight(red, red, cfg) == doctest::Approx(1.0));       // dE = 0
  CHECK(color_weight(std::nullopt, red, cfg) == doctest::Approx(1.0));
  CHECK(color_weight(red, std::nullopt, cfg) == doctest::Approx(1.0));

  OptimizerConfig off = cfg;
  off.color_weight_enabled = false;
  CHECK(color_weight(red, blue, off) == doctest::Approx(1.0));

  // Composition: W = exp(-dE^2 / (2 sigma^2)).
  const double de = color_difference_rgb(red, blue);
  CHECK(color_weight(red, blue, cfg) ==
        doctest::Approx(std::exp(-de * de / (2.0 * cfg.sigma * cfg.sigma))));
  CHECK(color_weight(red, blue, cfg) < 1e-20);  // red vs blue: effectively zero

  // At dE == sigma the weight is e^{-1/2}: verify through the kernel directly.
  CHECK(gaussian_weight(cfg.sigma, GaussianParam{cfg.sigma}) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("build_residual values and gates") {
  OptimizerConfig cfg;
  const PoseSE3 T;  // identity
  Point f;
  f.position = Vec3(1.0, 0.0, 0.3);

  // Edge along z through origin: d = 1.
  const auto edge = make_edge(Vec3::Zero(), Vec3::UnitZ());
  auto t = build_residual(f, T, edge, cfg);
  REQUIRE(t.has_value());
  CHECK(t->kind == ResidualTerm::Kind::kEdge);
  CHECK(t->distance == doctest::Approx(1.0));
  CHECK(t->residual == doctest::Approx(welsch(1.0, WelschParam{cfg.nu})));
  CHECK(t->weight == doctest::Approx(1.0));  // no colors anywhere

  // Beyond the gate: absent.
  f.position = Vec3(1.5, 0.0, 0.0);
  CHECK_FALSE(build_residual(f, T, edge, cfg).has_value());
  // Exactly on the line: absent (gradient direction undefined).
  f.position = Vec3(0.0, 0.0, 0.7);
  CHECK_FALSE(build_residual(f, T, edge, cfg).has_value());

  // Plane z=0: residual from |d|, sign carried by the row.
  const auto plane = make_plane(Vec3::Zero(), Vec3::UnitZ());
  f.position = Vec3(0.3, -0.2, -0.25);
  t = build_residual(f, T, plane, cfg);
  REQUIRE(t.has_value());
  CHECK(t->distance == doctest::Approx(0.25));
  CHECK(t->residual == doctest::Approx(welsch(0.25, WelschParam{cfg.nu})));
  // d = 0 for a plane is fine: zero residual, zero row.
  f.position = Vec3(0.3, -0.2, 0.0);
  t = build_residual(f, T, plane, cfg);
  REQUIRE(t.has_value());
  CHECK(t->residual == doctest::Approx(0.0));
  CHECK(t->jacobian.norm() == doctest::Approx(0.0));
}

TEST_CASE("classic reduction: kernels off give plain least-squares rows") {
  OptimizerConfig cfg;
  cfg.welsch_enabled = false;
  cfg.color_weight_enabled = false;
  std::mt19937_64 rng(55);

  for (int i = 0; i < 100; ++i) {
    const PoseSE3 T = exp_se3(Twist{random_vec(rng, 1.0), random_vec(rng, 1.0)});
    const Vec3 anchor = random_vec(rng, 2.0);

    // plane
    {
      const Vec3 n = random_unit(rng);
      const auto corr = make_plane(anchor, n);
      Point f;
      const Vec3 q = anchor + n * (0.02 + 0.4 * std::abs(random_vec(rng, 1.0).x())) +
                     (Vec3::Ones() - n * n.dot(Vec3::Ones())) * 0.1;
      f.position = transform_point(inverse(T), q);
      const auto t = build_residual(f, T, corr, cfg);
      REQUIRE(t.has_value());
      const Vec3 q2 = transform_point(T, f.position);
      const double d = (q2 - anchor).dot(n);
      CHECK(t->residual == doctest::Approx(std::abs(d)));
      CHECK((t->jacobian - classic_plane_row(n, d, q2)).norm() < 1e-9);
    }
    // edge
    {
      const Vec3 dir = random_unit(rng);
      const auto corr = make_edge(anchor, dir);
      Vec3 perp = random_unit(rng);
      perp = (perp - dir * dir.dot(perp)).normalized();
      Point f;
      const Vec3 q = anchor + perp * 0.3 + dir * 0.5;
      f.position = transform_point(inverse(T), q);
      const auto t = build_residual(f, T, corr, cfg);
      REQUIRE(t.has_value());
      const Vec3 q2 = transform_point(T, f.position);
      CHECK(t->residual == doctest::Approx(0.3));
      CHECK((t->jacobian - classic_edge_row(dir, anchor, q2)).norm() < 1e-9);
    }
  }
}

TEST_CASE("jacobian rows match finite differences across all kernel switches") {
  std::mt19937_64 rng(2718);
  const double h = 1e-6;
  int checked = 0;

  for (int combo = 0; combo < 4; ++combo) {
    OptimizerConfig cfg;
    cfg.welsch_enabled = (combo & 1) != 0;
    cfg.color_weight_enabled = (combo & 2) != 0;

    for (int rep = 0; rep < 130; ++rep) {
      const PoseSE3 T = exp_se3(Twist{random_vec(rng, 1.5), random_vec(rng, 1.5)});
      const Vec3 anchor = random_vec(rng, 2.5);
      const RgbColor base{140, 120, 100};
      const auto c1 = random_near_color(rng, base, 25);
      const auto c2 = random_near_color(rng, base, 25);
      std::uniform_real_distribution<double> dmag(0.01, 0.5);
      std::uniform_real_distribution<double> sgn01(0.0, 1.0);

      std::optional<ResidualTerm> term;
      if (rep % 2 == 0) {
        const Vec3 dir = random_unit(rng);
        Vec3 perp = random_unit(rng);
        perp = (perp - dir * dir.dot(perp)).normalized();
        const Vec3 q = anchor + perp * dmag(rng) + dir * random_vec(rng, 1.0).x();
        Point f;
        f.position = transform_point(inverse(T), q);
        f.color = c1;
        term = build_residual(f, T, make_edge(anchor, dir, c2), cfg);
      } else {
        const Vec3 n = random_unit(rng);
        const double s = (sgn01(rng) < 0.5 ? -1.0 : 1.0) * dmag(rng);
        Vec3 in_plane = random_unit(rng);
        in_plane = in_plane - n * n.dot(in_plane);
        const Vec3 q = anchor + n * s + in_plane * 0.5;
        Point f;
        f.position = transform_point(inverse(T), q);
        f.color = c1;
        term = build_residual(f, T, make_plane(anchor, n, c2), cfg);
      }
      REQUIRE(term.has_value());

      Eigen::Matrix<double, 1, 6> fd;
      const std::vector<ResidualTerm> one = {*term};
      for (int k = 0; k < 6; ++k) {
        Vec6 d = Vec6::Zero();
        d(k) = h;
        const double fp = evaluate_cost(one, compose(exp_se3(Twist::from_vector(d)), T), cfg);
        const double fm = evaluate_cost(one, compose(exp_se3(Twist::from_vector(-d)), T), cfg);
        fd(k) = (fp - fm) / (2.0 * h);
      }
      const double rel = (fd - term->jacobian).norm() / term->jacobian.norm();
      CHECK(rel < 1e-5);
      ++checked;
    }
  }
  CHECK(checked >= 500);
}

TEST_CASE("uniform row scaling leaves the undamped step unchanged") {
  std::mt19937_64 rng(4);
  std::vector<ResidualTerm> base;
  OptimizerConfig cfg;
  const PoseSE3 T;
  for (int i = 0; i < 60; ++i) {
    const Vec3 anchor = random_vec(rng, 2.0);
    if (i % 2 == 0) {
      const Vec3 dir = random_unit(rng);
      Vec3 perp = random_unit(rng);
      perp = (perp - dir * dir.dot(perp)).normalized();
      Point f;
      f.position = anchor + perp * 0.2 + dir * 0.3;
      if (auto t = build_residual(f, T, make_edge(anchor, dir), cfg)) base.push_back(*t);
    } else {
      const Vec3 n = random_unit(rng);
      Point f;
      f.position = anchor + n * 0.15;
      if (auto t = build_residual(f, T, make_plane(anchor, n), cfg)) base.push_back(*t);
    }
  }
  REQUIRE(base.size() >= 50);

  auto solve = [](const std::vector<ResidualTerm>& terms) {
    Mat6 H = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (const auto& t : terms) {
      H += t.jacobian.transpose() * t.jacobian;
      g += t.jacobian.transpose() * (t.weight * t.residual);
    }
    return Vec6(H.ldlt().solve(-g));
  };

  std::vector<ResidualTerm> scaled = base;
  const double c = 0.37;
  for (auto& t : scaled) {
    t.weight *= c;
    t.jacobian *= c;  // jacobian carries W, so uniform W scaling scales rows
  }
  const Vec6 d1 = solve(base);
  const Vec6 d2 = solve(scaled);
  CHECK((d1 - d2).norm() < 1e-9 * std::max(1.0, d1.norm()));
}

TEST_CASE("align fixed point: features sampled exactly from the map") {
  MapConfig mcfg;
  GlobalMap map(mcfg);
  std::vector<MapPoint> edges, planars;
  for (int i = 0; i < 12; ++i) edges.push_back(MapPoint{Vec3(0.15 * i, 0.0, 1.0), std::nullopt});
  // three orthogonal, well-separated plane grids: all six DoF constrained
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      planars.push_back(MapPoint{Vec3(0.25 * i, 0.25 * j, 0.0), std::nullopt});
      planars.push_back(MapPoint{Vec3(3.0, 0.25 * i, 1.0 + 0.25 * j), std::nullopt});
      planars.push_back(MapPoint{Vec3(0.25 * i, -3.0, 1.0 + 0.25 * j), std::nullopt});
    }
  map.insert(edges, planars);

  FeatureCloud f;
  for (const auto& e : edges) {
    Point p;
    p.position = e.position;
    f.edges.push_back(p);
  }
  for (const auto& pl : planars) {
    Point p;
    p.position = pl.position;
    f.planars.push_back(p);
  }

  OptimizerConfig cfg;
  const AlignmentResult r = align(f, map, PoseSE3::identity(), cfg);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK((r.pose.rotation - Mat3::Identity()).norm() < 1e-10);
  CHECK(r.pose.translation.norm() < 1e-10);
  CHECK(r.final_cost == doctest::Approx(0.0));
  // every edge feature is its own nearest neighbor: d = 0 exactly -> skipped
  CHECK(r.inliers.rejected_degenerate == static_cast<int>(edges.size()));
  CHECK(r.inliers.plane_accepted == static_cast<int>(planars.size()));
}

TEST_CASE("align recovers a known offset on a synthetic structured scene") {
  SyntheticScene scene = builtin_scene("room");
  LidarSpec lidar;
  lidar.lines = 48;
  lidar.cols = 300;
  lidar.range_noise = 0.0;
  FeatureConfig fcfg;
  MapConfig mcfg;
  GlobalMap map(mcfg);

  for (int k : {0, 2, 4}) {
    const PoseSE3& T = scene.trajectory[k].pose;
    const Scan s = simulate_scan(scene, lidar, T, 0, 100 + k);
    const FeatureCloud fc = extract_features_serial(s, fcfg);
    std::vector<MapPoint> e, p;
    for (const auto& pt : fc.edges) e.push_back({transform_point(T, pt.position), std::nullopt});
    for (const auto& pt : fc.planars) p.push_back({transform_point(T, pt.position), std::nullopt});
    map.insert(e, p);
  }

  const PoseSE3& T_true = scene.trajectory[1].pose;
  const Scan s = simulate_scan(scene, lidar, T_true, 0, 200);
  const FeatureCloud fc = extract_features_serial(s, fcfg);

  // initial guess ~0.1 m / ~5 degrees off
  const Twist off{Vec3(0.06, -0.06, 0.05), Vec3(0.03, 0.02, 0.08)};
  const PoseSE3 guess = compose(exp_se3(off), T_true);

  OptimizerConfig cfg;
  const AlignmentResult r = align(fc, map, guess, cfg);
  CHECK_FALSE(r.degenerate);
  CHECK_FALSE(r.insufficient);
  CHECK((r.pose.translation - T_true.translation).norm() < 1e-3);
  CHECK(rotation_angle(r.pose.rotation.transpose() * T_true.rotation) < 0.05 * M_PI / 180.0);

  // multi-thread term construction must not change the answer
  const AlignmentResult r4 = align(fc, map, guess, cfg, 4);
  CHECK((r4.pose.translation - r.pose.translation).norm() < 1e-12);
  CHECK((r4.pose.rotation - r.pose.rotation).norm() < 1e-12);
}

TEST_CASE("align flags insufficient correspondences and restores the initial pose") {
  MapConfig mcfg;
  GlobalMap map(mcfg);
  std::vector<MapPoint> planars;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) planars.push_back(MapPoint{Vec3(0.3 * i, 0.3 * j, 0.0), std::nullopt});
  map.insert({}, planars);

  FeatureCloud far_away;
  for (int i = 0; i < 20; ++i) {
    Point p;
    p.position = Vec3(50.0 + i, 40.0, 10.0);  // anchors all beyond the gate
    far_away.planars.push_back(p);
  }
  OptimizerConfig cfg;
  const PoseSE3 init = exp_se3(Twist{Vec3(0.2, 0.1, -0.3), Vec3(0.1, 0.0, 0.4)});
  const AlignmentResult r = align(far_away, map, init, cfg);
  CHECK(r.insufficient);
  CHECK((r.pose.translation - init.translation).norm() == doctest::Approx(0.0));
  CHECK((r.pose.rotation - init.rotation).norm() == doctest::Approx(0.0));
  CHECK(r.inliers.accepted() == 0);
}

TEST_CASE("align flags a degenerate single-plane problem") {
  MapConfig mcfg;
  GlobalMap map(mcfg);
  std::vector<MapPoint> planars;
  for (int i = 0; i < 14; ++i)
    for (int j = 0; j < 14; ++j)
      planars.push_back(MapPoint{Vec3(0.25 * i, 0.25 * j, 0.0), std::nullopt});
  map.insert({}, planars);

  FeatureCloud f;
  for (int i = 2; i < 12; ++i)
    for (int j = 2; j < 12; ++j) {
      Point p;
      p.position = Vec3(0.25 * i, 0.25 * j, 0.05);  // floating above one plane
      f.planars.push_back(p);
    }
  OptimizerConfig cfg;
  const PoseSE3 init;
  const AlignmentResult r = align(f, map, init, cfg);
  CHECK(r.degenerate);  // x/y translation and yaw unconstrained
}

TEST_CASE("welsch kernel shields alignment from injected outliers") {
  SyntheticScene scene = builtin_scene("room");
  LidarSpec lidar;
  lidar.lines = 48;
  lidar.cols = 300;
  lidar.range_noise = 0.0;
  FeatureConfig fcfg;
  GlobalMap map{MapConfig{}};
  for (int k : {0, 2}) {
    const PoseSE3& T = scene.trajectory[k].pose;
    const Scan s = simulate_scan(scene, lidar, T, 0, 300 + k);
    const FeatureCloud fc = extract_features_serial(s, fcfg);
    std::vector<MapPoint> e, p;
    for (const auto& pt : fc.edges) e.push_back({transform_point(T, pt.position), std::nullopt});
    for (const auto& pt : fc.planars) p.push_back({transform_point(T, pt.position), std::nullopt});
    map.insert(e, p);
  }

  const PoseSE3& T_true = scene.trajectory[1].pose;
  const Scan s = simulate_scan(scene, lidar, T_true, 0, 400);
  FeatureCloud fc = extract_features_serial(s, fcfg);

  // 30% of the features replaced by junk inside the local bounding box.
  Aabb local;
  local.min = Vec3(-3, -3, -1);
  local.max = Vec3(3, 3, 2);
  corrupt_features(fc, 0.3, 99, local);

  const Twist off{Vec3(0.04, -0.03, 0.02), Vec3(0.01, 0.01, 0.03)};
  const PoseSE3 guess = compose(exp_se3(off), T_true);

  OptimizerConfig on;
  on.color_weight_enabled = false;
  OptimizerConfig no_welsch = on;
  no_welsch.welsch_enabled = false;

  const double err_on = (align(fc, map, guess, on).pose.translation - T_true.translation).norm();
  const double err_off =
      (align(fc, map, guess, no_welsch).pose.translation - T_true.translation).norm();
  CHECK(err_on <= err_off);
}

TEST_CASE("evaluate_cost equals the accumulated weighted residuals at the build pose") {
  std::mt19937_64 rng(6);
  OptimizerConfig cfg;
  const PoseSE3 T = exp_se3(Twist{random_vec(rng, 0.5), random_vec(rng, 0.5)});
  std::vector<ResidualTerm> terms;
  double sum = 0.0;
  for (int i = 0; i < 40; ++i) {
    const Vec3 anchor = random_vec(rng, 2.0);
    const Vec3 n = random_unit(rng);
    Point f;
    f.position = transform_point(inverse(T), anchor + n * 0.1);
    if (auto t = build_residual(f, T, make_plane(anchor, n), cfg)) {
      terms.push_back(*t);
      sum += t->weight * t->residual;
    }
  }
  CHECK(evaluate_cost(terms, T, cfg) == doctest::Approx(sum).epsilon(1e-12));
}
