#include "carloam/synth.hpp"

#include <json.hpp>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "carloam/io/image_io.hpp"
#include "carloam/io/manifest.hpp"
#include "carloam/io/ply.hpp"
#include "carloam/io/tum.hpp"

namespace carloam {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (k + 1));
}

Vec3 parse_vec3(const nlohmann::json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

nlohmann::json dump_vec3(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Mat3 rpy_deg_to_rotation(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw * kDegToRad, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch * kDegToRad, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll * kDegToRad, Vec3::UnitX()))
      .toRotationMatrix();
}

}  // namespace

SyntheticScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene: " + path);
  nlohmann::json j;
  in >> j;

  SyntheticScene scene;
  for (const auto& pj : j.at("patches")) {
    Patch p;
    p.origin = parse_vec3(pj.at("origin"));
    p.u_axis = parse_vec3(pj.at("u_axis"));
    p.v_axis = parse_vec3(pj.at("v_axis"));
    p.extent_u = pj.at("extent_u");
    p.extent_v = pj.at("extent_v");
    const auto& c = pj.at("albedo_rgb");
    p.albedo = RgbColor{c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(),
                        c.at(2).get<std::uint8_t>()};
    // Orthonormalize so patch parameterization stays rectangular.
    const double ul = p.u_axis.norm();
    if (ul < 1e-12) throw std::runtime_error("scene patch with zero u_axis");
    p.u_axis /= ul;
    p.v_axis -= p.v_axis.dot(p.u_axis) * p.u_axis;
    const double vl = p.v_axis.norm();
    if (vl < 1e-12) throw std::runtime_error("scene patch axes are parallel");
    p.v_axis /= vl;
    scene.patches.push_back(p);
  }
  for (const auto& wj : j.at("trajectory")) {
    StampedPose sp;
    sp.timestamp = wj.at("t");
    sp.pose.translation = parse_vec3(wj.at("position"));
    if (wj.contains("quaternion_xyzw")) {
      const auto& q = wj.at("quaternion_xyzw");
      sp.pose.rotation =
          Eigen::Quaterniond(q.at(3), q.at(0), q.at(1), q.at(2)).normalized().toRotationMatrix();
    } else if (wj.contains("rpy_deg")) {
      const auto& r = wj.at("rpy_deg");
      sp.pose.rotation = rpy_deg_to_rotation(r.at(0), r.at(1), r.at(2));
    }
    scene.trajectory.push_back(sp);
  }
  return scene;
}

void save_scene(const SyntheticScene& scene, const std::string& path) {
  nlohmann::json j;
  j["patches"] = nlohmann::json::array();
  for (const auto& p : scene.patches) {
    nlohmann::json pj;
    pj["origin"] = dump_vec3(p.origin);
    pj["u_axis"] = dump_vec3(p.u_axis);
    pj["v_axis"] = dump_vec3(p.v_axis);
    pj["extent_u"] = p.extent_u;
    pj["extent_v"] = p.extent_v;
    pj["albedo_rgb"] = nlohmann::json::array({p.albedo.r, p.albedo.g, p.albedo.b});
    j["patches"].push_back(pj);
  }
  j["trajectory"] = nlohmann::json::array();
  for (const auto& sp : scene.trajectory) {
    nlohmann::json wj;
    wj["t"] = sp.timestamp;
    wj["position"] = dump_vec3(sp.pose.translation);
    Eigen::Quaterniond q(sp.pose.rotation);
    q.normalize();
    wj["quaternion_xyzw"] = nlohmann::json::array({q.x(), q.y(), q.z(), q.w()});
    j["trajectory"].push_back(wj);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene: " + path);
  out << j.dump(2) << "\n";
}

namespace {

SyntheticScene corridor_scene() {
  SyntheticScene s;
  auto add = [&](Vec3 o, Vec3 u, Vec3 v, double eu, double ev, RgbColor c) {
    s.patches.push_back(Patch{o, u, v, eu, ev, c});
  };
  const double L = 12.0;
  add({0, -2, -1}, {1, 0, 0}, {0, 1, 0}, L, 4, {120, 120, 120});  // floor
  add({0, -2, 2}, {1, 0, 0}, {0, 1, 0}, L, 4, {175, 175, 175});   // ceiling
  const RgbColor pal[6] = {{200, 60, 50},  {60, 140, 200}, {70, 170, 90},
                           {210, 170, 60}, {150, 90, 180}, {90, 200, 190}};
  for (int i = 0; i < 6; ++i) {
    add({2.0 * i, 2, -1}, {1, 0, 0}, {0, 0, 1}, 2, 3, pal[i]);
    add({2.0 * i, -2, -1}, {1, 0, 0}, {0, 0, 1}, 2, 3, pal[(i + 3) % 6]);
  }
  add({L, -2, -1}, {0, 1, 0}, {0, 0, 1}, 4, 3, {230, 220, 200});  // end wall
  // Fins jutting inward give the scene stable vertical edge structure.
  for (int i = 1; i <= 5; ++i) {
    const double x = 2.0 * i;
    if (i % 2)
      add({x, 2, -1}, {0, -1, 0}, {0, 0, 1}, 0.4, 3, {240, 235, 225});
    else
      add({x, -2, -1}, {0, 1, 0}, {0, 0, 1}, 0.4, 3, {45, 45, 55});
  }
  for (int k = 0; k < 50; ++k) {
    StampedPose sp;
    sp.timestamp = 0.1 * k;
    sp.pose.translation = Vec3(0.18 * k, 0.25 * std::sin(2.0 * std::numbers::pi * k / 25.0),
                               0.1 * std::sin(2.0 * std::numbers::pi * k / 40.0));
    const double yaw = 3.0 * std::sin(2.0 * std::numbers::pi * k / 25.0);
    sp.pose.rotation = rpy_deg_to_rotation(0, 0, yaw);
    s.trajectory.push_back(sp);
  }
  return s;
}

SyntheticScene room_scene() {
  SyntheticScene s;
  auto add = [&](Vec3 o, Vec3 u, Vec3 v, double eu, double ev, RgbColor c) {
    s.patches.push_back(Patch{o, u, v, eu, ev, c});
  };
  add({-4, -3, -1}, {1, 0, 0}, {0, 1, 0}, 8, 6, {110, 110, 110});  // floor
  add({-4, -3, 2}, {1, 0, 0}, {0, 1, 0}, 8, 6, {180, 180, 180});   // ceiling
  add({-4, -3, -1}, {0, 1, 0}, {0, 0, 1}, 6, 3, {190, 180, 160});  // x = -4
  add({4, -3, -1}, {0, 1, 0}, {0, 0, 1}, 6, 3, {160, 180, 190});   // x = +4
  add({-4, -3, -1}, {1, 0, 0}, {0, 0, 1}, 8, 3, {180, 160, 190});  // y = -3
  add({-4, 3, -1}, {1, 0, 0}, {0, 0, 1}, 8, 3, {160, 190, 170});   // y = +3
  // Interior box, 0.6 x 0.6 footprint, 1.2 m tall.
  auto box = [&](Vec3 c0, double sx, double sy, double sz, RgbColor col) {
    add({c0.x(), c0.y(), c0.z()}, {0, 1, 0}, {0, 0, 1}, sy, sz, col);
    add({c0.x() + sx, c0.y(), c0.z()}, {0, 1, 0}, {0, 0, 1}, sy, sz, col);
    add({c0.x(), c0.y(), c0.z()}, {1, 0, 0}, {0, 0, 1}, sx, sz, col);
    add({c0.x(), c0.y() + sy, c0.z()}, {1, 0, 0}, {0, 0, 1}, sx, sz, col);
    add({c0.x(), c0.y(), c0.z() + sz}, {1, 0, 0}, {0, 1, 0}, sx, sy, col);
  };
  box({1.2, 0.7, -1}, 0.6, 0.6, 1.2, {200, 70, 60});
  box({-2.0, -1.5, -1}, 0.8, 0.5, 0.9, {60, 110, 200});
  for (int k = 0; k < 25; ++k) {
    StampedPose sp;
    sp.timestamp = 0.1 * k;
    sp.pose.translation = Vec3(-1.0 + 0.08 * k, -0.5 + 0.05 * k, 0.1);
    sp.pose.rotation = rpy_deg_to_rotation(0, 0, -20.0 + 1.6 * k);
    s.trajectory.push_back(sp);
  }
  return s;
}

}  // namespace

SyntheticScene builtin_scene(const std::string& name) {
  if (name == "corridor") return corridor_scene();
  if (name == "room") return room_scene();
  throw std::invalid_argument("unknown builtin scene: " + name);
}

Aabb scene_bounds(const SyntheticScene& scene) {
  Aabb b;
  bool first = true;
  for (const auto& p : scene.patches) {
    const Vec3 corners[4] = {p.origin, p.origin + p.extent_u * p.u_axis,
                             p.origin + p.extent_v * p.v_axis,
                             p.origin + p.extent_u * p.u_axis + p.extent_v * p.v_axis};
    for (const auto& c : corners) {
      if (first) {
        b.min = b.max = c;
        first = false;
      } else {
        b.min = b.min.cwiseMin(c);
        b.max = b.max.cwiseMax(c);
      }
    }
  }
  return b;
}

std::optional<double> raycast(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir,
                              double t_min, double t_max, const Patch** hit) {
  std::optional<double> best;
  for (const auto& p : scene.patches) {
    const Vec3 n = p.u_axis.cross(p.v_axis);  // unit when axes orthonormal
    const double denom = dir.dot(n);
    if (std::abs(denom) < 1e-12) continue;
    const double t = (p.origin - origin).dot(n) / denom;
    if (t <= t_min || t > t_max || (best && t >= *best)) continue;
    const Vec3 local = origin + t * dir - p.origin;
    const double a = local.dot(p.u_axis);
    const double b = local.dot(p.v_axis);
    if (a < 0.0 || a > p.extent_u || b < 0.0 || b > p.extent_v) continue;
    best = t;
    if (hit) *hit = &p;
  }
  return best;
}

Scan simulate_scan(const SyntheticScene& scene, const LidarSpec& lidar, const PoseSE3& T_WL,
                   std::int64_t timestamp_ns, std::uint64_t seed) {
  Scan out;
  out.timestamp_ns = timestamp_ns;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, lidar.range_noise > 0 ? lidar.range_noise : 1.0);
  for (int i = 0; i < lidar.lines; ++i) {
    const double el = (-lidar.fov_v_deg / 2.0 + (i + 0.5) * lidar.fov_v_deg / lidar.lines) *
                      kDegToRad;
    for (int j = 0; j < lidar.cols; ++j) {
      const double az = (-lidar.fov_h_deg / 2.0 + (j + 0.5) * lidar.fov_h_deg / lidar.cols) *
                        kDegToRad;
      const Vec3 d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const auto t = raycast(scene, T_WL.translation, T_WL.rotation * d, lidar.min_range,
                             lidar.max_range);
      if (!t) continue;
      const double r = *t + (lidar.range_noise > 0 ? noise(rng) : 0.0);
      Point p;
      p.position = d * r;
      p.intensity = 1.0;
      p.time = static_cast<double>(i * lidar.cols + j) /
               static_cast<double>(lidar.lines * lidar.cols) * lidar.scan_period;
      out.points.push_back(p);
    }
  }
  return out;
}

Image render_image(const SyntheticScene& scene, const CameraModel& camera, const PoseSE3& T_WL,
                   std::int64_t timestamp_ns) {
  Image img;
  img.width = camera.width;
  img.height = camera.height;
  img.timestamp_ns = timestamp_ns;
  img.pixels.assign(static_cast<std::size_t>(camera.width) * camera.height, RgbColor{0, 0, 0});
  const PoseSE3 T_WC = compose(T_WL, inverse(camera.T_CL));
  for (int py = 0; py < camera.height; ++py) {
    for (int px = 0; px < camera.width; ++px) {
      const double xd = (px + 0.5 - camera.cx) / camera.fx;
      const double yd = (py + 0.5 - camera.cy) / camera.fy;
      const Eigen::Vector2d xy = undistort(camera.distortion, xd, yd);
      const Vec3 dir_c(xy.x(), xy.y(), 1.0);
      const Patch* hit = nullptr;
      if (raycast(scene, T_WC.translation, T_WC.rotation * dir_c.normalized(), 1e-6, 1e4, &hit))
        img.at(px, py) = hit->albedo;
    }
  }
  return img;
}

CameraModel default_camera() {
  CameraModel cam;
  cam.width = 320;
  cam.height = 240;
  cam.fx = 228.5;
  cam.fy = 272.0;
  cam.cx = 160.0;
  cam.cy = 120.0;
  cam.distortion = Distortion{-0.05, 0.01, 0.001, -0.001, 0.0};
  // Camera z forward / x right / y down against LiDAR x forward / y left / z up.
  cam.T_CL.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  cam.T_CL.translation = Vec3(0.01, 0.02, 0.05);
  return cam;
}

GeneratedDataset generate(const SyntheticScene& scene, const CameraModel& camera,
                          const LidarSpec& lidar, std::uint64_t seed,
                          const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "scans");
  fs::create_directories(fs::path(out_dir) / "images");

  const std::string img_ext = png_supported() ? ".png" : ".ppm";
  std::vector<ManifestEntry> lidar_rows, image_rows;
  char name[64];
  for (std::size_t k = 0; k < scene.trajectory.size(); ++k) {
    const auto& sp = scene.trajectory[k];
    const auto ts = static_cast<std::int64_t>(std::llround(sp.timestamp * 1e9));

    const Scan scan = simulate_scan(scene, lidar, sp.pose, ts, mix_seed(seed, k));
    if (scan.points.empty())
      std::fprintf(stderr, "warning: pose %zu produced an empty scan\n", k);
    std::snprintf(name, sizeof(name), "scans/scan_%06zu.ply", k);
    write_ply_scan((fs::path(out_dir) / name).string(), scan);
    lidar_rows.push_back({ManifestEntry::Kind::kLidar, ts, name});

    const Image img = render_image(scene, camera, sp.pose, ts);
    std::snprintf(name, sizeof(name), "images/frame_%06zu%s", k, img_ext.c_str());
    write_image((fs::path(out_dir) / name).string(), img);
    image_rows.push_back({ManifestEntry::Kind::kImage, ts, name});
  }

  GeneratedDataset ds;
  ds.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  ds.calib_path = (fs::path(out_dir) / "calib.json").string();
  ds.groundtruth_path = (fs::path(out_dir) / "groundtruth.txt").string();
  ds.scene_path = (fs::path(out_dir) / "scene.json").string();

  std::vector<ManifestEntry> rows = lidar_rows;
  rows.insert(rows.end(), image_rows.begin(), image_rows.end());
  write_manifest(ds.manifest_path, rows);
  save_calibration(camera, ds.calib_path);
  write_tum(ds.groundtruth_path, scene.trajectory);
  save_scene(scene, ds.scene_path);
  return ds;
}

Scan inject_outliers(const Scan& scan, double fraction, std::uint64_t seed, const Aabb& bounds) {
  Scan out = scan;
  const std::size_t n = out.points.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k == 0) return out;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> ux(bounds.min.x(), bounds.max.x());
  std::uniform_real_distribution<double> uy(bounds.min.y(), bounds.max.y());
  std::uniform_real_distribution<double> uz(bounds.min.z(), bounds.max.z());
  for (std::size_t i = 0; i < k; ++i)
    out.points[idx[i]].position = Vec3(ux(rng), uy(rng), uz(rng));
  return out;
}

void corrupt_features(FeatureCloud& features, double fraction, std::uint64_t seed,
                      const Aabb& bounds) {
  const std::size_t ne = features.edges.size();
  const std::size_t n = ne + features.planars.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k == 0) return;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> ux(bounds.min.x(), bounds.max.x());
  std::uniform_real_distribution<double> uy(bounds.min.y(), bounds.max.y());
  std::uniform_real_distribution<double> uz(bounds.min.z(), bounds.max.z());
  std::uniform_int_distribution<int> uc(0, 255);
  for (std::size_t i = 0; i < k; ++i) {
    Point& p = idx[i] < ne ? features.edges[idx[i]] : features.planars[idx[i] - ne];
    p.position = Vec3(ux(rng), uy(rng), uz(rng));
    if (p.color)
      p.color = RgbColor{static_cast<std::uint8_t>(uc(rng)), static_cast<std::uint8_t>(uc(rng)),
                         static_cast<std::uint8_t>(uc(rng))};
  }
}

}  // namespace carloam
