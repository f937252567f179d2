// Synthetic ground-truth world: colored planar patches, a raster-pattern
// raycast LiDAR, a distortion-aware raycast camera renderer, dataset export
// and outlier injection.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carloam/camera.hpp"
#include "carloam/trajectory.hpp"
#include "carloam/types.hpp"

namespace carloam {

/// Finite rectangle: origin + a*u_axis + b*v_axis, a in [0,extent_u],
/// b in [0,extent_v]. Axes unit and orthogonal after loading.
struct Patch {
  Vec3 origin = Vec3::Zero();
  Vec3 u_axis = Vec3::UnitX();
  Vec3 v_axis = Vec3::UnitY();
  double extent_u = 1.0;
  double extent_v = 1.0;
  RgbColor albedo{128, 128, 128};

  Vec3 normal() const { return u_axis.cross(v_axis).normalized(); }
};

struct SyntheticScene {
  std::vector<Patch> patches;
  Trajectory trajectory;  // ground truth, seconds
};

/// Raster scan pattern covering the sensor field of view line by line.
struct LidarSpec {
  double fov_h_deg = 70.4;
  double fov_v_deg = 77.2;
  int lines = 32;
  int cols = 200;
  double range_noise = 0.005;  // sigma_r, meters
  double min_range = 0.15;
  double max_range = 60.0;
  double scan_period = 0.1;  // seconds; spread across per-point time offsets
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

/// Scene JSON: {"patches": [{origin, u_axis, v_axis, extent_u, extent_v,
/// albedo_rgb}], "trajectory": [{t, position, quaternion_xyzw | rpy_deg}]}.
SyntheticScene load_scene(const std::string& path);
void save_scene(const SyntheticScene& scene, const std::string& path);

/// "corridor" or "room"; throws std::invalid_argument otherwise.
SyntheticScene builtin_scene(const std::string& name);

/// Bounding box over all patch corners.
Aabb scene_bounds(const SyntheticScene& scene);

/// Nearest patch hit along origin + t*dir, t in (t_min, t_max]; returns the
/// ray parameter and optionally the hit patch.
std::optional<double> raycast(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir,
                              double t_min, double t_max, const Patch** hit = nullptr);

/// One raster scan from world pose T_WL; points in the LiDAR frame with
/// intensity 1 and per-point time, acquisition order line-by-line.
Scan simulate_scan(const SyntheticScene& scene, const LidarSpec& lidar, const PoseSE3& T_WL,
                   std::int64_t timestamp_ns, std::uint64_t seed);

/// Per-pixel raycast through the inverse distortion; surfaces render with
/// their albedo, misses black.
Image render_image(const SyntheticScene& scene, const CameraModel& camera, const PoseSE3& T_WL,
                   std::int64_t timestamp_ns);

/// Intrinsics/extrinsics used by generated datasets (roughly a 70 x 48 degree
/// camera mounted near the LiDAR origin).
CameraModel default_camera();

struct GeneratedDataset {
  std::string manifest_path;
  std::string calib_path;
  std::string groundtruth_path;
  std::string scene_path;
};

/// Renders the whole dataset under out_dir: scans/, images/, manifest.csv,
/// calib.json, groundtruth.txt, scene.json. Deterministic for a fixed seed.
GeneratedDataset generate(const SyntheticScene& scene, const CameraModel& camera,
                          const LidarSpec& lidar, std::uint64_t seed,
                          const std::string& out_dir);

/// Replaces round(fraction*N) random points with points uniform in bounds.
Scan inject_outliers(const Scan& scan, double fraction, std::uint64_t seed, const Aabb& bounds);

/// Same replacement applied to extracted features; replaced points also get
/// uniform random colors when they carried one.
void corrupt_features(FeatureCloud& features, double fraction, std::uint64_t seed,
                      const Aabb& bounds);

}  // namespace carloam
