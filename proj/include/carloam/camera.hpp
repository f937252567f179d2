// Pinhole camera with 5-coefficient radial-tangential (Brown) distortion:
// LiDAR-to-camera transform, projection, pixel lookup and cloud coloring.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "carloam/se3.hpp"
#include "carloam/types.hpp"

namespace carloam {

/// 8-bit RGB image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<RgbColor> pixels;
  std::int64_t timestamp_ns = 0;

  const RgbColor& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  RgbColor& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
};

struct Distortion {
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0, k3 = 0.0;
};

struct CameraModel {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  Distortion distortion;
  PoseSE3 T_CL;  // extrinsic LiDAR -> camera
  int width = 0;
  int height = 0;
  double z_min = 0.01;  // points closer than this to the image plane are dropped
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

Vec3 lidar_to_camera(const CameraModel& model, const Vec3& p);

/// Apply Brown radial-tangential distortion to normalized coordinates.
Eigen::Vector2d distort(const Distortion& d, double x, double y);

/// Invert the distortion by fixed-point iteration (used by the synthetic
/// renderer; not on the odometry path).
Eigen::Vector2d undistort(const Distortion& d, double xd, double yd);

/// Project a camera-frame point through distortion and intrinsics.
/// Absent when behind the near plane or outside [0,w) x [0,h).
std::optional<PixelCoord> project(const CameraModel& model, const Vec3& cp);

/// Color the retained subset of a cloud from the image; points with absent
/// projection are dropped. Order preserved. OpenMP across points.
std::vector<Point> colorize(const CameraModel& model, const Image& img,
                            const std::vector<Point>& cloud, int threads = 1);

/// Serial reference for colorize, kept for tests and benchmarks.
std::vector<Point> colorize_serial(const CameraModel& model, const Image& img,
                                   const std::vector<Point>& cloud);

/// Attach colors in place but keep every point; feature points that fail
/// projection stay colorless and later receive neutral weight.
void attach_colors(const CameraModel& model, const Image& img, std::vector<Point>& points);

/// Load the calibration JSON ({fx, fy, cx, cy, distortion, T_CL, width, height}).
CameraModel load_calibration(const std::string& path);
void save_calibration(const CameraModel& model, const std::string& path);

}  // namespace carloam
