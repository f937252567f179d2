// carloam - color-assisted robust LiDAR odometry and mapping
//
// Core point and pose value types shared across the library.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace carloam {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// 8-bit RGB triple as fetched from camera images.
struct RgbColor {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const RgbColor&, const RgbColor&) = default;
};

/// One LiDAR return in the sensor frame. Color is present only when the
/// point projected inside the paired image.
struct Point {
  Vec3 position = Vec3::Zero();
  double intensity = 0.0;
  std::optional<RgbColor> color;
  std::optional<double> time;  // per-point time offset within the scan, seconds
};

/// A decoded LiDAR scan, points in acquisition order.
struct Scan {
  std::int64_t timestamp_ns = 0;
  std::vector<Point> points;
};

/// Edge and planar feature subsets extracted from one scan.
struct FeatureCloud {
  std::int64_t timestamp_ns = 0;
  std::vector<Point> edges;
  std::vector<Point> planars;
};

}  // namespace carloam
