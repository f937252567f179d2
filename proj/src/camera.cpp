#include "carloam/camera.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace carloam {

Vec3 lidar_to_camera(const CameraModel& model, const Vec3& p) {
  return transform_point(model.T_CL, p);
}

Eigen::Vector2d distort(const Distortion& d, double x, double y) {
  const double r2 = x * x + y * y;
  const double r4 = r2 * r2;
  const double r6 = r4 * r2;
  const double radial = 1.0 + d.k1 * r2 + d.k2 * r4 + d.k3 * r6;
  const double xd = x * radial + 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x);
  const double yd = y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y;
  return {xd, yd};
}

Eigen::Vector2d undistort(const Distortion& d, double xd, double yd) {
  double x = xd;
  double y = yd;
  for (int i = 0; i < 20; ++i) {
    const double r2 = x * x + y * y;
    const double r4 = r2 * r2;
    const double radial = 1.0 + d.k1 * r2 + d.k2 * r4 + d.k3 * r4 * r2;
    const double dx = 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x);
    const double dy = d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y;
    x = (xd - dx) / radial;
    y = (yd - dy) / radial;
  }
  return {x, y};
}

std::optional<PixelCoord> project(const CameraModel& model, const Vec3& cp) {
  if (cp.z() <= model.z_min) return std::nullopt;
  const Eigen::Vector2d nd = distort(model.distortion, cp.x() / cp.z(), cp.y() / cp.z());
  const double u = model.fx * nd.x() + model.cx;
  const double v = model.fy * nd.y() + model.cy;
  if (u < 0.0 || u >= model.width || v < 0.0 || v >= model.height) return std::nullopt;
  return PixelCoord{u, v};
}

namespace {

std::optional<RgbColor> sample(const CameraModel& model, const Image& img, const Vec3& p) {
  const auto px = project(model, lidar_to_camera(model, p));
  if (!px) return std::nullopt;
  const int xi = std::min(static_cast<int>(std::lround(px->u)), model.width - 1);
  const int yi = std::min(static_cast<int>(std::lround(px->v)), model.height - 1);
  return img.at(xi, yi);
}

}  // namespace

std::vector<Point> colorize_serial(const CameraModel& model, const Image& img,
                                   const std::vector<Point>& cloud) {
  std::vector<Point> out;
  out.reserve(cloud.size());
  for (const Point& p : cloud) {
    if (auto c = sample(model, img, p.position)) {
      Point q = p;
      q.color = *c;
      out.push_back(q);
    }
  }
  return out;
}

std::vector<Point> colorize(const CameraModel& model, const Image& img,
                            const std::vector<Point>& cloud, int threads) {
  if (threads == 1) return colorize_serial(model, img, cloud);

  // Sample into per-point slots, then compact in order so the output does
  // not depend on the thread count.
  std::vector<std::optional<RgbColor>> slots(cloud.size());
  const auto n = static_cast<std::int64_t>(cloud.size());
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : 1)
  for (std::int64_t i = 0; i < n; ++i) {
    slots[i] = sample(model, img, cloud[i].position);
  }
  std::vector<Point> out;
  out.reserve(cloud.size());
  for (std::int64_t i = 0; i < n; ++i) {
    if (slots[i]) {
      Point q = cloud[i];
      q.color = *slots[i];
      out.push_back(q);
    }
  }
  return out;
}

void attach_colors(const CameraModel& model, const Image& img, std::vector<Point>& points) {
  for (Point& p : points) {
    p.color = sample(model, img, p.position);
  }
}

CameraModel load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration file: " + path);
  nlohmann::json j;
  in >> j;

  CameraModel m;
  m.fx = j.at("fx").get<double>();
  m.fy = j.at("fy").get<double>();
  m.cx = j.at("cx").get<double>();
  m.cy = j.at("cy").get<double>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  const auto d = j.at("distortion").get<std::vector<double>>();
  if (d.size() != 5) throw std::runtime_error("calibration: distortion must have 5 entries");
  m.distortion = Distortion{d[0], d[1], d[2], d[3], d[4]};
  const auto t = j.at("T_CL").get<std::vector<double>>();
  if (t.size() != 16) throw std::runtime_error("calibration: T_CL must have 16 entries");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m.T_CL.rotation(r, c) = t[4 * r + c];
    m.T_CL.translation(r) = t[4 * r + 3];
  }
  if (j.contains("z_min")) m.z_min = j["z_min"].get<double>();
  return m;
}

void save_calibration(const CameraModel& m, const std::string& path) {
  nlohmann::json j;
  j["fx"] = m.fx;
  j["fy"] = m.fy;
  j["cx"] = m.cx;
  j["cy"] = m.cy;
  j["width"] = m.width;
  j["height"] = m.height;
  j["distortion"] = {m.distortion.k1, m.distortion.k2, m.distortion.p1,
                     m.distortion.p2, m.distortion.k3};
  std::vector<double> t(16, 0.0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t[4 * r + c] = m.T_CL.rotation(r, c);
    t[4 * r + 3] = m.T_CL.translation(r);
  }
  t[15] = 1.0;
  j["T_CL"] = t;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write calibration file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace carloam
