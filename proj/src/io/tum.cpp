#include "carloam/io/tum.hpp"

#include <Eigen/Geometry>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace carloam {

void write_tum(const std::string& path, const Trajectory& traj,
               const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  for (const auto& c : comments) out << "# " << c << "\n";
  char line[256];
  for (const auto& sp : traj) {
    Eigen::Quaterniond q(sp.pose.rotation);
    q.normalize();
    if (q.w() < 0.0 ||
        (q.w() == 0.0 && (q.x() < 0.0 || (q.x() == 0.0 && (q.y() < 0.0 ||
         (q.y() == 0.0 && q.z() < 0.0))))))
      q.coeffs() = -q.coeffs();
    std::snprintf(line, sizeof(line), "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n",
                  sp.timestamp, sp.pose.translation.x(), sp.pose.translation.y(),
                  sp.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
    out << line;
  }
}

Trajectory read_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory: " + path);
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(row >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw std::runtime_error("malformed trajectory row: " + line);
    StampedPose sp;
    sp.timestamp = t;
    sp.pose.translation = Vec3(tx, ty, tz);
    sp.pose.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    traj.push_back(sp);
  }
  return traj;
}

}  // namespace carloam
