#include "carloam/global_map.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>

namespace carloam {
namespace {

std::array<std::int64_t, 3> voxel_key(const Vec3& p, double s) {
  return {static_cast<std::int64_t>(std::floor(p.x() / s)),
          static_cast<std::int64_t>(std::floor(p.y() / s)),
          static_cast<std::int64_t>(std::floor(p.z() / s))};
}

Vec3 voxel_center(const std::array<std::int64_t, 3>& k, double s) {
  return Vec3((k[0] + 0.5) * s, (k[1] + 0.5) * s, (k[2] + 0.5) * s);
}

// Sample covariance of the neighbor positions about their mean.
// Returns eigenvalues ascending with matching unit eigenvectors.
struct EigenDecomp {
  Vec3 values;  // ascending
  Mat3 vectors; // columns match values
  Vec3 mean;
};

EigenDecomp neighbor_covariance(const std::vector<MapPoint>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p.position;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p.position - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return {es.eigenvalues(), es.eigenvectors(), mean};
}

// Deterministic sign convention so results do not depend on solver internals.
Vec3 canonical_sign(Vec3 v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace

std::optional<EdgeCorrespondence> validate_edge(const Vec3& query,
                                                std::vector<MapPoint> neighbors,
                                                const MapConfig& cfg) {
  if (neighbors.size() < 2) return std::nullopt;
  const EigenDecomp ed = neighbor_covariance(neighbors);
  const double l1 = ed.values[2], l2 = ed.values[1];
  if (l1 < cfg.edge_eigen_ratio * l2) return std::nullopt;

  Vec3 dir;
  if (cfg.edge_direction_from_endpoints) {
    // Two-point chord through the extreme neighbors along the dominant axis.
    const Vec3 axis = ed.vectors.col(2);
    std::size_t lo = 0, hi = 0;
    double tlo = axis.dot(neighbors[0].position), thi = tlo;
    for (std::size_t i = 1; i < neighbors.size(); ++i) {
      const double t = axis.dot(neighbors[i].position);
      if (t < tlo) { tlo = t; lo = i; }
      if (t > thi) { thi = t; hi = i; }
    }
    dir = neighbors[hi].position - neighbors[lo].position;
    const double len = dir.norm();
    if (len < 1e-12) return std::nullopt;
    dir /= len;
  } else {
    dir = ed.vectors.col(2);
  }
  dir = canonical_sign(dir);

  EdgeCorrespondence c;
  c.query = query;
  c.anchor = neighbors.front();
  c.neighbors = std::move(neighbors);
  c.direction = dir;
  return c;
}

std::optional<PlaneCorrespondence> validate_plane(const Vec3& query,
                                                  std::vector<MapPoint> neighbors,
                                                  const MapConfig& cfg) {
  if (neighbors.size() < 3) return std::nullopt;
  const EigenDecomp ed = neighbor_covariance(neighbors);
  const double l1 = ed.values[2], l2 = ed.values[1], l3 = ed.values[0];
  // A fitted plane needs spread in two directions; collinear neighborhoods
  // (l2 ~ 0) leave the normal undetermined.
  if (l2 <= 1e-9 * l1) return std::nullopt;
  if (l3 > cfg.plane_eigen_ratio * l2) return std::nullopt;

  const Vec3 n = canonical_sign(ed.vectors.col(0));
  for (const auto& p : neighbors) {
    if (std::abs(n.dot(p.position - ed.mean)) > cfg.plane_fit_tol) return std::nullopt;
  }

  PlaneCorrespondence c;
  c.query = query;
  c.anchor = neighbors.front();
  c.neighbors = std::move(neighbors);
  c.normal = n;
  return c;
}

std::size_t FeatureStore::KeyHash::operator()(const std::array<std::int64_t, 3>& k) const {
  // Boost-style hash combine over the three coordinates.
  std::size_t h = 0;
  for (std::int64_t v : k) {
    h ^= std::hash<std::int64_t>()(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

void FeatureStore::insert(const std::vector<MapPoint>& points) {
  for (const auto& p : points) {
    const auto key = voxel_key(p.position, voxel_size_);
    const Vec3 center = voxel_center(key, voxel_size_);
    auto it = voxels_.find(key);
    if (it == voxels_.end()) {
      voxels_.emplace(key, points_.size());
      points_.push_back(p);
      dirty_ = true;
    } else {
      MapPoint& cur = points_[it->second];
      const double d_new = (p.position - center).squaredNorm();
      const double d_cur = (cur.position - center).squaredNorm();
      if (d_new < d_cur) {
        cur = p;
        dirty_ = true;
      }
    }
  }
}

void FeatureStore::rebuild_index() {
  if (!dirty_) return;
  std::vector<Vec3> pos(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) pos[i] = points_[i].position;
  index_.build(pos);
  dirty_ = false;
}

std::vector<MapPoint> FeatureStore::knn(const Vec3& q, int k) const {
  std::vector<MapPoint> out;
  for (const auto& nb : index_.knn(q, k)) out.push_back(points_[nb.index]);
  return out;
}

void GlobalMap::insert(const std::vector<MapPoint>& edges,
                       const std::vector<MapPoint>& planars) {
  edges_.insert(edges);
  planars_.insert(planars);
  edges_.rebuild_index();
  planars_.rebuild_index();
}

}  // namespace carloam
