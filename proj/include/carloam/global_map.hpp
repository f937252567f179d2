// Incremental global feature map: voxel-deduplicated edge/planar stores with
// exact kNN queries and eigenvalue-based line/plane validation.
//
// Single writer, multiple readers: insert() and rebuild never overlap with
// queries; the optimizer runs read-only query batches between inserts.

#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "carloam/kdtree.hpp"
#include "carloam/types.hpp"

namespace carloam {

/// World-frame feature point with the color it was observed with.
struct MapPoint {
  Vec3 position = Vec3::Zero();
  std::optional<RgbColor> color;
};

struct MapConfig {
  double edge_voxel_size = 0.1;
  double planar_voxel_size = 0.2;
  int neighbors = 5;               // n nearest points per correspondence
  double edge_eigen_ratio = 3.0;   // accept edge if l1 >= ratio * l2
  double plane_eigen_ratio = 0.1;  // accept plane if l3 <= ratio * l2
  double plane_fit_tol = 0.1;      // max neighbor distance to the fitted plane, m
  bool edge_direction_from_endpoints = false;  // two-point direction instead of PCA
};

/// Validated line correspondence for an edge query point.
struct EdgeCorrespondence {
  Vec3 query = Vec3::Zero();
  std::vector<MapPoint> neighbors;  // ascending by distance to query
  Vec3 direction = Vec3::UnitZ();   // unit line direction
  MapPoint anchor;                  // nearest neighbor
};

/// Validated plane correspondence for a planar query point.
struct PlaneCorrespondence {
  Vec3 query = Vec3::Zero();
  std::vector<MapPoint> neighbors;
  Vec3 normal = Vec3::UnitZ();  // unit plane normal
  MapPoint anchor;
};

/// Covariance eigenanalysis of the neighbors; accepts when the spread is
/// line-like. Direction sign: first nonzero component positive.
std::optional<EdgeCorrespondence> validate_edge(const Vec3& query,
                                                std::vector<MapPoint> neighbors,
                                                const MapConfig& cfg);

/// Accepts when the spread is plane-like and every neighbor lies within
/// plane_fit_tol of the fitted plane.
std::optional<PlaneCorrespondence> validate_plane(const Vec3& query,
                                                  std::vector<MapPoint> neighbors,
                                                  const MapConfig& cfg);

/// One voxel-deduplicated point store with a rebuildable exact index.
class FeatureStore {
 public:
  explicit FeatureStore(double voxel_size = 0.1) : voxel_size_(voxel_size) {}

  void set_voxel_size(double s) { voxel_size_ = s; }

  /// Merge points: one representative per voxel, the point nearest the
  /// voxel center wins. Marks the index dirty.
  void insert(const std::vector<MapPoint>& points);

  /// Rebuild the kNN index over the current representatives.
  void rebuild_index();

  /// k nearest representatives, ascending, ties by insertion order.
  /// rebuild_index() must have run since the last insert.
  std::vector<MapPoint> knn(const Vec3& q, int k) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<MapPoint>& points() const { return points_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const;
  };

  double voxel_size_;
  std::vector<MapPoint> points_;
  std::unordered_map<std::array<std::int64_t, 3>, std::size_t, KeyHash> voxels_;
  KdTree index_;
  bool dirty_ = false;
};

class GlobalMap {
 public:
  explicit GlobalMap(const MapConfig& cfg = {})
      : cfg_(cfg), edges_(cfg.edge_voxel_size), planars_(cfg.planar_voxel_size) {}

  /// Insert world-frame features and refresh both indexes.
  void insert(const std::vector<MapPoint>& edges, const std::vector<MapPoint>& planars);

  const FeatureStore& edges() const { return edges_; }
  const FeatureStore& planars() const { return planars_; }
  const MapConfig& config() const { return cfg_; }
  bool empty() const { return edges_.size() == 0 && planars_.size() == 0; }

 private:
  MapConfig cfg_;
  FeatureStore edges_;
  FeatureStore planars_;
};

}  // namespace carloam
