// Exact k-nearest-neighbor search over a static point set.
//
// Results are ordered by (squared distance, insertion index), so ties are
// broken by insertion order and match a stable brute-force scan bit for bit.
// Queries are const and safe to run concurrently; build is exclusive.

#pragma once

#include <vector>

#include "carloam/types.hpp"

namespace carloam {

class KdTree {
 public:
  struct Neighbor {
    double dist2 = 0.0;
    int index = -1;  // index into the array passed to build()
  };

  void build(const std::vector<Vec3>& points);
  void clear();

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }

  /// k nearest points to q, ascending by (dist2, index). Returns fewer than
  /// k entries only when the tree holds fewer points.
  std::vector<Neighbor> knn(const Vec3& q, int k) const;

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  int build_range(int begin, int end, int depth);
  void search(int node, const Vec3& q, int k, std::vector<Neighbor>& best) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;  // permutation of insertion indices
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace carloam
