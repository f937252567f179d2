#include "carloam/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace carloam {

namespace {
constexpr int kLeafSize = 8;

inline bool better(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}
}  // namespace

void KdTree::build(const std::vector<Vec3>& points) {
  points_ = points;
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.clear();
  nodes_.reserve(points.size() / kLeafSize * 2 + 4);
  root_ = points_.empty() ? -1 : build_range(0, static_cast<int>(points_.size()), 0);
}

void KdTree::clear() {
  points_.clear();
  order_.clear();
  nodes_.clear();
  root_ = -1;
}

int KdTree::build_range(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Node node;
  node.begin = begin;
  node.end = end;

  if (end - begin <= kLeafSize) {
    nodes_[id] = node;
    return id;
  }

  // split on the axis of largest extent
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });

  node.axis = axis;
  node.split = points_[order_[mid]][axis];
  node.left = build_range(begin, mid, depth + 1);
  node.right = build_range(mid, end, depth + 1);
  nodes_[id] = node;
  return id;
}

std::vector<KdTree::Neighbor> KdTree::knn(const Vec3& q, int k) const {
  std::vector<Neighbor> best;
  if (root_ < 0 || k <= 0) return best;
  best.reserve(static_cast<std::size_t>(k) + 1);
  search(root_, q, k, best);
  return best;
}

void KdTree::search(int node_id, const Vec3& q, int k, std::vector<Neighbor>& best) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      const Neighbor cand{(points_[idx] - q).squaredNorm(), idx};
      if (static_cast<int>(best.size()) < k || better(cand, best.back())) {
        const auto pos = std::upper_bound(
            best.begin(), best.end(), cand,
            [](const Neighbor& a, const Neighbor& b) { return better(a, b); });
        best.insert(pos, cand);
        if (static_cast<int>(best.size()) > k) best.pop_back();
      }
    }
    return;
  }

  const double dq = q[node.axis] - node.split;
  const int near = dq < 0.0 ? node.left : node.right;
  const int far = dq < 0.0 ? node.right : node.left;
  search(near, q, k, best);
  // the far side may still hold an equal-distance point with a lower index
  if (static_cast<int>(best.size()) < k || dq * dq <= best.back().dist2) {
    search(far, q, k, best);
  }
}

}  // namespace carloam
