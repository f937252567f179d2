#include "carloam/metrics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "carloam/kdtree.hpp"

namespace carloam {

std::vector<AssociatedPair> associate(const Trajectory& gt, const Trajectory& est,
                                      double max_dt) {
  std::vector<AssociatedPair> pairs;
  if (est.empty()) return pairs;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    // est timestamps are sorted; nearest by binary search, earlier on ties.
    const double t = gt[i].timestamp;
    std::size_t lo = std::lower_bound(est.begin(), est.end(), t,
                                      [](const StampedPose& p, double v) {
                                        return p.timestamp < v;
                                      }) -
                     est.begin();
    std::size_t best = lo < est.size() ? lo : est.size() - 1;
    if (lo > 0 && (lo == est.size() ||
                   std::abs(est[lo - 1].timestamp - t) <= std::abs(est[lo].timestamp - t)))
      best = lo - 1;
    if (std::abs(est[best].timestamp - t) <= max_dt) pairs.push_back({i, best});
  }
  return pairs;
}

namespace {

// Rigid (scale = 1) least-squares alignment mapping est points onto gt.
PoseSE3 umeyama_rigid(const std::vector<Vec3>& gt, const std::vector<Vec3>& est) {
  const double n = static_cast<double>(gt.size());
  Vec3 mu_gt = Vec3::Zero(), mu_est = Vec3::Zero();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    mu_gt += gt[i];
    mu_est += est[i];
  }
  mu_gt /= n;
  mu_est /= n;
  Mat3 W = Mat3::Zero();
  for (std::size_t i = 0; i < gt.size(); ++i)
    W += (gt[i] - mu_gt) * (est[i] - mu_est).transpose();
  Eigen::JacobiSVD<Mat3> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) S(2, 2) = -1.0;
  PoseSE3 T;
  T.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  T.translation = mu_gt - T.rotation * mu_est;
  return T;
}

PoseSE3 relative(const PoseSE3& a, const PoseSE3& b) { return compose(inverse(a), b); }

}  // namespace

double ate_rmse(const Trajectory& gt, const Trajectory& est, double max_dt) {
  const auto pairs = associate(gt, est, max_dt);
  if (pairs.size() < 2) throw std::invalid_argument("ate_rmse: fewer than 2 associated poses");
  std::vector<Vec3> pg, pe;
  pg.reserve(pairs.size());
  pe.reserve(pairs.size());
  for (const auto& pr : pairs) {
    pg.push_back(gt[pr.gt_index].pose.translation);
    pe.push_back(est[pr.est_index].pose.translation);
  }
  const PoseSE3 T = umeyama_rigid(pg, pe);
  double sum = 0.0;
  for (std::size_t i = 0; i < pg.size(); ++i)
    sum += (pg[i] - transform_point(T, pe[i])).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pg.size()));
}

RpeSeries rpe(const Trajectory& gt, const Trajectory& est, int delta, double max_dt) {
  const auto pairs = associate(gt, est, max_dt);
  if (delta < 1 || static_cast<std::size_t>(delta) >= pairs.size())
    throw std::invalid_argument("rpe: delta out of range for the associated trajectory");
  RpeSeries out;
  for (std::size_t i = 0; i + delta < pairs.size(); ++i) {
    const PoseSE3& g0 = gt[pairs[i].gt_index].pose;
    const PoseSE3& g1 = gt[pairs[i + delta].gt_index].pose;
    const PoseSE3& e0 = est[pairs[i].est_index].pose;
    const PoseSE3& e1 = est[pairs[i + delta].est_index].pose;
    const PoseSE3 err = compose(inverse(relative(g0, g1)), relative(e0, e1));
    out.trans_m.push_back(err.translation.norm());
    out.rot_deg.push_back(rotation_angle(err.rotation) * 180.0 / std::numbers::pi);
  }
  return out;
}

ConsistencyReport consistency_ratio(const std::vector<std::vector<Vec3>>& frames,
                                    const std::vector<double>& thresholds) {
  if (frames.size() < 2)
    throw std::invalid_argument("consistency_ratio: need at least 2 frames");
  ConsistencyReport rep;
  rep.thresholds = thresholds;
  for (std::size_t f = 0; f + 1 < frames.size(); ++f) {
    const auto& earlier = frames[f];
    const auto& later = frames[f + 1];
    if (earlier.empty() || later.empty()) continue;
    KdTree tree;
    tree.build(earlier);
    std::vector<std::size_t> below(thresholds.size(), 0);
    for (const auto& p : later) {
      const double d = std::sqrt(tree.knn(p, 1).front().dist2);
      for (std::size_t t = 0; t < thresholds.size(); ++t)
        if (d < thresholds[t]) ++below[t];
    }
    std::vector<double> row(thresholds.size());
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      row[t] = static_cast<double>(below[t]) / static_cast<double>(later.size());
    rep.per_pair.push_back(std::move(row));
  }
  rep.average.assign(thresholds.size(), 0.0);
  if (!rep.per_pair.empty()) {
    for (const auto& row : rep.per_pair)
      for (std::size_t t = 0; t < row.size(); ++t) rep.average[t] += row[t];
    for (auto& a : rep.average) a /= static_cast<double>(rep.per_pair.size());
  }
  return rep;
}

}  // namespace carloam
