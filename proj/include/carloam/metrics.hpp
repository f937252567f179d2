// Trajectory and map-quality metrics: absolute trajectory error after rigid
// alignment, relative pose error over a frame delta, and the inter-frame
// nearest-neighbor consistency ratio.

#pragma once

#include <cstddef>
#include <vector>

#include "carloam/trajectory.hpp"
#include "carloam/types.hpp"

namespace carloam {

struct AssociatedPair {
  std::size_t gt_index = 0;
  std::size_t est_index = 0;
};

/// Nearest-timestamp association within max_dt seconds; ties pick the
/// earlier estimate. One pair per ground-truth pose at most.
std::vector<AssociatedPair> associate(const Trajectory& gt, const Trajectory& est,
                                      double max_dt = 0.01);

/// Closed-form rigid alignment (scale fixed to 1) of the associated estimate
/// onto ground truth, then RMSE of the translation residuals.
/// Throws std::invalid_argument with fewer than 2 associated pairs.
double ate_rmse(const Trajectory& gt, const Trajectory& est, double max_dt = 0.01);

struct RpeSeries {
  std::vector<double> trans_m;
  std::vector<double> rot_deg;
};

/// Relative pose error over a delta of `delta` associated frames:
/// E = (gt_i^-1 gt_{i+d})^-1 (est_i^-1 est_{i+d}).
/// Throws when delta < 1 or delta >= number of associated pairs.
RpeSeries rpe(const Trajectory& gt, const Trajectory& est, int delta, double max_dt = 0.01);

struct ConsistencyReport {
  std::vector<double> thresholds;             // meters
  std::vector<std::vector<double>> per_pair;  // [pair][threshold] fraction below
  std::vector<double> average;                // across pairs, per threshold
};

/// For each consecutive frame pair, the fraction of points in the later frame
/// whose nearest neighbor in the earlier frame lies below each threshold.
/// Empty frames are skipped. Throws with fewer than 2 frames.
ConsistencyReport consistency_ratio(const std::vector<std::vector<Vec3>>& frames,
                                    const std::vector<double>& thresholds);

}  // namespace carloam
