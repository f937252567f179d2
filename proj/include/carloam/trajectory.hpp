#pragma once

#include <vector>

#include "carloam/se3.hpp"

namespace carloam {

/// Timestamp in seconds plus the world-frame pose at that time.
struct StampedPose {
  double timestamp = 0.0;
  PoseSE3 pose;
};

using Trajectory = std::vector<StampedPose>;

}  // namespace carloam
