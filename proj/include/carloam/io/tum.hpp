// TUM trajectory text format: `timestamp tx ty tz qx qy qz qw` per line,
// timestamps in seconds, unit quaternion w-last. '#' lines are comments.

#pragma once

#include <string>
#include <vector>

#include "carloam/trajectory.hpp"

namespace carloam {

/// Comments (without the leading '#') are written first, one per line.
/// Quaternions are sign-canonicalized so identical poses serialize
/// identically.
void write_tum(const std::string& path, const Trajectory& traj,
               const std::vector<std::string>& comments = {});

/// Throws on open failure or malformed rows; comment lines are skipped.
Trajectory read_tum(const std::string& path);

}  // namespace carloam
