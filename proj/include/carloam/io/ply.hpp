// PLY point cloud I/O. Scans are binary little-endian float32 x/y/z/intensity
// with an optional float64 per-point time; a whitespace text `x y z intensity`
// fallback is accepted. Map export adds uint8 red/green/blue.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "carloam/global_map.hpp"
#include "carloam/types.hpp"

namespace carloam {

/// Parse failure in an otherwise readable file; callers may skip the cloud.
class MalformedCloud : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads binary or ascii PLY; non-PLY files fall back to text rows.
/// Throws std::runtime_error when the file cannot be opened and
/// MalformedCloud when it opens but does not parse.
Scan read_ply_scan(const std::string& path);

/// Binary little-endian; the time property is present iff every point has one.
void write_ply_scan(const std::string& path, const Scan& scan);

/// x,y,z float32 + red,green,blue uint8; colorless points export white.
void write_ply_map(const std::string& path, const std::vector<MapPoint>& points);

}  // namespace carloam
