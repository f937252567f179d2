// Edge/planar feature extraction from ordered scans: reliability filtering,
// scan-line segmentation, local smoothness, per-sector classification.

#pragma once

#include <vector>

#include "carloam/types.hpp"

namespace carloam {

struct FeatureConfig {
  // Reliability gates.
  double blind_radius = 0.1;      // m, drop returns closer than this
  double min_intensity = 1e-2;    // drop weak returns
  double fov_h_deg = 70.4;        // sensor field of view, horizontal
  double fov_v_deg = 77.2;        // vertical
  double fov_margin_deg = 2.0;    // drop points this close to the FoV edge
  double max_incidence_deg = 85.0;  // beam-to-surface-normal limit (grazing cut)
  double gap_abs = 0.3;           // m, occlusion gap floor
  double gap_frac = 0.05;         // fraction of range; gap = max(abs, frac*r)

  // Smoothness & classification.
  int window = 5;                 // half-width; |S| = 2*window
  int sectors = 6;                // equal index sectors per line
  int max_edges_per_sector = 2;
  int max_planars_per_sector = 4;
  double edge_threshold = 0.05;   // c above -> edge candidate
  double planar_threshold = 0.005;  // c below -> planar candidate
  double angular_split_factor = 3.0;  // new line when step > factor * median
};

/// One contiguous sweep segment, points in acquisition order.
struct ScanLine {
  std::vector<Point> points;
};

/// Drops blind-radius, low-intensity, FoV-fringe, grazing-incidence, and
/// occlusion-fringe points. Input order is acquisition order; output keeps it.
std::vector<Point> select_reliable(const std::vector<Point>& scan, const FeatureConfig& cfg);

/// Splits an ordered scan into lines on large angular steps (> factor * median
/// step). Range discontinuities do not split: the smoothness window must span
/// them so depth edges score high.
std::vector<ScanLine> organize_lines(const std::vector<Point>& scan, const FeatureConfig& cfg);

/// Local smoothness c = |sum_{j in S, j != i} (p_i - p_j)| / (|S| * |p_i|).
/// Requires `window` neighbors on both sides.
double smoothness(const ScanLine& line, int i, int window);

/// Full extraction: reliability filter, line split, per-sector classification.
/// threads <= 1 uses the serial reference path; any thread count yields
/// identical output (per-line results merged in line order).
FeatureCloud extract_features(const Scan& scan, const FeatureConfig& cfg, int threads = 1);

/// Serial reference implementation.
FeatureCloud extract_features_serial(const Scan& scan, const FeatureConfig& cfg);

}  // namespace carloam
