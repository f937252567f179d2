// End-to-end batch odometry: manifest in, trajectory + map + run report out.
// Scans run strictly in timestamp order; each is colored by its paired image,
// reduced to features, aligned to the map, then inserted.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carloam/camera.hpp"
#include "carloam/features.hpp"
#include "carloam/global_map.hpp"
#include "carloam/io/manifest.hpp"
#include "carloam/optimizer.hpp"
#include "carloam/trajectory.hpp"

namespace carloam {

/// Feature-level outlier hook for robustness experiments: replaces the given
/// fraction of extracted feature points with random points in the scan's
/// bounding box (random colors too) before alignment.
struct OutlierInjection {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  FeatureConfig features;
  OptimizerConfig optimizer;
  MapConfig map;
  bool coloring_enabled = true;
  double max_pairing_gap_ms = 100.0;
  int threads = 1;
  bool save_registered_frames = false;  // world-frame scan PLYs for consistency eval
  OutlierInjection outlier_injection;
};

/// Index of the image minimizing |t_image - scan_ts|, earlier on ties;
/// absent when the minimum gap exceeds max_gap_ms.
std::optional<std::size_t> pair_image(std::int64_t scan_ts,
                                      const std::vector<ManifestEntry>& images,
                                      double max_gap_ms);

/// Per-scan processing summary for the run report.
struct ScanRecord {
  std::int64_t timestamp_ns = 0;
  PoseSE3 pose;
  int iterations = 0;
  double final_cost = 0.0;
  InlierStats inliers;
  bool degenerate = false;
  bool insufficient = false;
  bool converged = false;
  bool colored = false;            // an image was paired
  bool colorless_features = false;  // image present but no feature got a color
  std::size_t edges = 0;
  std::size_t planars = 0;
  double seconds = 0.0;
};

/// Sequential odometry state. Feed scans in timestamp order.
class Pipeline {
 public:
  Pipeline(const PipelineConfig& cfg, std::optional<CameraModel> camera);

  /// Colorize (when an image is given) -> extract -> align -> map insert.
  ScanRecord process_scan(const Scan& scan, const Image* image);

  const GlobalMap& map() const { return map_; }
  const Trajectory& trajectory() const { return trajectory_; }
  const std::vector<ScanRecord>& records() const { return records_; }

 private:
  PoseSE3 initial_guess() const;

  PipelineConfig cfg_;
  std::optional<CameraModel> camera_;
  GlobalMap map_;
  Trajectory trajectory_;
  std::vector<ScanRecord> records_;
  std::size_t scan_index_ = 0;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<ScanRecord> records;
  std::vector<std::string> warnings;
  std::string trajectory_path;
  std::string map_path;
  std::string report_path;
  bool any_low_confidence = false;
};

/// Batch run over a manifest; writes trajectory.txt (TUM), map.ply and
/// report.json into out_dir atomically (tmp file + rename). Optional
/// frames/ directory with registered world-frame scans.
RunResult run_pipeline(const DatasetManifest& manifest, const std::optional<CameraModel>& camera,
                       const PipelineConfig& cfg, const std::string& out_dir);

}  // namespace carloam
