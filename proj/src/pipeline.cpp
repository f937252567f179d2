#include "carloam/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "carloam/io/image_io.hpp"
#include "carloam/io/ply.hpp"
#include "carloam/io/tum.hpp"
#include "carloam/synth.hpp"

namespace carloam {
namespace {

namespace fs = std::filesystem;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (k + 1));
}

Aabb cloud_bounds(const std::vector<Point>& pts) {
  Aabb b;
  bool first = true;
  for (const auto& p : pts) {
    if (first) {
      b.min = b.max = p.position;
      first = false;
    } else {
      b.min = b.min.cwiseMin(p.position);
      b.max = b.max.cwiseMax(p.position);
    }
  }
  return b;
}

std::vector<MapPoint> to_world(const std::vector<Point>& pts, const PoseSE3& T) {
  std::vector<MapPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(MapPoint{transform_point(T, p.position), p.color});
  return out;
}

}  // namespace

std::optional<std::size_t> pair_image(std::int64_t scan_ts,
                                      const std::vector<ManifestEntry>& images,
                                      double max_gap_ms) {
  if (images.empty()) return std::nullopt;
  std::size_t best = 0;
  std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::int64_t gap = std::abs(images[i].timestamp_ns - scan_ts);
    if (gap < best_gap) {  // strict: equidistant candidates keep the earlier
      best_gap = gap;
      best = i;
    }
  }
  if (static_cast<double>(best_gap) > max_gap_ms * 1e6) return std::nullopt;
  return best;
}

Pipeline::Pipeline(const PipelineConfig& cfg, std::optional<CameraModel> camera)
    : cfg_(cfg), camera_(std::move(camera)), map_(cfg.map) {}

PoseSE3 Pipeline::initial_guess() const {
  const std::size_t n = trajectory_.size();
  if (n == 0) return PoseSE3::identity();
  if (n == 1) return trajectory_.back().pose;
  const PoseSE3& a = trajectory_[n - 2].pose;
  const PoseSE3& b = trajectory_[n - 1].pose;
  return compose(b, compose(inverse(a), b));
}

ScanRecord Pipeline::process_scan(const Scan& scan, const Image* image) {
  const auto t0 = std::chrono::steady_clock::now();
  ScanRecord rec;
  rec.timestamp_ns = scan.timestamp_ns;

  Scan work = scan;
  if (image && camera_ && cfg_.coloring_enabled) {
    attach_colors(*camera_, *image, work.points);
    rec.colored = true;
  }

  FeatureCloud feats = extract_features(work, cfg_.features, cfg_.threads);
  if (cfg_.outlier_injection.fraction > 0.0 && !work.points.empty())
    corrupt_features(feats, cfg_.outlier_injection.fraction,
                     mix_seed(cfg_.outlier_injection.seed, scan_index_), cloud_bounds(work.points));
  rec.edges = feats.edges.size();
  rec.planars = feats.planars.size();
  if (rec.colored) {
    bool any_color = false;
    for (const auto& p : feats.edges) any_color = any_color || p.color.has_value();
    for (const auto& p : feats.planars) any_color = any_color || p.color.has_value();
    rec.colorless_features = !any_color;
  }

  const PoseSE3 init = initial_guess();
  PoseSE3 pose = init;
  if (!map_.empty()) {
    const AlignmentResult r = align(feats, map_, init, cfg_.optimizer, cfg_.threads);
    rec.iterations = r.iterations;
    rec.final_cost = r.final_cost;
    rec.inliers = r.inliers;
    rec.degenerate = r.degenerate;
    rec.insufficient = r.insufficient;
    rec.converged = r.converged;
    pose = r.degenerate ? init : r.pose;  // degeneracy keeps the motion prior
  }
  rec.pose = pose;

  map_.insert(to_world(feats.edges, pose), to_world(feats.planars, pose));
  trajectory_.push_back({static_cast<double>(scan.timestamp_ns) * 1e-9, pose});
  ++scan_index_;

  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  records_.push_back(rec);
  return rec;
}

namespace {

nlohmann::json record_json(const ScanRecord& r) {
  nlohmann::json j;
  j["timestamp_ns"] = r.timestamp_ns;
  j["iterations"] = r.iterations;
  j["final_cost"] = r.final_cost;
  j["edges"] = r.edges;
  j["planars"] = r.planars;
  j["inliers"] = {{"edge_accepted", r.inliers.edge_accepted},
                  {"plane_accepted", r.inliers.plane_accepted},
                  {"rejected_validation", r.inliers.rejected_validation},
                  {"rejected_distance", r.inliers.rejected_distance},
                  {"rejected_degenerate", r.inliers.rejected_degenerate}};
  j["degenerate"] = r.degenerate;
  j["insufficient"] = r.insufficient;
  j["converged"] = r.converged;
  j["colored"] = r.colored;
  j["colorless_features"] = r.colorless_features;
  j["seconds"] = r.seconds;
  return j;
}

template <typename WriteFn>
void atomic_write(const std::string& path, WriteFn&& fn) {
  const std::string tmp = path + ".tmp";
  fn(tmp);
  fs::rename(tmp, path);
}

}  // namespace

RunResult run_pipeline(const DatasetManifest& manifest, const std::optional<CameraModel>& camera,
                       const PipelineConfig& cfg, const std::string& out_dir) {
  if (manifest.lidar.empty()) throw std::runtime_error("no lidar entries in manifest");
  fs::create_directories(out_dir);
  if (cfg.save_registered_frames) fs::create_directories(fs::path(out_dir) / "frames");

  Pipeline pipe(cfg, camera);
  RunResult out;
  std::vector<std::optional<Image>> cache(manifest.images.size());

  std::size_t frame_index = 0;
  for (const auto& entry : manifest.lidar) {
    Scan scan;
    try {
      scan = read_ply_scan(entry.path);
    } catch (const MalformedCloud& ex) {
      out.warnings.push_back("skipped malformed scan " + entry.path + ": " + ex.what());
      std::fprintf(stderr, "warning: %s\n", out.warnings.back().c_str());
      continue;
    }
    scan.timestamp_ns = entry.timestamp_ns;  // manifest timestamps are authoritative

    const Image* img = nullptr;
    if (cfg.coloring_enabled && camera) {
      if (const auto idx = pair_image(entry.timestamp_ns, manifest.images, cfg.max_pairing_gap_ms)) {
        if (!cache[*idx]) {
          cache[*idx] = read_image(manifest.images[*idx].path);
          cache[*idx]->timestamp_ns = manifest.images[*idx].timestamp_ns;
        }
        img = &*cache[*idx];
      }
    }

    const ScanRecord rec = pipe.process_scan(scan, img);
    if (rec.degenerate || rec.insufficient) out.any_low_confidence = true;
    if (rec.colored && rec.colorless_features)
      out.warnings.push_back("scan " + std::to_string(rec.timestamp_ns) +
                             ": image paired but no feature received a color; neutral weights");

    if (cfg.save_registered_frames) {
      Scan world = scan;
      for (auto& p : world.points) p.position = transform_point(rec.pose, p.position);
      char name[64];
      std::snprintf(name, sizeof(name), "frames/frame_%06zu.ply", frame_index);
      write_ply_scan((fs::path(out_dir) / name).string(), world);
    }
    ++frame_index;
  }

  out.trajectory = pipe.trajectory();
  out.records = pipe.records();

  std::vector<std::string> comments;
  for (const auto& r : out.records)
    if (r.degenerate || r.insufficient) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "low_confidence %.9f",
                    static_cast<double>(r.timestamp_ns) * 1e-9);
      comments.push_back(buf);
    }

  out.trajectory_path = (fs::path(out_dir) / "trajectory.txt").string();
  out.map_path = (fs::path(out_dir) / "map.ply").string();
  out.report_path = (fs::path(out_dir) / "report.json").string();

  atomic_write(out.trajectory_path,
               [&](const std::string& p) { write_tum(p, out.trajectory, comments); });

  std::vector<MapPoint> map_points = pipe.map().edges().points();
  const auto& planar_pts = pipe.map().planars().points();
  map_points.insert(map_points.end(), planar_pts.begin(), planar_pts.end());
  atomic_write(out.map_path, [&](const std::string& p) { write_ply_map(p, map_points); });

  nlohmann::json report;
  report["scans"] = out.records.size();
  double total = 0.0;
  report["records"] = nlohmann::json::array();
  for (const auto& r : out.records) {
    report["records"].push_back(record_json(r));
    total += r.seconds;
  }
  report["total_seconds"] = total;
  report["warnings"] = out.warnings;
  report["low_confidence"] = out.any_low_confidence;
  atomic_write(out.report_path, [&](const std::string& p) {
    std::ofstream f(p);
    f << report.dump(2) << "\n";
  });
  return out;
}

}  // namespace carloam
