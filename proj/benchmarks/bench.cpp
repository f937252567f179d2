// Serial reference vs OpenMP kernel timing on synthetic data. The parallel
// paths are slot-based and must produce output identical to the serial ones;
// this harness checks that while it measures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "carloam/camera.hpp"
#include "carloam/features.hpp"
#include "carloam/optimizer.hpp"
#include "carloam/pipeline.hpp"
#include "carloam/synth.hpp"

using namespace carloam;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    best = std::min(best, ms);
  }
  return best;
}

bool same_points(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].position != b[i].position || a[i].color != b[i].color) return false;
  }
  return true;
}

void report(const char* name, double serial_ms, double t2_ms, double t4_ms, bool identical) {
  std::printf("%-14s serial %8.3f ms   2 threads %8.3f ms (x%.2f)   4 threads %8.3f ms (x%.2f)   identical: %s\n",
              name, serial_ms, t2_ms, serial_ms / t2_ms, t4_ms, serial_ms / t4_ms,
              identical ? "yes" : "NO");
}

}  // namespace

int main() {
  SyntheticScene scene = builtin_scene("room");
  LidarSpec lidar;
  lidar.lines = 64;
  lidar.cols = 400;  // denser than the pipeline default to give the kernels work
  const CameraModel camera = default_camera();
  const PoseSE3 pose = scene.trajectory.front().pose;

  const Scan scan = simulate_scan(scene, lidar, pose, 0, 42);
  const Image image = render_image(scene, camera, pose, 0);
  std::printf("scan points: %zu\n\n", scan.points.size());

  // colorize
  {
    std::vector<Point> out_s, out_2, out_4;
    const double ms_s = time_ms([&] { out_s = colorize_serial(camera, image, scan.points); }, 5);
    const double ms_2 = time_ms([&] { out_2 = colorize(camera, image, scan.points, 2); }, 5);
    const double ms_4 = time_ms([&] { out_4 = colorize(camera, image, scan.points, 4); }, 5);
    report("colorize", ms_s, ms_2, ms_4, same_points(out_s, out_2) && same_points(out_s, out_4));
  }

  // feature extraction
  FeatureConfig fcfg;
  {
    FeatureCloud out_s, out_2, out_4;
    const double ms_s = time_ms([&] { out_s = extract_features_serial(scan, fcfg); }, 5);
    const double ms_2 = time_ms([&] { out_2 = extract_features(scan, fcfg, 2); }, 5);
    const double ms_4 = time_ms([&] { out_4 = extract_features(scan, fcfg, 4); }, 5);
    const bool same = same_points(out_s.edges, out_2.edges) &&
                      same_points(out_s.planars, out_2.planars) &&
                      same_points(out_s.edges, out_4.edges) &&
                      same_points(out_s.planars, out_4.planars);
    report("extract", ms_s, ms_2, ms_4, same);
  }

  // residual term construction against a two-scan map
  {
    GlobalMap map;
    for (int k : {0, 2}) {
      const PoseSE3& T = scene.trajectory[k].pose;
      const Scan s = simulate_scan(scene, lidar, T, 0, 7 + k);
      const FeatureCloud f = extract_features_serial(s, fcfg);
      std::vector<MapPoint> e, p;
      for (const auto& pt : f.edges) e.push_back({transform_point(T, pt.position), pt.color});
      for (const auto& pt : f.planars) p.push_back({transform_point(T, pt.position), pt.color});
      map.insert(e, p);
    }
    const FeatureCloud feats = extract_features_serial(scan, fcfg);
    OptimizerConfig ocfg;
    std::vector<ResidualTerm> out_s, out_2, out_4;
    InlierStats st;
    const double ms_s =
        time_ms([&] { st = {}; out_s = build_terms_serial(feats, map, pose, ocfg, st); }, 5);
    const double ms_2 =
        time_ms([&] { st = {}; out_2 = build_terms(feats, map, pose, ocfg, st, 2); }, 5);
    const double ms_4 =
        time_ms([&] { st = {}; out_4 = build_terms(feats, map, pose, ocfg, st, 4); }, 5);
    bool same = out_s.size() == out_2.size() && out_s.size() == out_4.size();
    for (std::size_t i = 0; same && i < out_s.size(); ++i)
      same = out_s[i].jacobian == out_2[i].jacobian && out_s[i].jacobian == out_4[i].jacobian &&
             out_s[i].residual == out_2[i].residual && out_s[i].residual == out_4[i].residual;
    report("build_terms", ms_s, ms_2, ms_4, same);
  }

  std::printf("\ntimes are best-of-5; speedups depend on available cores\n");
  return 0;
}
