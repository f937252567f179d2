#include "carloam/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace carloam {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double gap_threshold(const FeatureConfig& cfg, double r_near, double r_far) {
  return std::max(cfg.gap_abs, cfg.gap_frac * std::max(r_near, r_far));
}

struct LineFeatures {
  std::vector<Point> edges;
  std::vector<Point> planars;
};

// Per-sector classification with line-wide suppression masks so no two picks
// of the same class land within `window` indices of each other.
LineFeatures classify_line(const ScanLine& line, const FeatureConfig& cfg) {
  LineFeatures out;
  const int n = static_cast<int>(line.points.size());
  const int w = cfg.window;
  if (n < 2 * w + 1) return out;

  const int first = w, last = n - w;  // [first, last): indices with valid c
  std::vector<double> c(n, 0.0);
  for (int i = first; i < last; ++i) c[i] = smoothness(line, i, w);

  std::vector<char> edge_block(n, 0), planar_block(n, 0);
  auto suppress = [&](std::vector<char>& mask, int i) {
    for (int j = std::max(0, i - w); j <= std::min(n - 1, i + w); ++j) mask[j] = 1;
  };

  const int valid = last - first;
  for (int s = 0; s < cfg.sectors; ++s) {
    const int lo = first + static_cast<int>(static_cast<long long>(valid) * s / cfg.sectors);
    const int hi = first + static_cast<int>(static_cast<long long>(valid) * (s + 1) / cfg.sectors);
    if (lo >= hi) continue;

    std::vector<int> idx(hi - lo);
    for (int i = lo; i < hi; ++i) idx[i - lo] = i;

    // Edges: largest c first, ties to the lower index.
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return c[a] != c[b] ? c[a] > c[b] : a < b;
    });
    int picked = 0;
    for (int i : idx) {
      if (picked >= cfg.max_edges_per_sector || c[i] <= cfg.edge_threshold) break;
      if (edge_block[i]) continue;
      out.edges.push_back(line.points[i]);
      suppress(edge_block, i);
      ++picked;
    }

    // Planars: smallest c first.
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return c[a] != c[b] ? c[a] < c[b] : a < b;
    });
    picked = 0;
    for (int i : idx) {
      if (picked >= cfg.max_planars_per_sector || c[i] >= cfg.planar_threshold) break;
      if (planar_block[i]) continue;
      out.planars.push_back(line.points[i]);
      suppress(planar_block, i);
      ++picked;
    }
  }
  return out;
}

}  // namespace

std::vector<Point> select_reliable(const std::vector<Point>& scan, const FeatureConfig& cfg) {
  const int n = static_cast<int>(scan.size());
  std::vector<char> drop(n, 0);

  std::vector<double> range(n);
  for (int i = 0; i < n; ++i) range[i] = scan[i].position.norm();

  const double az_max = (cfg.fov_h_deg / 2.0 - cfg.fov_margin_deg) * kDegToRad;
  const double el_max = (cfg.fov_v_deg / 2.0 - cfg.fov_margin_deg) * kDegToRad;
  // Grazing gate: beam nearly parallel to the local surface tangent means the
  // incidence angle from the normal exceeds the limit.
  const double graze_cos = std::cos((90.0 - cfg.max_incidence_deg) * kDegToRad);

  for (int i = 0; i < n; ++i) {
    const Vec3& p = scan[i].position;
    if (range[i] < cfg.blind_radius || scan[i].intensity < cfg.min_intensity) {
      drop[i] = 1;
      continue;
    }
    const double az = std::atan2(p.y(), p.x());
    const double el = std::atan2(p.z(), std::hypot(p.x(), p.y()));
    if (std::abs(az) > az_max || std::abs(el) > el_max) {
      drop[i] = 1;
      continue;
    }
    if (i > 0 && i + 1 < n && range[i] > 1e-9) {
      // Only meaningful on a locally continuous surface; across a depth jump
      // the chord is near-radial and would cull the silhouette point itself.
      const bool continuous =
          std::abs(range[i] - range[i - 1]) <= gap_threshold(cfg, range[i - 1], range[i]) &&
          std::abs(range[i + 1] - range[i]) <= gap_threshold(cfg, range[i], range[i + 1]);
      if (continuous) {
        const Vec3 tangent = scan[i + 1].position - scan[i - 1].position;
        const double tlen = tangent.norm();
        if (tlen > 1e-9 && std::abs(tangent.dot(p)) / (tlen * range[i]) > graze_cos) drop[i] = 1;
      }
    }
  }

  // Occlusion fringe: two far-side points of every large range jump.
  for (int i = 0; i + 1 < n; ++i) {
    const double gap = gap_threshold(cfg, range[i], range[i + 1]);
    if (std::abs(range[i + 1] - range[i]) <= gap) continue;
    if (range[i + 1] > range[i]) {
      drop[i + 1] = 1;
      if (i + 2 < n) drop[i + 2] = 1;
    } else {
      drop[i] = 1;
      if (i - 1 >= 0) drop[i - 1] = 1;
    }
  }

  std::vector<Point> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    if (!drop[i]) out.push_back(scan[i]);
  return out;
}

std::vector<ScanLine> organize_lines(const std::vector<Point>& scan, const FeatureConfig& cfg) {
  std::vector<ScanLine> lines;
  const int n = static_cast<int>(scan.size());
  if (n == 0) return lines;

  std::vector<double> step(std::max(0, n - 1), 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    const Vec3 a = scan[i].position.normalized();
    const Vec3 b = scan[i + 1].position.normalized();
    step[i] = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
  }
  double median_step = 0.0;
  if (!step.empty()) {
    std::vector<double> tmp = step;
    std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
    median_step = tmp[tmp.size() / 2];
  }
  const double split_step = cfg.angular_split_factor * std::max(median_step, 1e-6);

  // Split only on angular gaps (row wraps, dropout runs). Range jumps stay in
  // one line: the smoothness window spans them, which is what makes the near
  // side of a depth discontinuity an edge candidate.
  lines.emplace_back();
  lines.back().points.push_back(scan[0]);
  for (int i = 1; i < n; ++i) {
    if (step[i - 1] > split_step) lines.emplace_back();
    lines.back().points.push_back(scan[i]);
  }
  return lines;
}

double smoothness(const ScanLine& line, int i, int window) {
  const int n = static_cast<int>(line.points.size());
  if (i < window || i + window >= n) return 0.0;
  const Vec3& pi = line.points[i].position;
  Vec3 sum = Vec3::Zero();
  for (int j = i - window; j <= i + window; ++j) {
    if (j == i) continue;
    sum += pi - line.points[j].position;
  }
  const double denom = 2.0 * window * pi.norm();
  return denom > 1e-12 ? sum.norm() / denom : 0.0;
}

FeatureCloud extract_features_serial(const Scan& scan, const FeatureConfig& cfg) {
  FeatureCloud out;
  out.timestamp_ns = scan.timestamp_ns;
  const auto reliable = select_reliable(scan.points, cfg);
  const auto lines = organize_lines(reliable, cfg);
  for (const auto& line : lines) {
    LineFeatures lf = classify_line(line, cfg);
    out.edges.insert(out.edges.end(), lf.edges.begin(), lf.edges.end());
    out.planars.insert(out.planars.end(), lf.planars.begin(), lf.planars.end());
  }
  return out;
}

FeatureCloud extract_features(const Scan& scan, const FeatureConfig& cfg, int threads) {
  if (threads <= 1) return extract_features_serial(scan, cfg);

  FeatureCloud out;
  out.timestamp_ns = scan.timestamp_ns;
  const auto reliable = select_reliable(scan.points, cfg);
  const auto lines = organize_lines(reliable, cfg);
  std::vector<LineFeatures> slots(lines.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (long long l = 0; l < static_cast<long long>(lines.size()); ++l) {
    slots[l] = classify_line(lines[l], cfg);
  }
  // Deterministic merge in line order regardless of worker scheduling.
  for (const auto& lf : slots) {
    out.edges.insert(out.edges.end(), lf.edges.begin(), lf.edges.end());
    out.planars.insert(out.planars.end(), lf.planars.begin(), lf.planars.end());
  }
  return out;
}

}  // namespace carloam
