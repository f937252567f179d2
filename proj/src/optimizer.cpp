#include "carloam/optimizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "carloam/color.hpp"
#include "carloam/kdtree.hpp"

namespace carloam {
namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// Rejection causes recorded per feature slot for deterministic merging.
enum class Cause : std::uint8_t { kAccepted, kValidation, kDistance, kDegenerate };

struct Slot {
  std::optional<ResidualTerm> term;
  Cause cause = Cause::kValidation;
};

Slot make_edge_slot(const Point& feature, const PoseSE3& T, const GlobalMap& map,
                    const OptimizerConfig& cfg) {
  Slot s;
  const Vec3 q = transform_point(T, feature.position);
  const int n = map.config().neighbors;
  const auto neighbors = map.edges().knn(q, n);
  if (static_cast<int>(neighbors.size()) < n) return s;
  if ((neighbors.front().position - q).norm() > cfg.max_correspondence_dist) {
    s.cause = Cause::kDistance;
    return s;
  }
  const auto corr = validate_edge(q, neighbors, map.config());
  if (!corr) return s;
  if (auto term = build_residual(feature, T, *corr, cfg)) {
    s.term = *term;
    s.cause = Cause::kAccepted;
  } else {
    const double d = point_to_edge_distance(q, *corr);
    s.cause = d > cfg.max_correspondence_dist ? Cause::kDistance : Cause::kDegenerate;
  }
  return s;
}

Slot make_plane_slot(const Point& feature, const std::optional<Vec3>& scan_normal,
                     const PoseSE3& T, const GlobalMap& map, const OptimizerConfig& cfg) {
  Slot s;
  const Vec3 q = transform_point(T, feature.position);
  const int n = map.config().neighbors;
  const auto neighbors = map.planars().knn(q, n);
  if (static_cast<int>(neighbors.size()) < n) return s;
  if ((neighbors.front().position - q).norm() > cfg.max_correspondence_dist) {
    s.cause = Cause::kDistance;
    return s;
  }
  const auto corr = validate_plane(q, neighbors, map.config());
  if (!corr) return s;
  if (cfg.plane_support_rms > 0.0) {
    double ss = 0.0;
    for (const auto& nb : neighbors) {
      const double dev = (nb.position - corr->anchor.position).dot(corr->normal);
      ss += dev * dev;
    }
    if (ss > cfg.plane_support_rms * cfg.plane_support_rms * neighbors.size()) return s;
  }
  if (cfg.normal_check_enabled && scan_normal) {
    const double limit = std::cos(cfg.normal_check_max_angle_deg * std::numbers::pi / 180.0);
    if (std::abs((T.rotation * *scan_normal).dot(corr->normal)) < limit) return s;
  }
  if (auto term = build_residual(feature, T, *corr, cfg)) {
    s.term = *term;
    s.cause = Cause::kAccepted;
  } else {
    s.cause = Cause::kDistance;
  }
  return s;
}

// Per-feature normals estimated from the feature cloud itself, set only where
// the local neighborhood is coherently planar; junk features stay exempt so
// the robust kernel, not this gate, is what has to absorb them.
std::vector<std::optional<Vec3>> feature_normals(const std::vector<Point>& planars) {
  std::vector<std::optional<Vec3>> normals(planars.size());
  if (planars.size() < 5) return normals;
  std::vector<Vec3> pos(planars.size());
  for (std::size_t i = 0; i < planars.size(); ++i) pos[i] = planars[i].position;
  KdTree tree;
  tree.build(pos);
  for (std::size_t i = 0; i < planars.size(); ++i) {
    const auto nb = tree.knn(pos[i], 8);
    if (nb.size() < 5) continue;
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nb) mean += pos[n.index];
    mean /= static_cast<double>(nb.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nb) {
      const Vec3 d = pos[n.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const double l2 = es.eigenvalues()(1), l3 = es.eigenvalues()(0);
    if (l2 <= 1e-12 || l3 > 0.1 * l2) continue;
    normals[i] = es.eigenvectors().col(0);
  }
  return normals;
}

void merge_slots(const std::vector<Slot>& slots, bool edge, std::vector<ResidualTerm>& terms,
                 InlierStats& stats) {
  for (const auto& s : slots) {
    switch (s.cause) {
      case Cause::kAccepted:
        terms.push_back(*s.term);
        (edge ? stats.edge_accepted : stats.plane_accepted)++;
        break;
      case Cause::kValidation: stats.rejected_validation++; break;
      case Cause::kDistance: stats.rejected_distance++; break;
      case Cause::kDegenerate: stats.rejected_degenerate++; break;
    }
  }
}

// IRLS weight for the robust objective sum W*psi(d): tau = W * psi'(d)/d,
// which stays finite (W/nu^2) as d -> 0. Plain W without the kernel.
double irls_weight(const ResidualTerm& t, const OptimizerConfig& cfg) {
  if (!cfg.welsch_enabled) return t.weight;
  const double nu2 = cfg.nu * cfg.nu;
  return t.weight * std::exp(-0.5 * t.distance * t.distance / nu2) / nu2;
}

// Unweighted distance row d(d)/d(dxi) and signed distance for a frozen term,
// re-evaluated at pose T.
struct GeoRow {
  Eigen::Matrix<double, 1, 6> row;
  double d = 0.0;  // signed for planes, positive for edges
  bool ok = false;
};

GeoRow geometry_row(const ResidualTerm& t, const PoseSE3& T) {
  GeoRow gr;
  const Vec3 q = transform_point(T, t.point);
  if (t.kind == ResidualTerm::Kind::kPlane) {
    gr.d = (q - t.anchor).dot(t.axis);
    gr.row = t.axis.transpose() * point_jacobian(q);
    gr.ok = true;
    return gr;
  }
  const Vec3 v = (q - t.anchor).cross(t.axis);
  const double d = v.norm();
  if (d <= 0.0) return gr;  // steepest-ascent direction undefined
  gr.d = d;
  gr.row = (t.axis.cross(v / d)).transpose() * point_jacobian(q);
  gr.ok = true;
  return gr;
}

// Step-acceptance metric matching what the normal equations descend:
// sum W*psi(d) under the kernel (the IRLS majorizer target), sum W*d^2
// without it (plain weighted least squares).
double objective(const std::vector<ResidualTerm>& terms, const PoseSE3& T,
                 const OptimizerConfig& cfg) {
  double cost = 0.0;
  for (const auto& t : terms) {
    const Vec3 q = transform_point(T, t.point);
    const double d = t.kind == ResidualTerm::Kind::kEdge
                         ? (q - t.anchor).cross(t.axis).norm()
                         : std::abs((q - t.anchor).dot(t.axis));
    cost += t.weight * (cfg.welsch_enabled ? welsch(d, WelschParam{cfg.nu}) : d * d);
  }
  return cost;
}

}  // namespace

double point_to_edge_distance(const Vec3& q, const EdgeCorrespondence& corr) {
  return (q - corr.anchor.position).cross(corr.direction).norm();
}

double point_to_plane_distance(const Vec3& q, const PlaneCorrespondence& corr) {
  return (q - corr.anchor.position).dot(corr.normal);
}

double color_weight(const std::optional<RgbColor>& query_color,
                    const std::optional<RgbColor>& anchor_color,
                    const OptimizerConfig& cfg) {
  if (!cfg.color_weight_enabled || !query_color || !anchor_color) return 1.0;
  const double de = color_difference_rgb(*query_color, *anchor_color);
  return gaussian_weight(de, GaussianParam{cfg.sigma});
}

std::optional<ResidualTerm> build_residual(const Point& feature, const PoseSE3& T,
                                           const EdgeCorrespondence& corr,
                                           const OptimizerConfig& cfg) {
  const Vec3 q = transform_point(T, feature.position);
  const Vec3 u = q - corr.anchor.position;
  const Vec3 v = u.cross(corr.direction);
  const double d = v.norm();
  if (d > cfg.max_correspondence_dist) return std::nullopt;
  if (d == 0.0) return std::nullopt;  // direction of steepest ascent undefined

  ResidualTerm t;
  t.kind = ResidualTerm::Kind::kEdge;
  t.distance = d;
  t.weight = color_weight(feature.color, corr.anchor.color, cfg);
  double slope;
  if (cfg.welsch_enabled) {
    const WelschParam nu{cfg.nu};
    t.residual = welsch(d, nu);
    slope = welsch_derivative(d, nu);
  } else {
    t.residual = d;
    slope = 1.0;
  }
  const Vec3 p_n = v / d;
  const Vec3 dd_dq = corr.direction.cross(p_n);  // gradient of d w.r.t. the world point
  t.jacobian = t.weight * slope * dd_dq.transpose() * point_jacobian(q);
  t.point = feature.position;
  t.anchor = corr.anchor.position;
  t.axis = corr.direction;
  return t;
}

std::optional<ResidualTerm> build_residual(const Point& feature, const PoseSE3& T,
                                           const PlaneCorrespondence& corr,
                                           const OptimizerConfig& cfg) {
  const Vec3 q = transform_point(T, feature.position);
  const double d = point_to_plane_distance(q, corr);
  const double ad = std::abs(d);
  if (ad > cfg.max_correspondence_dist) return std::nullopt;

  ResidualTerm t;
  t.kind = ResidualTerm::Kind::kPlane;
  t.distance = ad;
  t.weight = color_weight(feature.color, corr.anchor.color, cfg);
  double slope;
  if (cfg.welsch_enabled) {
    const WelschParam nu{cfg.nu};
    t.residual = welsch(ad, nu);
    slope = welsch_derivative(ad, nu);
  } else {
    t.residual = ad;
    slope = 1.0;
  }
  t.jacobian = t.weight * slope * sgn(d) * corr.normal.transpose() * point_jacobian(q);
  t.point = feature.position;
  t.anchor = corr.anchor.position;
  t.axis = corr.normal;
  return t;
}

std::vector<ResidualTerm> build_terms_serial(const FeatureCloud& features, const GlobalMap& map,
                                             const PoseSE3& T, const OptimizerConfig& cfg,
                                             InlierStats& stats) {
  const auto normals = feature_normals(features.planars);
  std::vector<Slot> edge_slots(features.edges.size());
  std::vector<Slot> plane_slots(features.planars.size());
  for (std::size_t i = 0; i < features.edges.size(); ++i)
    edge_slots[i] = make_edge_slot(features.edges[i], T, map, cfg);
  for (std::size_t i = 0; i < features.planars.size(); ++i)
    plane_slots[i] = make_plane_slot(features.planars[i], normals[i], T, map, cfg);

  std::vector<ResidualTerm> terms;
  terms.reserve(features.edges.size() + features.planars.size());
  merge_slots(edge_slots, true, terms, stats);
  merge_slots(plane_slots, false, terms, stats);
  return terms;
}

std::vector<ResidualTerm> build_terms(const FeatureCloud& features, const GlobalMap& map,
                                      const PoseSE3& T, const OptimizerConfig& cfg,
                                      InlierStats& stats, int threads) {
  if (threads <= 1) return build_terms_serial(features, map, T, cfg, stats);

  const auto normals = feature_normals(features.planars);
  std::vector<Slot> edge_slots(features.edges.size());
  std::vector<Slot> plane_slots(features.planars.size());
  const long long ne = static_cast<long long>(features.edges.size());
  const long long np = static_cast<long long>(features.planars.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
#endif
  for (long long i = 0; i < ne + np; ++i) {
    if (i < ne)
      edge_slots[i] = make_edge_slot(features.edges[i], T, map, cfg);
    else
      plane_slots[i - ne] = make_plane_slot(features.planars[i - ne], normals[i - ne], T, map, cfg);
  }

  // In-order merge keeps the term sequence independent of scheduling.
  std::vector<ResidualTerm> terms;
  terms.reserve(features.edges.size() + features.planars.size());
  merge_slots(edge_slots, true, terms, stats);
  merge_slots(plane_slots, false, terms, stats);
  return terms;
}

double evaluate_cost(const std::vector<ResidualTerm>& terms, const PoseSE3& T,
                     const OptimizerConfig& cfg) {
  double cost = 0.0;
  for (const auto& t : terms) {
    const Vec3 q = transform_point(T, t.point);
    const double d = t.kind == ResidualTerm::Kind::kEdge
                         ? (q - t.anchor).cross(t.axis).norm()
                         : std::abs((q - t.anchor).dot(t.axis));
    const double r = cfg.welsch_enabled ? welsch(d, WelschParam{cfg.nu}) : d;
    cost += t.weight * r;
  }
  return cost;
}

AlignmentResult align(const FeatureCloud& features, const GlobalMap& map,
                      const PoseSE3& initial, const OptimizerConfig& cfg, int threads) {
  AlignmentResult res;
  res.pose = initial;
  PoseSE3 T = initial;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    InlierStats stats;
    const auto terms = build_terms(features, map, T, cfg, stats, threads);
    res.inliers = stats;
    res.iterations = it;

    if (static_cast<int>(terms.size()) < cfg.min_terms) {
      res.pose = initial;
      res.insufficient = true;
      res.final_cost = evaluate_cost(terms, initial, cfg);
      return res;
    }

    // Normal equations in IRLS form: solving them exactly minimizes the
    // majorizer of sum W*psi(d) at T (Welsch's 1 - exp(-d^2/2nu^2) is concave
    // in d^2), so the full step descends the true objective up to
    // linearization error, which the damping retries absorb.
    Mat6 H = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (const auto& t : terms) {
      const GeoRow gr = geometry_row(t, T);
      if (!gr.ok) continue;
      const double tau = irls_weight(t, cfg);
      H.noalias() += tau * gr.row.transpose() * gr.row;
      g.noalias() += (tau * gr.d) * gr.row.transpose();
    }
    res.final_cost = evaluate_cost(terms, T, cfg);
    const double cost0 = objective(terms, T, cfg);

    Eigen::SelfAdjointEigenSolver<Mat6> es(H);
    const double lmax = es.eigenvalues()(5);
    const double lmin = es.eigenvalues()(0);
    if (lmax <= 1e-300) {
      // All rows vanish: already at a fixed point of the objective.
      res.pose = T;
      res.converged = true;
      return res;
    }
    if (lmax / std::max(lmin, 1e-300) > cfg.condition_limit) {
      res.pose = T;
      res.degenerate = true;
      return res;
    }

    // Levenberg damping with a monotone-cost guard on the frozen
    // correspondences: a step that raises the cost restarts with 10x damping.
    double lambda = cfg.damping;
    Vec6 delta = Vec6::Zero();
    PoseSE3 T_new = T;
    double cost_new = cost0;
    bool accepted = false;
    for (int retry = 0; retry <= 5 && !accepted; ++retry) {
      const Mat6 Hd = H + lambda * Mat6::Identity();
      delta = Hd.ldlt().solve(-g);
      T_new = compose(exp_se3(Twist::from_vector(delta)), T);
      cost_new = objective(terms, T_new, cfg);
      if (cost_new <= cost0 * (1.0 + 1e-9) + 1e-300) accepted = true;
      else lambda *= 10.0;
    }
    if (!accepted) {
      res.pose = T;  // no monotone step available; stop rather than diverge
      return res;
    }

    T = T_new;
    res.final_cost = evaluate_cost(terms, T, cfg);
    if (delta.norm() < cfg.step_tolerance) {
      res.converged = true;
      break;
    }
  }

  res.pose = T;
  return res;
}

}  // namespace carloam
