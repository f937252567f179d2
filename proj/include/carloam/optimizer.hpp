// Scan-to-map alignment: robustified, color-weighted point-to-edge and
// point-to-plane terms minimized by damped Gauss-Newton on SE(3).

#pragma once

#include <optional>
#include <vector>

#include "carloam/global_map.hpp"
#include "carloam/robust_kernels.hpp"
#include "carloam/se3.hpp"
#include "carloam/types.hpp"

namespace carloam {

struct OptimizerConfig {
  double nu = 0.2;     // Welsch scale
  double sigma = 5.0;  // color weight scale (CIEDE2000 units)
  int max_iterations = 20;
  double step_tolerance = 1e-6;
  double damping = 1e-4;
  double max_correspondence_dist = 1.0;  // m, gates both anchor and residual distance
  bool welsch_enabled = true;
  bool color_weight_enabled = true;
  double condition_limit = 1e12;  // normal-equation degeneracy gate
  int min_terms = 10;
  // Scan-side normal compatibility for plane terms: a planar feature whose own
  // neighborhood in the feature cloud is coherently planar must match a map
  // plane of agreeing orientation. Kills cross-surface bindings near plane
  // junctions without shielding incoherent (outlier) features.
  bool normal_check_enabled = true;
  double normal_check_max_angle_deg = 45.0;
  // Map-side support scatter for plane terms: reject a match when the
  // neighbors deviate from their own fitted plane by more than this RMS.
  // Neighborhoods straddling two surfaces fit a tilted plane with ~cm scatter,
  // while a true plane's scatter is just the range noise. <= 0 disables.
  double plane_support_rms = 0.01;  // m
};

struct ResidualTerm {
  enum class Kind { kEdge, kPlane };
  Kind kind = Kind::kEdge;
  double distance = 0.0;  // |d|
  double residual = 0.0;  // psi_nu(|d|), or |d| with the kernel off
  double weight = 1.0;    // W in (0,1]
  Eigen::Matrix<double, 1, 6> jacobian = Eigen::Matrix<double, 1, 6>::Zero();

  // Frozen geometry so the step test can re-evaluate cost at a trial pose.
  Vec3 point = Vec3::Zero();   // feature point, LiDAR frame
  Vec3 anchor = Vec3::Zero();  // nearest map point, world frame
  Vec3 axis = Vec3::UnitZ();   // line direction (edge) or plane normal
};

struct InlierStats {
  int edge_accepted = 0;
  int plane_accepted = 0;
  int rejected_validation = 0;  // eigen/normal checks failed or too few neighbors
  int rejected_distance = 0;    // anchor or residual distance beyond the gate
  int rejected_degenerate = 0;  // edge with d exactly 0 (direction undefined)

  int accepted() const { return edge_accepted + plane_accepted; }
};

struct AlignmentResult {
  PoseSE3 pose;
  int iterations = 0;
  double final_cost = 0.0;
  InlierStats inliers;
  bool degenerate = false;    // normal equations near-singular
  bool insufficient = false;  // fewer than min_terms valid correspondences
  bool converged = false;     // step tolerance reached
};

/// d = |(q - anchor) x dir|, q the world-frame query.
double point_to_edge_distance(const Vec3& q, const EdgeCorrespondence& corr);

/// Signed distance (q - anchor) . normal.
double point_to_plane_distance(const Vec3& q, const PlaneCorrespondence& corr);

/// W = rho_sigma(dE00) when enabled and both colors exist, else 1.
double color_weight(const std::optional<RgbColor>& query_color,
                    const std::optional<RgbColor>& anchor_color,
                    const OptimizerConfig& cfg);

/// Weighted robust term for one edge correspondence; absent when the distance
/// exceeds the gate or the point lies exactly on the line.
std::optional<ResidualTerm> build_residual(const Point& feature, const PoseSE3& T,
                                           const EdgeCorrespondence& corr,
                                           const OptimizerConfig& cfg);

std::optional<ResidualTerm> build_residual(const Point& feature, const PoseSE3& T,
                                           const PlaneCorrespondence& corr,
                                           const OptimizerConfig& cfg);

/// Correspondence search + validation + term construction for a whole feature
/// cloud at pose T. threads <= 1 runs the serial reference; results are
/// identical across thread counts (independent slots, in-order merge).
std::vector<ResidualTerm> build_terms(const FeatureCloud& features, const GlobalMap& map,
                                      const PoseSE3& T, const OptimizerConfig& cfg,
                                      InlierStats& stats, int threads = 1);

std::vector<ResidualTerm> build_terms_serial(const FeatureCloud& features, const GlobalMap& map,
                                             const PoseSE3& T, const OptimizerConfig& cfg,
                                             InlierStats& stats);

/// Sum of W * residual over terms re-evaluated at pose T.
double evaluate_cost(const std::vector<ResidualTerm>& terms, const PoseSE3& T,
                     const OptimizerConfig& cfg);

/// Iterated reweighted Gauss-Newton with Levenberg damping and a monotone
/// step guard: correspondences rebuilt every iteration, the kernel folded in
/// as IRLS weights psi'(d)/d, left-multiplicative update T <- exp(dxi) * T.
AlignmentResult align(const FeatureCloud& features, const GlobalMap& map,
                      const PoseSE3& initial, const OptimizerConfig& cfg, int threads = 1);

}  // namespace carloam
