#include "carloam/io/config_json.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace carloam {
namespace {

using nlohmann::json;

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PipelineConfig from_json(const json& j) {
  PipelineConfig cfg;
  if (j.contains("features")) {
    const auto& f = j.at("features");
    get(f, "blind_radius", cfg.features.blind_radius);
    get(f, "min_intensity", cfg.features.min_intensity);
    get(f, "fov_h_deg", cfg.features.fov_h_deg);
    get(f, "fov_v_deg", cfg.features.fov_v_deg);
    get(f, "fov_margin_deg", cfg.features.fov_margin_deg);
    get(f, "max_incidence_deg", cfg.features.max_incidence_deg);
    get(f, "gap_abs", cfg.features.gap_abs);
    get(f, "gap_frac", cfg.features.gap_frac);
    get(f, "window", cfg.features.window);
    get(f, "sectors", cfg.features.sectors);
    get(f, "max_edges_per_sector", cfg.features.max_edges_per_sector);
    get(f, "max_planars_per_sector", cfg.features.max_planars_per_sector);
    get(f, "edge_threshold", cfg.features.edge_threshold);
    get(f, "planar_threshold", cfg.features.planar_threshold);
    get(f, "angular_split_factor", cfg.features.angular_split_factor);
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    get(o, "nu", cfg.optimizer.nu);
    get(o, "sigma", cfg.optimizer.sigma);
    get(o, "max_iterations", cfg.optimizer.max_iterations);
    get(o, "step_tolerance", cfg.optimizer.step_tolerance);
    get(o, "damping", cfg.optimizer.damping);
    get(o, "max_correspondence_dist", cfg.optimizer.max_correspondence_dist);
    get(o, "welsch_enabled", cfg.optimizer.welsch_enabled);
    get(o, "color_weight_enabled", cfg.optimizer.color_weight_enabled);
    get(o, "condition_limit", cfg.optimizer.condition_limit);
    get(o, "min_terms", cfg.optimizer.min_terms);
    get(o, "normal_check_enabled", cfg.optimizer.normal_check_enabled);
    get(o, "normal_check_max_angle_deg", cfg.optimizer.normal_check_max_angle_deg);
    get(o, "plane_support_rms", cfg.optimizer.plane_support_rms);
  }
  if (j.contains("map")) {
    const auto& m = j.at("map");
    get(m, "edge_voxel_size", cfg.map.edge_voxel_size);
    get(m, "planar_voxel_size", cfg.map.planar_voxel_size);
    get(m, "neighbors", cfg.map.neighbors);
    get(m, "edge_eigen_ratio", cfg.map.edge_eigen_ratio);
    get(m, "plane_eigen_ratio", cfg.map.plane_eigen_ratio);
    get(m, "plane_fit_tol", cfg.map.plane_fit_tol);
    get(m, "edge_direction_from_endpoints", cfg.map.edge_direction_from_endpoints);
  }
  get(j, "coloring_enabled", cfg.coloring_enabled);
  get(j, "max_pairing_gap_ms", cfg.max_pairing_gap_ms);
  get(j, "threads", cfg.threads);
  get(j, "save_registered_frames", cfg.save_registered_frames);
  if (j.contains("outlier_injection")) {
    const auto& o = j.at("outlier_injection");
    get(o, "fraction", cfg.outlier_injection.fraction);
    get(o, "seed", cfg.outlier_injection.seed);
  }
  return cfg;
}

json to_json(const PipelineConfig& cfg) {
  json j;
  j["features"] = {{"blind_radius", cfg.features.blind_radius},
                   {"min_intensity", cfg.features.min_intensity},
                   {"fov_h_deg", cfg.features.fov_h_deg},
                   {"fov_v_deg", cfg.features.fov_v_deg},
                   {"fov_margin_deg", cfg.features.fov_margin_deg},
                   {"max_incidence_deg", cfg.features.max_incidence_deg},
                   {"gap_abs", cfg.features.gap_abs},
                   {"gap_frac", cfg.features.gap_frac},
                   {"window", cfg.features.window},
                   {"sectors", cfg.features.sectors},
                   {"max_edges_per_sector", cfg.features.max_edges_per_sector},
                   {"max_planars_per_sector", cfg.features.max_planars_per_sector},
                   {"edge_threshold", cfg.features.edge_threshold},
                   {"planar_threshold", cfg.features.planar_threshold},
                   {"angular_split_factor", cfg.features.angular_split_factor}};
  j["optimizer"] = {{"nu", cfg.optimizer.nu},
                    {"sigma", cfg.optimizer.sigma},
                    {"max_iterations", cfg.optimizer.max_iterations},
                    {"step_tolerance", cfg.optimizer.step_tolerance},
                    {"damping", cfg.optimizer.damping},
                    {"max_correspondence_dist", cfg.optimizer.max_correspondence_dist},
                    {"welsch_enabled", cfg.optimizer.welsch_enabled},
                    {"color_weight_enabled", cfg.optimizer.color_weight_enabled},
                    {"condition_limit", cfg.optimizer.condition_limit},
                    {"min_terms", cfg.optimizer.min_terms},
                    {"normal_check_enabled", cfg.optimizer.normal_check_enabled},
                    {"normal_check_max_angle_deg", cfg.optimizer.normal_check_max_angle_deg},
                    {"plane_support_rms", cfg.optimizer.plane_support_rms}};
  j["map"] = {{"edge_voxel_size", cfg.map.edge_voxel_size},
              {"planar_voxel_size", cfg.map.planar_voxel_size},
              {"neighbors", cfg.map.neighbors},
              {"edge_eigen_ratio", cfg.map.edge_eigen_ratio},
              {"plane_eigen_ratio", cfg.map.plane_eigen_ratio},
              {"plane_fit_tol", cfg.map.plane_fit_tol},
              {"edge_direction_from_endpoints", cfg.map.edge_direction_from_endpoints}};
  j["coloring_enabled"] = cfg.coloring_enabled;
  j["max_pairing_gap_ms"] = cfg.max_pairing_gap_ms;
  j["threads"] = cfg.threads;
  j["save_registered_frames"] = cfg.save_registered_frames;
  j["outlier_injection"] = {{"fraction", cfg.outlier_injection.fraction},
                            {"seed", cfg.outlier_injection.seed}};
  return j;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path + " does not parse: " + e.what());
  }
  return from_json(j);
}

void save_pipeline_config(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << to_json(cfg).dump(2) << "\n";
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  return from_json(json::parse(json_text));
}

}  // namespace carloam
