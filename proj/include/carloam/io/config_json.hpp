// Pipeline configuration as JSON. Every field is optional and defaults to the
// built-in value, so a config file only states overrides.

#pragma once

#include <string>

#include "carloam/pipeline.hpp"

namespace carloam {

PipelineConfig load_pipeline_config(const std::string& path);
void save_pipeline_config(const PipelineConfig& cfg, const std::string& path);

/// Parse from a JSON text (used by tests and for inline overrides).
PipelineConfig parse_pipeline_config(const std::string& json_text);

}  // namespace carloam
