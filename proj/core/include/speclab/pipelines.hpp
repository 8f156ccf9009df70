#pragma once

#include "speclab/config.hpp"
#include "speclab/report.hpp"

namespace speclab {

/// Runs the configured pipeline, writing report.json, CSV plot data, and a
/// run_meta.txt timestamp sidecar into out_dir. Identical config + seed give
/// byte-identical report.json and CSVs.
/// Returns 0 when every certificate holds, 2 when one fails.
/// Input/schema problems throw std::invalid_argument (the CLI maps them to 1).
int run_pipeline(const ExperimentConfig& cfg, int refine = 0);

const std::vector<std::string>& pipeline_names();

}  // namespace speclab
