#pragma once

#include "speclab/grid.hpp"
#include "speclab/potentials.hpp"

#include <map>
#include <string>
#include <vector>

namespace speclab {

/// One experiment = one reviewable config file: key = value lines with
/// [section] tables. Unknown sections or keys are rejected by name.
struct ExperimentConfig {
  std::string experiment = "unnamed";
  std::string pipeline;
  uint64_t seed = 0;
  bool has_domain = false;
  DomainSpec domain;
  std::vector<PotentialSpec> potentials;
  std::map<std::string, double> params;        // [params] numeric knobs
  std::map<std::string, std::string> sparams;  // [params] string knobs
  double tol_cover = 1e-6;
  double chain_slack = 0.02;
  std::string out_dir = ".";

  double param(const std::string& key, double fallback) const;
  std::vector<double> param_list(const std::string& key, const std::vector<double>& fallback) const;
};

/// Parse + schema-validate. Throws std::invalid_argument whose message names
/// the offending key or section.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace speclab
