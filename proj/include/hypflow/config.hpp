#pragma once

// INI scenario files:
//
//   [flow]      f_spec, n, M, cfl_safety, stop_theta, stop_time, epsilon_policy,
//               stencil_order, tso_rho, max_steps
//   [scenario]  name, radius, amplitude, mode, amplitude2, mode2, noise, seed
//   [output]    directory, cadence, profile_every, formats, emit_plot_data
//
// Every section and key is optional; anything not listed above is rejected.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hypflow/flow.hpp"

namespace hypflow::config {

struct OutputOptions {
  std::string directory;  // empty: derive from HYPFLOW_OUTPUT_ROOT and the config name
  bool csv = true;        // trajectory.csv
  bool jsonl = true;      // profiles.jsonl
  bool json = true;       // verdict.json
  bool emit_plot_data = false;
};

struct ScenarioConfig {
  flow::FlowConfig flow;
  OutputOptions output;
};

/// Throws ConfigError on syntax errors, unknown sections or keys, and unparsable or
/// out-of-range values (FlowConfig::validate is applied).
ScenarioConfig parse(std::istream& in, const std::string& source_name = "<config>");
ScenarioConfig load(const std::filesystem::path& path);

/// Canonical INI text; parse(write(c)) reproduces c.
std::string write(const ScenarioConfig& config);

}  // namespace hypflow::config
