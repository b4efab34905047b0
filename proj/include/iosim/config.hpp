// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "iosim/agent.hpp"
#include "iosim/env.hpp"
#include "iosim/twin.hpp"

namespace iosim::harness {

enum class Mode { random, mab, deepios, deepios_no_branch, deepios_twin };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct RunConfig {
  env::EnvConfig env;
  agent::AgentConfig agent;
  twin::TwinConfig twin;
  Mode mode = Mode::deepios;
  std::int64_t horizon = 20000;
  int gamma_inner = 1000;  // digital interactions per physical slot
  std::uint64_t seed = 1;
  int metrics_window = 2000;  // N_r
  double convergence_rel_tol = 0.01;
  int convergence_hold = 1000;
  bool log_trajectory = false;
  bool log_posteriors = false;

  void validate() const;
};

/// All defaults as published: Table-II algorithm parameters plus the standard
/// scenario (N=5, K=5, M=32, lambda=10).
RunConfig default_config();

std::string config_to_json_text(const RunConfig& cfg);
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config_file(const std::filesystem::path& path);
void write_config_snapshot(const RunConfig& cfg, const ios::ActionCatalog& catalog,
                           const std::filesystem::path& path);

}  // namespace iosim::harness
