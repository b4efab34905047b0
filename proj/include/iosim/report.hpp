// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace iosim::harness {

struct RunSummary {
  std::string dir;
  std::string mode;
  std::string protocol;
  double lambda = 0.0;
  double omega = 0.0;
  std::uint64_t seed = 0;
  std::int64_t slots = 0;
  double tail_mean_rate = 0.0;
  std::int64_t convergence_slot = -1;
  double mean_decision_us = 0.0;
};

RunSummary summarize_run_dir(const std::filesystem::path& dir);

/// Aggregates completed run directories into comparison.csv plus one
/// gnuplot-ready .dat curve (slot, short-term average) per run and per mode.
void write_report(const std::vector<std::filesystem::path>& run_dirs,
                  const std::filesystem::path& out_dir);

}  // namespace iosim::harness
