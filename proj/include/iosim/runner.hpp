// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>

#include "iosim/config.hpp"
#include "iosim/metrics.hpp"

namespace iosim::harness {

struct RunResult {
  std::filesystem::path dir;
  std::vector<MetricsRow> rows;
  std::int64_t convergence_slot = -1;  // -1: never converged
  double tail_mean_rate = 0.0;
  double mean_decision_us = 0.0;
  std::int64_t env_steps = 0;
  std::int64_t virtual_steps = 0;
};

/// Runs one configured experiment and writes the run directory
/// (metrics.csv, config.snapshot.json, checkpoints, timing.csv).
RunResult run_one(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Baseline and online-learning modes (everything except deepios_twin).
RunResult run_baseline(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// The full digital-twin loop: bootstrap data requisition, initial twin
/// training, per-slot calibration, the inner digital interaction loop,
/// parameter delivery and the physical action.
RunResult run_algorithm1(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Optional progress callback (slot, horizon, current short-window mean).
using ProgressFn = std::function<void(std::int64_t, std::int64_t, double)>;
void set_progress_callback(ProgressFn fn);

}  // namespace iosim::harness
