// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace iosim::harness {

struct MetricsRow {
  std::int64_t slot = 0;
  double sum_rate = 0.0;
  double short_term_avg = 0.0;
  double reward = 0.0;
  bool converged = false;
};

/// Sliding mean over the trailing `window` slots; early slots average the
/// available prefix.
std::vector<double> short_term_average(const std::vector<double>& rates, int window);

/// Earliest index s such that the series stays within rel_tol of value(s) for
/// `hold` consecutive slots (the full hold window must fit in the series).
std::optional<std::int64_t> detect_convergence(const std::vector<double>& avg_series,
                                               double rel_tol, int hold);

/// Mean of the final `fraction` of the series (the settled tail).
double tail_mean(const std::vector<double>& series, double fraction = 0.25);

std::vector<MetricsRow> build_metrics(const std::vector<double>& rates,
                                      const std::vector<double>& rewards, int window,
                                      double rel_tol, int hold);

}  // namespace iosim::harness
