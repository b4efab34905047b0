// SPDX-License-Identifier: Apache-2.0
#include "iosim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace iosim::harness {

std::vector<double> short_term_average(const std::vector<double>& rates, int window) {
  if (window < 1) throw std::invalid_argument("averaging window must be >= 1");
  std::vector<double> avg(rates.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    acc += rates[i];
    if (i >= static_cast<std::size_t>(window)) acc -= rates[i - static_cast<std::size_t>(window)];
    const auto count = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    avg[i] = acc / static_cast<double>(count);
  }
  return avg;
}

std::optional<std::int64_t> detect_convergence(const std::vector<double>& avg_series,
                                               double rel_tol, int hold) {
  if (avg_series.empty()) throw std::invalid_argument("empty series");
  if (hold < 1) throw std::invalid_argument("hold must be >= 1");
  const auto n = static_cast<std::int64_t>(avg_series.size());
  for (std::int64_t s = 0; s + hold < n; ++s) {
    const double ref = avg_series[static_cast<std::size_t>(s)];
    const double band = rel_tol * std::abs(ref);
    bool stable = true;
    for (std::int64_t u = s + 1; u <= s + hold; ++u) {
      if (std::abs(avg_series[static_cast<std::size_t>(u)] - ref) > band) {
        stable = false;
        break;
      }
    }
    if (stable) return s;
  }
  return std::nullopt;
}

double tail_mean(const std::vector<double>& series, double fraction) {
  if (series.empty()) throw std::invalid_argument("empty series");
  if (fraction <= 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in (0,1]");
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(fraction * static_cast<double>(series.size())));
  double acc = 0.0;
  for (std::size_t i = series.size() - count; i < series.size(); ++i) acc += series[i];
  return acc / static_cast<double>(count);
}

std::vector<MetricsRow> build_metrics(const std::vector<double>& rates,
                                      const std::vector<double>& rewards, int window,
                                      double rel_tol, int hold) {
  if (rates.size() != rewards.size()) throw std::invalid_argument("rates/rewards length mismatch");
  const auto avg = short_term_average(rates, window);
  const auto conv = detect_convergence(avg, rel_tol, hold);
  std::vector<MetricsRow> rows(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    rows[i].slot = static_cast<std::int64_t>(i);
    rows[i].sum_rate = rates[i];
    rows[i].short_term_avg = avg[i];
    rows[i].reward = rewards[i];
    rows[i].converged = conv && static_cast<std::int64_t>(i) >= *conv;
  }
  return rows;
}

}  // namespace iosim::harness
