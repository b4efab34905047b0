// SPDX-License-Identifier: Apache-2.0
#include "iosim/baselines.hpp"

#include <cmath>

namespace iosim::baselines {

env::JointAction random_policy(const ios::ActionCatalog& catalog, Rng& rng) {
  std::uniform_int_distribution<int> joint(0, catalog.n1() * catalog.n2() - 1);
  const int a = joint(rng);
  return {a / catalog.n2(), a % catalog.n2()};
}

std::size_t ts_select(const std::vector<BanditArm>& arms, Rng& rng) {
  if (arms.empty()) throw std::invalid_argument("bandit has no arms");
  std::size_t best = 0;
  double best_sample = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double stddev = 1.0 / std::sqrt(arms[i].posterior_precision);
    const double sample = normal_sample(rng, arms[i].posterior_mean, stddev);
    if (sample > best_sample) {
      best_sample = sample;
      best = i;
    }
  }
  return best;
}

void ts_update(std::vector<BanditArm>& arms, std::size_t arm_index, double reward,
               double observation_precision) {
  if (arm_index >= arms.size()) throw std::invalid_argument("unknown bandit arm");
  if (!(observation_precision > 0.0))
    throw std::invalid_argument("observation precision must be > 0");
  BanditArm& arm = arms[arm_index];
  const double precision = arm.posterior_precision + observation_precision;
  arm.posterior_mean =
      (arm.posterior_precision * arm.posterior_mean + observation_precision * reward) / precision;
  arm.posterior_precision = precision;
  ++arm.pull_count;
}

ThompsonBandit::ThompsonBandit(const ios::ActionCatalog& catalog, const ThompsonConfig& cfg)
    : cfg_(cfg) {
  for (int a1 = 0; a1 < catalog.n1(); ++a1)
    for (int a2 = 0; a2 < catalog.n2(); ++a2)
      arms_.push_back({env::JointAction{a1, a2}, cfg.prior_mean, cfg.prior_precision, 0});
}

env::JointAction ThompsonBandit::select(Rng& rng) {
  if (!sweep_done_) {
    last_selected_ = next_sweep_arm_ % arms_.size();
    ++next_sweep_arm_;
    return arms_[last_selected_].action;
  }
  last_selected_ = ts_select(arms_, rng);
  return arms_[last_selected_].action;
}

void ThompsonBandit::observe(double reward) {
  if (!sweep_done_) {
    sweep_history_.emplace_back(last_selected_, reward);
    if (sweep_history_.size() >=
        arms_.size() * static_cast<std::size_t>(cfg_.sweep_pulls_per_arm))
      finish_sweep();
    return;
  }
  ts_update(arms_, last_selected_, reward, observation_precision_);
}

void ThompsonBandit::finish_sweep() {
  double mean = 0.0;
  for (const auto& [arm, reward] : sweep_history_) mean += reward;
  mean /= static_cast<double>(sweep_history_.size());
  double var = 0.0;
  for (const auto& [arm, reward] : sweep_history_) var += (reward - mean) * (reward - mean);
  var /= static_cast<double>(sweep_history_.size());
  observation_precision_ = 1.0 / std::max(var, cfg_.min_observation_variance);
  for (const auto& [arm, reward] : sweep_history_)
    ts_update(arms_, arm, reward, observation_precision_);
  sweep_history_.clear();
  sweep_done_ = true;
}

}  // namespace iosim::baselines
