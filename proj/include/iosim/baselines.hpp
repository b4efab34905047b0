// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "iosim/env.hpp"
#include "iosim/ios.hpp"

namespace iosim::baselines {

/// Uniform choice over the (2L1+1) x L2 joint action grid; state-independent.
env::JointAction random_policy(const ios::ActionCatalog& catalog, Rng& rng);

struct BanditArm {
  env::JointAction action;
  double posterior_mean = 0.0;
  double posterior_precision = 0.01;
  std::int64_t pull_count = 0;
};

/// Samples each arm's Gaussian posterior and returns the argmax arm index.
std::size_t ts_select(const std::vector<BanditArm>& arms, Rng& rng);

/// Conjugate Gaussian update (known observation precision) of one arm.
void ts_update(std::vector<BanditArm>& arms, std::size_t arm_index, double reward,
               double observation_precision);

struct ThompsonConfig {
  double prior_mean = 0.0;
  double prior_precision = 0.01;
  int sweep_pulls_per_arm = 1;  // initial round-robin used to set the noise scale
  double min_observation_variance = 1e-6;
};

/// Thompson sampling over the joint arm set. An initial round-robin sweep
/// estimates the reward variance, which then serves as the (fixed) Gaussian
/// observation variance for all conjugate updates.
class ThompsonBandit {
 public:
  ThompsonBandit(const ios::ActionCatalog& catalog, const ThompsonConfig& cfg);

  env::JointAction select(Rng& rng);
  void observe(double reward);

  const std::vector<BanditArm>& arms() const { return arms_; }
  bool sweep_done() const { return sweep_done_; }
  double observation_precision() const { return observation_precision_; }

 private:
  void finish_sweep();

  ThompsonConfig cfg_;
  std::vector<BanditArm> arms_;
  std::vector<std::pair<std::size_t, double>> sweep_history_;
  std::size_t next_sweep_arm_ = 0;
  std::size_t last_selected_ = 0;
  bool sweep_done_ = false;
  double observation_precision_ = 1.0;
};

}  // namespace iosim::baselines
