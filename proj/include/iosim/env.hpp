// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "iosim/channel.hpp"
#include "iosim/ios.hpp"
#include "iosim/transceiver.hpp"

namespace iosim::env {

/// What the agent sees: the slot's channel estimate plus the coefficient
/// diagonals that produced it. Logical tensor shapes are 2 x N x K for the
/// channel and 2 x M x M for each coefficient matrix (off-diagonals zero).
struct Observation {
  CMatrix h_hat;  // N x K
  CVector phi_r;  // M (diagonal)
  CVector phi_t;  // M (diagonal)

  std::array<Eigen::Index, 3> channel_tensor_dims() const { return {2, h_hat.rows(), h_hat.cols()}; }
  std::array<Eigen::Index, 3> coeff_tensor_dims() const { return {2, phi_r.size(), phi_r.size()}; }
};

struct JointAction {
  int increment_index = 0;
  int amplitude_index = 0;
};

struct RewardConfig {
  double threshold = 10.0;  // R_th, bits/s/Hz
  double penalty = 20.0;    // omega

  void validate() const {
    if (penalty < 0.0) throw std::invalid_argument("reward penalty must be >= 0");
  }
};

/// Thresholded sum-rate reward shared by the environment and twin targets.
inline double reward_from_sum_rate(double sum_rate, const RewardConfig& cfg) {
  return sum_rate >= cfg.threshold ? sum_rate : sum_rate - cfg.penalty;
}

struct EnvConfig {
  channel::ChannelSimConfig chan;
  ios::Protocol protocol = ios::Protocol::es;
  ios::CatalogSpec catalog_spec;
  double sigma_p2 = 0.1;  // BS pilot noise variance, linear
  double sigma_k2 = 0.5;  // per-UE noise variance, linear
  RewardConfig reward;
  double zf_condition_cap = 1e10;

  void validate() const;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  transceiver::LinkResult link;
  bool precoder_failed = false;
};

/// The slotted MU-MIMO environment: applies the joint action, advances
/// mobility and fading, runs the pilot/estimation round and the zero-forcing
/// downlink, and returns the thresholded reward.
class Environment {
 public:
  Environment(const EnvConfig& cfg, std::uint64_t seed);
  Environment(const EnvConfig& cfg, ios::ActionCatalog catalog, std::uint64_t seed);

  Observation reset();
  StepResult step(const JointAction& action);

  std::pair<int, int> action_count() const { return {catalog_.n1(), catalog_.n2()}; }
  const ios::ActionCatalog& catalog() const { return catalog_; }
  const Observation& observation() const;
  const ios::PhaseState& phases() const { return phases_; }
  int amplitude_index() const { return amp_index_; }
  const EnvConfig& config() const { return cfg_; }

  std::int64_t step_count() const { return step_count_; }
  int precoder_failures() const { return precoder_failures_; }

 private:
  Observation assemble_observation(const CMatrix& h_hat, const ios::CoefficientPair& coeff) const;

  EnvConfig cfg_;
  ios::ActionCatalog catalog_;
  channel::ChannelSimulator sim_;
  transceiver::PilotConfig pilot_;
  ios::PhaseState phases_;
  int amp_index_ = 0;
  Rng rng_;
  std::optional<Observation> obs_;
  std::int64_t step_count_ = 0;
  int precoder_failures_ = 0;
};

}  // namespace iosim::env
