// SPDX-License-Identifier: Apache-2.0
#include "iosim/env.hpp"

namespace iosim::env {

void EnvConfig::validate() const {
  chan.validate();
  reward.validate();
  if (sigma_p2 < 0.0) throw std::invalid_argument("pilot noise variance must be >= 0");
  if (!(sigma_k2 > 0.0)) throw std::invalid_argument("UE noise variance must be > 0");
}

namespace {

ios::ActionCatalog make_catalog(const EnvConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x10c1);
  return ios::build_action_catalog(cfg.chan.n_elements, cfg.catalog_spec, cfg.protocol, rng);
}

}  // namespace

Environment::Environment(const EnvConfig& cfg, std::uint64_t seed)
    : Environment(cfg, make_catalog(cfg, seed), seed) {}

Environment::Environment(const EnvConfig& cfg, ios::ActionCatalog catalog, std::uint64_t seed)
    : cfg_(cfg),
      catalog_(std::move(catalog)),
      sim_(cfg.chan),
      pilot_(transceiver::PilotConfig::identity(cfg.chan.n_ues, cfg.sigma_p2)),
      phases_(ios::PhaseState::identity(cfg.chan.n_elements)),
      rng_(make_rng(seed, 0xe77)) {
  cfg_.validate();
  if (catalog_.m != cfg.chan.n_elements)
    throw std::invalid_argument("catalog element count does not match the scenario");
}

Observation Environment::assemble_observation(const CMatrix& h_hat,
                                              const ios::CoefficientPair& coeff) const {
  return Observation{h_hat, coeff.phi_r, coeff.phi_t};
}

Observation Environment::reset() {
  phases_ = ios::PhaseState::identity(cfg_.chan.n_elements);
  amp_index_ = 0;
  step_count_ = 0;
  precoder_failures_ = 0;

  sim_.initialize(rng_);
  const auto coeff = ios::coefficient_matrices(phases_, catalog_.amplitude_options[0]);
  const CMatrix h =
      channel::aggregate_channel(sim_.channels(), coeff.phi_r, coeff.phi_t, sim_.sides());
  const CMatrix y_p = transceiver::uplink_pilot(h, pilot_, rng_);
  obs_ = assemble_observation(transceiver::mmse_estimate(y_p, pilot_), coeff);
  return *obs_;
}

const Observation& Environment::observation() const {
  if (!obs_) throw state_error("environment not initialized; call reset() first");
  return *obs_;
}

StepResult Environment::step(const JointAction& action) {
  if (!obs_) throw state_error("environment not initialized; call reset() first");
  if (action.increment_index < 0 || action.increment_index >= catalog_.n1())
    throw std::invalid_argument("increment index out of range");
  if (action.amplitude_index < 0 || action.amplitude_index >= catalog_.n2())
    throw std::invalid_argument("amplitude index out of range");

  // (1) apply the joint action
  phases_ = ios::apply_increment(
      phases_, catalog_.phase_increments[static_cast<std::size_t>(action.increment_index)]);
  amp_index_ = action.amplitude_index;
  const auto coeff = ios::coefficient_matrices(
      phases_, catalog_.amplitude_options[static_cast<std::size_t>(amp_index_)]);

  // (2) advance mobility, redraw fading
  sim_.advance(rng_);

  // (3) aggregate, (4) pilot + MMSE
  const CMatrix h =
      channel::aggregate_channel(sim_.channels(), coeff.phi_r, coeff.phi_t, sim_.sides());
  const CMatrix y_p = transceiver::uplink_pilot(h, pilot_, rng_);
  const CMatrix h_hat = transceiver::mmse_estimate(y_p, pilot_);

  // (5) zero-forcing downlink, evaluated on the true channel
  StepResult result;
  try {
    const CMatrix v = transceiver::zf_precoder(h_hat, cfg_.zf_condition_cap);
    result.link = transceiver::evaluate_link(v, h, cfg_.sigma_k2);
  } catch (const singularity_error&) {
    ++precoder_failures_;
    result.precoder_failed = true;
    result.link.sinr = Vector::Zero(cfg_.chan.n_ues);
    result.link.rate = Vector::Zero(cfg_.chan.n_ues);
    result.link.sum_rate = 0.0;
  }

  // (6) thresholded reward, (7) next observation
  result.reward = reward_from_sum_rate(result.link.sum_rate, cfg_.reward);
  obs_ = assemble_observation(h_hat, coeff);
  result.obs = *obs_;
  ++step_count_;
  return result;
}

}  // namespace iosim::env
