// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "iosim/env.hpp"
#include "iosim/neural.hpp"

namespace iosim::encode {

/// Batched network view of observations: one step sequence per state
/// component (channel estimate, reflect coefficients, refract coefficients),
/// columns are batch items.
struct NetInput {
  std::array<std::vector<Matrix>, 3> comp;
  Eigen::Index batch = 0;
};

/// Step count and per-step width of component `c` (0 = channel, 1/2 = coeffs).
std::pair<Eigen::Index, Eigen::Index> component_shape(int c, Eigen::Index n, Eigen::Index k,
                                                      Eigen::Index m, neural::SeqMode seq,
                                                      neural::ObsMode obs);

/// Input pre-processing: channel features are normalized by the surface
/// array gain so aligned cascades stay O(1) at the network inputs.
inline double channel_feature_scale(Eigen::Index m) {
  return 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, m)));
}

NetInput encode_observations(std::span<const env::Observation* const> batch, neural::SeqMode seq,
                             neural::ObsMode obs);
NetInput encode_observation(const env::Observation& obs, neural::SeqMode seq, neural::ObsMode obs_mode);

/// Flat [Re; Im] interleaved per column of the estimated channel (2NK).
Vector flatten_channel(const CMatrix& h_hat);

/// Flat coefficient context [Re phi_r; Im phi_r; Re phi_t; Im phi_t] (4M).
Vector flatten_coefficients(const env::Observation& obs);

/// Action encoding fed to the twin: one-hot increment index ++ beta_r vector.
Vector encode_action(const env::JointAction& action, const ios::ActionCatalog& catalog);

}  // namespace iosim::encode
