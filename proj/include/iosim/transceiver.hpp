// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "iosim/common.hpp"

namespace iosim::transceiver {

struct PilotConfig {
  CMatrix x_p;            // K x K pilot matrix, full rank
  double sigma_p2 = 0.1;  // linear noise variance at the BS

  /// Orthogonal pilots sqrt(power) * I.
  static PilotConfig identity(Eigen::Index k, double sigma_p2, double power = 1.0);
};

struct LinkResult {
  Vector sinr;      // per UE, linear
  Vector rate;      // per UE, bits/s/Hz
  double sum_rate = 0.0;
};

/// Uplink pilot observation Y_p = H X_p + N with i.i.d. CN(0, sigma_p2) noise.
CMatrix uplink_pilot(const CMatrix& h, const PilotConfig& cfg, Rng& rng);

/// MMSE channel estimate Y_p X_p^H (X_p X_p^H + sigma_p2 I)^-1.
CMatrix mmse_estimate(const CMatrix& y_p, const PilotConfig& cfg);

/// Zero-forcing precoder with unit-norm rows; row k is the normalized v_k^H.
/// Throws singularity_error when the estimate is (numerically) rank deficient.
CMatrix zf_precoder(const CMatrix& h_hat, double condition_cap = 1e10);

/// Per-UE SINR and rate of the downlink slot, evaluated on the true channel.
LinkResult evaluate_link(const CMatrix& v, const CMatrix& h, const Vector& sigma_k2);
LinkResult evaluate_link(const CMatrix& v, const CMatrix& h, double sigma_k2);

}  // namespace iosim::transceiver
