// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "iosim/common.hpp"

namespace iosim::ios {

enum class Protocol { es, ms };

/// Running per-element phase factors (unit modulus, initialized to 1).
struct PhaseState {
  CVector phases;

  static PhaseState identity(Eigen::Index m);
  void validate() const;
};

/// Per-element reflect/refract amplitude pair. ES enforces the energy split
/// beta_r^2 + beta_t^2 = 1; MS restricts each element to a binary mode.
struct AmplitudeProfile {
  Protocol protocol = Protocol::es;
  Vector beta_r;
  Vector beta_t;

  void validate() const;
};

/// Closed-form ES split for a given power ratio beta_r^2 / beta_t^2.
std::pair<double, double> es_amplitude_from_ratio(double ratio);

/// ES profile with every element at the same (beta_r, beta_t).
AmplitudeProfile es_profile(Eigen::Index m, double beta_r);

/// Draws l2 distinct random binary element groupings (collisions re-drawn).
std::vector<AmplitudeProfile> build_ms_groups(Eigen::Index m, int l2, Rng& rng);

/// Element-wise product update of the phase state; delta must be unit-modulus.
PhaseState apply_increment(const PhaseState& state, const CVector& delta);

struct CoefficientPair {
  CVector phi_r;  // diagonal of the reflect coefficient matrix
  CVector phi_t;  // diagonal of the refract coefficient matrix
};

/// Diagonals of the reflect/refract coefficient matrices: beta .* phases.
CoefficientPair coefficient_matrices(const PhaseState& state, const AmplitudeProfile& amp);

/// Recovers the unit-modulus phase factors from a coefficient diagonal pair
/// by normalizing the larger-magnitude entry of each element.
CVector phases_from_coefficients(const CVector& phi_r, const CVector& phi_t);

/// True when phase (radians) lies on the 2^r+1-level quantization lattice
/// {-pi, -pi + pi/2^(r-1), ..., pi} within tol.
bool phase_on_quantized_lattice(double phase, int r, double tol = 1e-9);

struct CatalogSpec {
  std::vector<int> increment_indices{-3, -1, 0, 1, 3};   // l in w(l/M)
  std::vector<double> es_ratios{100.0, 10.0, 1.0, 0.1, 0.01};
  std::vector<double> es_betas;  // alternative to es_ratios: explicit beta_r list
  int ms_group_count = 5;
};

/// The discrete joint action space: phase-shift increments (DFT vectors) and
/// amplitude options under the active protocol.
struct ActionCatalog {
  Protocol protocol = Protocol::es;
  Eigen::Index m = 0;
  std::vector<int> increment_indices;
  std::vector<CVector> phase_increments;
  std::vector<AmplitudeProfile> amplitude_options;

  int n1() const { return static_cast<int>(phase_increments.size()); }
  int n2() const { return static_cast<int>(amplitude_options.size()); }
};

ActionCatalog build_action_catalog(Eigen::Index m, const CatalogSpec& spec, Protocol protocol,
                                   Rng& rng);

}  // namespace iosim::ios
