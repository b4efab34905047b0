// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "iosim/common.hpp"

namespace iosim::channel {

/// Static deployment geometry. The BS array is laid out along the x-axis, the
/// surface along the y-axis; UEs move on a horizontal rectangle at fixed height.
struct Geometry {
  Eigen::Vector3d bs_position{0.0, 0.0, 10.0};
  Eigen::Vector3d ios_position{-2.0, 5.0, 5.0};
  double ue_x_min = -10.0;
  double ue_x_max = 10.0;
  double ue_y_min = -10.0;
  double ue_y_max = 10.0;
  double ue_height = 1.5;

  void validate() const;
};

enum class Side { reflected, refracted };

struct UeState {
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  double velocity = 0.0;  // m/s, never negative
  double heading = 0.0;   // radians in the horizontal plane
  Side side = Side::reflected;
};

/// Gauss-Markov mobility parameters (memory level kappa plus the asymptotic
/// mean/std of velocity and heading).
struct MobilityParams {
  double memory = 0.5;
  double mean_velocity = 1.0;
  double velocity_std = 0.5;
  double mean_heading = 30.0 * M_PI / 180.0;
  double heading_std = 10.0 * M_PI / 180.0;

  void validate() const;
};

/// One slot's realization of the three sub-channels.
struct ChannelSet {
  CMatrix h_bu;  // N x K, BS - UEs
  CMatrix h_bo;  // N x M, BS - surface
  CMatrix h_ou;  // M x K, surface - UEs
  double rician_factor = 10.0;
};

/// Uniform-linear-array steering vector: element m equals exp(j*pi*phi*m).
CVector steering_vector(double phi, Eigen::Index length);

/// Directional cosines (psi_O, psi_B) of the BS-surface link: the y-projection
/// at the surface and the x-projection at the BS of the unit vector p_B - p_O.
std::pair<double, double> directional_cosines(const Geometry& geom);

/// Rank-1 line-of-sight matrix: entry (a, b) = exp(j*pi*(psi_rx*a - psi_tx*b)),
/// i.e. the outer product of two steering vectors.
CMatrix los_matrix(double psi_rx, double psi_tx, Eigen::Index rows, Eigen::Index cols);

/// Mixes the given LoS component with a fresh i.i.d. CN(0,1) NLoS draw:
/// sqrt(lambda/(lambda+1)) * los + sqrt(1/(lambda+1)) * W.
CMatrix sample_rician(const CMatrix& los, double lambda, Rng& rng);

/// One discrete Gauss-Markov step of duration dt seconds; the horizontal
/// position is reflected back into the UE rectangle, velocity clamps at zero.
UeState step_mobility(const UeState& state, const MobilityParams& params, double dt,
                      const Geometry& geom, Rng& rng);

/// Aggregated equivalent channel: column k is h_bu_k + H_BO * diag(phi) * h_ou_k
/// with phi chosen by UE k's side label.
CMatrix aggregate_channel(const ChannelSet& ch, const CVector& phi_r_diag,
                          const CVector& phi_t_diag, const std::vector<Side>& sides);

struct ChannelSimConfig {
  Geometry geom;
  MobilityParams mobility;
  Eigen::Index n_antennas = 5;
  Eigen::Index n_ues = 5;
  Eigen::Index n_elements = 32;
  int n_reflected = 3;
  double rician_factor = 10.0;
  // One mobility step per slot; a slot lasts one cellular TTI by default, so
  // UE positions drift on a much slower time scale than the fast fading.
  double slot_duration = 1e-3;  // seconds
  bool redraw_positions_each_slot = false;

  void validate() const;
};

/// Owns UE mobility state and produces a fresh ChannelSet per slot; LoS
/// components follow the UE positions, NLoS is redrawn i.i.d. each slot.
class ChannelSimulator {
 public:
  explicit ChannelSimulator(const ChannelSimConfig& cfg);

  void initialize(Rng& rng);
  void advance(Rng& rng);  // one slot: mobility step (dt = 1) + channel redraw

  const ChannelSet& channels() const { return channels_; }
  const std::vector<UeState>& ues() const { return ues_; }
  const std::vector<Side>& sides() const { return sides_; }
  const ChannelSimConfig& config() const { return cfg_; }

 private:
  void rebuild(Rng& rng);

  ChannelSimConfig cfg_;
  std::vector<UeState> ues_;
  std::vector<Side> sides_;
  ChannelSet channels_;
  CMatrix bo_los_;  // static: BS and surface do not move
  bool initialized_ = false;
};

}  // namespace iosim::channel
