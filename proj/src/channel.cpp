// SPDX-License-Identifier: Apache-2.0
#include "iosim/channel.hpp"

#include <cmath>
#include <random>

namespace iosim::channel {

void Geometry::validate() const {
  if (ue_x_max <= ue_x_min || ue_y_max <= ue_y_min)
    throw std::invalid_argument("UE area must have positive width and depth");
  if ((bs_position - ios_position).norm() == 0.0)
    throw std::invalid_argument("BS and surface positions coincide");
}

void MobilityParams::validate() const {
  if (memory < 0.0 || memory > 1.0)
    throw std::invalid_argument("mobility memory must lie in [0,1]");
  if (velocity_std < 0.0 || heading_std < 0.0)
    throw std::invalid_argument("mobility stddevs must be non-negative");
}

void ChannelSimConfig::validate() const {
  geom.validate();
  mobility.validate();
  if (n_antennas < 1 || n_ues < 1 || n_elements < 1)
    throw std::invalid_argument("channel dimensions must be positive");
  if (n_reflected < 0 || n_reflected > n_ues)
    throw std::invalid_argument("reflected UE count out of range");
  if (rician_factor < 0.0) throw std::invalid_argument("Rician factor must be non-negative");
  if (!(slot_duration > 0.0)) throw std::invalid_argument("slot duration must be positive");
}

CVector steering_vector(double phi, Eigen::Index length) {
  if (length < 1) throw std::invalid_argument("steering vector length must be >= 1");
  CVector w(length);
  for (Eigen::Index m = 0; m < length; ++m)
    w(m) = std::polar(1.0, M_PI * phi * static_cast<double>(m));
  return w;
}

std::pair<double, double> directional_cosines(const Geometry& geom) {
  const Eigen::Vector3d d = geom.bs_position - geom.ios_position;
  const double norm = d.norm();
  if (norm == 0.0) throw std::invalid_argument("degenerate geometry: coincident BS and surface");
  return {d.y() / norm, d.x() / norm};
}

CMatrix los_matrix(double psi_rx, double psi_tx, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("los_matrix dimensions must be >= 1");
  const CVector u_rx = steering_vector(psi_rx, rows);
  const CVector u_tx = steering_vector(psi_tx, cols);
  return u_rx * u_tx.adjoint();
}

CMatrix sample_rician(const CMatrix& los, double lambda, Rng& rng) {
  if (lambda < 0.0) throw std::invalid_argument("Rician factor must be non-negative");
  const double a = std::sqrt(lambda / (lambda + 1.0));
  const double b = std::sqrt(1.0 / (lambda + 1.0));
  return a * los + b * complex_normal_matrix(los.rows(), los.cols(), rng);
}

namespace {

// Fold x back into [lo, hi] by specular reflection at the interval edges.
double reflect_into(double x, double lo, double hi) {
  const double span = hi - lo;
  double y = std::fmod(x - lo, 2.0 * span);
  if (y < 0.0) y += 2.0 * span;
  y = (y <= span) ? y : 2.0 * span - y;
  return lo + y;
}

// Directional cosine seen by an array at `origin` with axis `axis` for a ray
// towards `target`.
double link_cosine(const Eigen::Vector3d& origin, const Eigen::Vector3d& axis,
                   const Eigen::Vector3d& target) {
  const Eigen::Vector3d d = target - origin;
  return axis.dot(d) / d.norm();
}

}  // namespace

UeState step_mobility(const UeState& state, const MobilityParams& params, double dt,
                      const Geometry& geom, Rng& rng) {
  if (dt <= 0.0) throw std::invalid_argument("mobility step dt must be positive");
  const double k = params.memory;
  const double noise_scale = std::sqrt(1.0 - k * k);

  UeState next = state;
  next.velocity = k * state.velocity + (1.0 - k) * params.mean_velocity +
                  noise_scale * params.velocity_std * normal_sample(rng);
  next.velocity = std::max(0.0, next.velocity);
  next.heading = k * state.heading + (1.0 - k) * params.mean_heading +
                 noise_scale * params.heading_std * normal_sample(rng);

  next.position.x() += next.velocity * dt * std::cos(next.heading);
  next.position.y() += next.velocity * dt * std::sin(next.heading);
  next.position.x() = reflect_into(next.position.x(), geom.ue_x_min, geom.ue_x_max);
  next.position.y() = reflect_into(next.position.y(), geom.ue_y_min, geom.ue_y_max);
  next.position.z() = geom.ue_height;
  return next;
}

CMatrix aggregate_channel(const ChannelSet& ch, const CVector& phi_r_diag,
                          const CVector& phi_t_diag, const std::vector<Side>& sides) {
  const Eigen::Index k_count = ch.h_bu.cols();
  if (static_cast<Eigen::Index>(sides.size()) != k_count)
    throw std::invalid_argument("one side label per UE required");
  if (phi_r_diag.size() != ch.h_bo.cols() || phi_t_diag.size() != ch.h_bo.cols())
    throw std::invalid_argument("coefficient diagonal length must match element count");

  CMatrix h = ch.h_bu;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const CVector& phi = (sides[static_cast<std::size_t>(k)] == Side::reflected)
                             ? phi_r_diag
                             : phi_t_diag;
    h.col(k) += ch.h_bo * phi.cwiseProduct(ch.h_ou.col(k));
  }
  return h;
}

ChannelSimulator::ChannelSimulator(const ChannelSimConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto [psi_o, psi_b] = directional_cosines(cfg_.geom);
  bo_los_ = los_matrix(psi_b, psi_o, cfg_.n_antennas, cfg_.n_elements);
  sides_.resize(static_cast<std::size_t>(cfg_.n_ues));
  for (Eigen::Index k = 0; k < cfg_.n_ues; ++k)
    sides_[static_cast<std::size_t>(k)] = (k < cfg_.n_reflected) ? Side::reflected : Side::refracted;
}

void ChannelSimulator::initialize(Rng& rng) {
  ues_.assign(static_cast<std::size_t>(cfg_.n_ues), UeState{});
  std::uniform_real_distribution<double> ux(cfg_.geom.ue_x_min, cfg_.geom.ue_x_max);
  std::uniform_real_distribution<double> uy(cfg_.geom.ue_y_min, cfg_.geom.ue_y_max);
  for (Eigen::Index k = 0; k < cfg_.n_ues; ++k) {
    auto& ue = ues_[static_cast<std::size_t>(k)];
    ue.position = {ux(rng), uy(rng), cfg_.geom.ue_height};
    ue.velocity = cfg_.mobility.mean_velocity;
    ue.heading = cfg_.mobility.mean_heading;
    ue.side = sides_[static_cast<std::size_t>(k)];
  }
  initialized_ = true;
  rebuild(rng);
}

void ChannelSimulator::advance(Rng& rng) {
  if (!initialized_) throw state_error("ChannelSimulator::advance before initialize");
  if (cfg_.redraw_positions_each_slot) {
    std::uniform_real_distribution<double> ux(cfg_.geom.ue_x_min, cfg_.geom.ue_x_max);
    std::uniform_real_distribution<double> uy(cfg_.geom.ue_y_min, cfg_.geom.ue_y_max);
    for (auto& ue : ues_) ue.position = {ux(rng), uy(rng), cfg_.geom.ue_height};
  } else {
    for (auto& ue : ues_)
      ue = step_mobility(ue, cfg_.mobility, cfg_.slot_duration, cfg_.geom, rng);
  }
  rebuild(rng);
}

void ChannelSimulator::rebuild(Rng& rng) {
  const Eigen::Index n = cfg_.n_antennas;
  const Eigen::Index m = cfg_.n_elements;
  const Eigen::Index k_count = cfg_.n_ues;
  const Eigen::Vector3d bs_axis(1.0, 0.0, 0.0);
  const Eigen::Vector3d ios_axis(0.0, 1.0, 0.0);

  CMatrix bu_los(n, k_count);
  CMatrix ou_los(m, k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto& p = ues_[static_cast<std::size_t>(k)].position;
    bu_los.col(k) = steering_vector(link_cosine(cfg_.geom.bs_position, bs_axis, p), n);
    ou_los.col(k) = steering_vector(link_cosine(cfg_.geom.ios_position, ios_axis, p), m);
  }

  channels_.rician_factor = cfg_.rician_factor;
  channels_.h_bu = sample_rician(bu_los, cfg_.rician_factor, rng);
  channels_.h_bo = sample_rician(bo_los_, cfg_.rician_factor, rng);
  channels_.h_ou = sample_rician(ou_los, cfg_.rician_factor, rng);
}

}  // namespace iosim::channel
