// SPDX-License-Identifier: Apache-2.0
#include "iosim/ios.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iosim/channel.hpp"

namespace iosim::ios {

namespace {
constexpr double kUnitTol = 1e-6;
}

PhaseState PhaseState::identity(Eigen::Index m) {
  PhaseState s;
  s.phases = CVector::Ones(m);
  return s;
}

void PhaseState::validate() const {
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    if (std::abs(std::abs(phases(i)) - 1.0) > 1e-9)
      throw std::invalid_argument("phase state entries must have unit modulus");
}

void AmplitudeProfile::validate() const {
  if (beta_r.size() != beta_t.size())
    throw std::invalid_argument("amplitude vectors must have equal length");
  for (Eigen::Index i = 0; i < beta_r.size(); ++i) {
    const double r = beta_r(i);
    const double t = beta_t(i);
    if (r < 0.0 || r > 1.0 || t < 0.0 || t > 1.0)
      throw std::invalid_argument("amplitudes must lie in [0,1]");
    if (protocol == Protocol::es) {
      if (std::abs(r * r + t * t - 1.0) > 1e-9)
        throw std::invalid_argument("ES profile violates beta_r^2 + beta_t^2 = 1");
    } else {
      const bool binary = (r == 0.0 || r == 1.0) && (t == 0.0 || t == 1.0);
      if (!binary || r + t != 1.0)
        throw std::invalid_argument("MS profile requires complementary binary amplitudes");
    }
  }
}

std::pair<double, double> es_amplitude_from_ratio(double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("ES amplitude ratio must be positive");
  return {std::sqrt(ratio / (1.0 + ratio)), std::sqrt(1.0 / (1.0 + ratio))};
}

AmplitudeProfile es_profile(Eigen::Index m, double beta_r) {
  if (beta_r < 0.0 || beta_r > 1.0) throw std::invalid_argument("beta_r must lie in [0,1]");
  AmplitudeProfile p;
  p.protocol = Protocol::es;
  p.beta_r = Vector::Constant(m, beta_r);
  p.beta_t = Vector::Constant(m, std::sqrt(std::max(0.0, 1.0 - beta_r * beta_r)));
  p.validate();
  return p;
}

std::vector<AmplitudeProfile> build_ms_groups(Eigen::Index m, int l2, Rng& rng) {
  if (l2 < 1) throw std::invalid_argument("MS group count must be >= 1");
  if (m >= 1 && l2 > (1LL << std::min<Eigen::Index>(m, 62)))
    throw std::invalid_argument("more distinct MS groups requested than exist");

  std::set<std::vector<bool>> seen;
  std::vector<AmplitudeProfile> out;
  std::uniform_int_distribution<int> coin(0, 1);
  while (static_cast<int>(out.size()) < l2) {
    std::vector<bool> mask(static_cast<std::size_t>(m));
    for (auto&& bit : mask) bit = coin(rng) != 0;
    if (!seen.insert(mask).second) continue;  // collision: re-draw
    AmplitudeProfile p;
    p.protocol = Protocol::ms;
    p.beta_r = Vector::Zero(m);
    p.beta_t = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool reflect = mask[static_cast<std::size_t>(i)];
      p.beta_r(i) = reflect ? 1.0 : 0.0;
      p.beta_t(i) = reflect ? 0.0 : 1.0;
    }
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

PhaseState apply_increment(const PhaseState& state, const CVector& delta) {
  if (delta.size() != state.phases.size())
    throw std::invalid_argument("increment length must match element count");
  for (Eigen::Index i = 0; i < delta.size(); ++i)
    if (std::abs(std::abs(delta(i)) - 1.0) > kUnitTol)
      throw std::invalid_argument("phase increments must have unit modulus");
  PhaseState next;
  next.phases = state.phases.cwiseProduct(delta);
  return next;
}

CoefficientPair coefficient_matrices(const PhaseState& state, const AmplitudeProfile& amp) {
  if (amp.beta_r.size() != state.phases.size())
    throw std::invalid_argument("amplitude/phase length mismatch");
  CoefficientPair c;
  c.phi_r = amp.beta_r.cast<Complex>().cwiseProduct(state.phases);
  c.phi_t = amp.beta_t.cast<Complex>().cwiseProduct(state.phases);
  return c;
}

CVector phases_from_coefficients(const CVector& phi_r, const CVector& phi_t) {
  if (phi_r.size() != phi_t.size()) throw std::invalid_argument("coefficient length mismatch");
  CVector phases(phi_r.size());
  for (Eigen::Index i = 0; i < phi_r.size(); ++i) {
    const Complex c = (std::abs(phi_r(i)) >= std::abs(phi_t(i))) ? phi_r(i) : phi_t(i);
    const double mag = std::abs(c);
    phases(i) = (mag > 0.0) ? c / mag : Complex(1.0, 0.0);
  }
  return phases;
}

bool phase_on_quantized_lattice(double phase, int r, double tol) {
  if (r < 1) throw std::invalid_argument("quantization order must be >= 1");
  const double step = M_PI / static_cast<double>(1LL << (r - 1));
  double x = std::remainder(phase, 2.0 * M_PI);
  const double q = std::round((x + M_PI) / step);
  return std::abs(x + M_PI - q * step) <= tol;
}

ActionCatalog build_action_catalog(Eigen::Index m, const CatalogSpec& spec, Protocol protocol,
                                   Rng& rng) {
  if (m < 1) throw std::invalid_argument("element count must be >= 1");
  if (spec.increment_indices.empty())
    throw std::invalid_argument("at least one phase increment required");
  std::set<int> unique(spec.increment_indices.begin(), spec.increment_indices.end());
  if (unique.size() != spec.increment_indices.size())
    throw std::invalid_argument("duplicate phase increments in catalog");
  if (unique.count(0) == 0)
    throw std::invalid_argument("the identity increment w(0) must be present");

  ActionCatalog cat;
  cat.protocol = protocol;
  cat.m = m;
  cat.increment_indices = spec.increment_indices;
  cat.phase_increments.reserve(spec.increment_indices.size());
  for (int l : spec.increment_indices)
    cat.phase_increments.push_back(
        channel::steering_vector(static_cast<double>(l) / static_cast<double>(m), m));

  if (protocol == Protocol::es) {
    if (!spec.es_betas.empty()) {
      for (double b : spec.es_betas) cat.amplitude_options.push_back(es_profile(m, b));
    } else {
      if (spec.es_ratios.empty()) throw std::invalid_argument("ES catalog needs ratios or betas");
      for (double ratio : spec.es_ratios)
        cat.amplitude_options.push_back(es_profile(m, es_amplitude_from_ratio(ratio).first));
    }
  } else {
    if (spec.ms_group_count < 1) throw std::invalid_argument("MS catalog needs >= 1 group");
    cat.amplitude_options = build_ms_groups(m, spec.ms_group_count, rng);
  }
  return cat;
}

}  // namespace iosim::ios
