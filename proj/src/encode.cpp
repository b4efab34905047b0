// SPDX-License-Identifier: Apache-2.0
#include "iosim/encode.hpp"

namespace iosim::encode {

namespace {

// Structural step of a coefficient component: [Re d_m; Im d_m] (compact) or
// the full matrix row with the single non-zero at position m (full mode).
void fill_coeff_steps(const CVector& diag, neural::ObsMode obs, Eigen::Index batch_col,
                      std::vector<Matrix>& steps) {
  const Eigen::Index m = diag.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (obs == neural::ObsMode::compact) {
      steps[static_cast<std::size_t>(i)](0, batch_col) = diag(i).real();
      steps[static_cast<std::size_t>(i)](1, batch_col) = diag(i).imag();
    } else {
      steps[static_cast<std::size_t>(i)](i, batch_col) = diag(i).real();
      steps[static_cast<std::size_t>(i)](m + i, batch_col) = diag(i).imag();
    }
  }
}

std::vector<Matrix> collapse_to_single_step(const std::vector<Matrix>& steps) {
  Eigen::Index rows = 0;
  for (const auto& s : steps) rows += s.rows();
  Matrix joined(rows, steps.front().cols());
  Eigen::Index at = 0;
  for (const auto& s : steps) {
    joined.middleRows(at, s.rows()) = s;
    at += s.rows();
  }
  return {std::move(joined)};
}

}  // namespace

std::pair<Eigen::Index, Eigen::Index> component_shape(int c, Eigen::Index n, Eigen::Index k,
                                                      Eigen::Index m, neural::SeqMode seq,
                                                      neural::ObsMode obs) {
  Eigen::Index steps = 0, width = 0;
  if (c == 0) {
    steps = k;
    width = 2 * n;
  } else {
    steps = m;
    width = (obs == neural::ObsMode::compact) ? 2 : 2 * m;
  }
  if (seq == neural::SeqMode::single_step) {
    width *= steps;
    steps = 1;
  }
  return {steps, width};
}

NetInput encode_observations(std::span<const env::Observation* const> batch, neural::SeqMode seq,
                             neural::ObsMode obs) {
  if (batch.empty()) throw std::invalid_argument("empty observation batch");
  const Eigen::Index n = batch[0]->h_hat.rows();
  const Eigen::Index k = batch[0]->h_hat.cols();
  const Eigen::Index m = batch[0]->phi_r.size();
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());

  NetInput in;
  in.batch = b;

  // component 0: the channel estimate, one structural step per UE column
  std::vector<Matrix> ch_steps(static_cast<std::size_t>(k), Matrix::Zero(2 * n, b));
  for (Eigen::Index col = 0; col < b; ++col) {
    const CMatrix& h = batch[static_cast<std::size_t>(col)]->h_hat;
    if (h.rows() != n || h.cols() != k) throw std::invalid_argument("observation shape mismatch");
    for (Eigen::Index uk = 0; uk < k; ++uk) {
      auto& step = ch_steps[static_cast<std::size_t>(uk)];
      step.block(0, col, n, 1) = h.col(uk).real();
      step.block(n, col, n, 1) = h.col(uk).imag();
    }
  }

  const Eigen::Index coeff_width = (obs == neural::ObsMode::compact) ? 2 : 2 * m;
  std::vector<Matrix> r_steps(static_cast<std::size_t>(m), Matrix::Zero(coeff_width, b));
  std::vector<Matrix> t_steps(static_cast<std::size_t>(m), Matrix::Zero(coeff_width, b));
  for (Eigen::Index col = 0; col < b; ++col) {
    const auto& o = *batch[static_cast<std::size_t>(col)];
    if (o.phi_r.size() != m || o.phi_t.size() != m)
      throw std::invalid_argument("observation shape mismatch");
    fill_coeff_steps(o.phi_r, obs, col, r_steps);
    fill_coeff_steps(o.phi_t, obs, col, t_steps);
  }

  if (seq == neural::SeqMode::single_step) {
    in.comp[0] = collapse_to_single_step(ch_steps);
    in.comp[1] = collapse_to_single_step(r_steps);
    in.comp[2] = collapse_to_single_step(t_steps);
  } else {
    in.comp[0] = std::move(ch_steps);
    in.comp[1] = std::move(r_steps);
    in.comp[2] = std::move(t_steps);
  }
  return in;
}

NetInput encode_observation(const env::Observation& obs, neural::SeqMode seq,
                            neural::ObsMode obs_mode) {
  const env::Observation* ptr = &obs;
  return encode_observations(std::span<const env::Observation* const>(&ptr, 1), seq, obs_mode);
}

Vector flatten_channel(const CMatrix& h_hat) {
  const Eigen::Index n = h_hat.rows();
  const Eigen::Index k = h_hat.cols();
  Vector out(2 * n * k);
  Eigen::Index at = 0;
  for (Eigen::Index col = 0; col < k; ++col) {
    out.segment(at, n) = h_hat.col(col).real();
    out.segment(at + n, n) = h_hat.col(col).imag();
    at += 2 * n;
  }
  return out;
}

Vector flatten_coefficients(const env::Observation& obs) {
  const Eigen::Index m = obs.phi_r.size();
  Vector out(4 * m);
  out.segment(0, m) = obs.phi_r.real();
  out.segment(m, m) = obs.phi_r.imag();
  out.segment(2 * m, m) = obs.phi_t.real();
  out.segment(3 * m, m) = obs.phi_t.imag();
  return out;
}

Vector encode_action(const env::JointAction& action, const ios::ActionCatalog& catalog) {
  if (action.increment_index < 0 || action.increment_index >= catalog.n1() ||
      action.amplitude_index < 0 || action.amplitude_index >= catalog.n2())
    throw std::invalid_argument("action index out of range");
  Vector out = Vector::Zero(catalog.n1() + catalog.m);
  out(action.increment_index) = 1.0;
  out.segment(catalog.n1(), catalog.m) =
      catalog.amplitude_options[static_cast<std::size_t>(action.amplitude_index)].beta_r;
  return out;
}

}  // namespace iosim::encode
