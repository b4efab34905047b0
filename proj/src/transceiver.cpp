// SPDX-License-Identifier: Apache-2.0
#include "iosim/transceiver.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace iosim::transceiver {

PilotConfig PilotConfig::identity(Eigen::Index k, double sigma_p2, double power) {
  PilotConfig cfg;
  cfg.x_p = std::sqrt(power) * CMatrix::Identity(k, k);
  cfg.sigma_p2 = sigma_p2;
  return cfg;
}

CMatrix uplink_pilot(const CMatrix& h, const PilotConfig& cfg, Rng& rng) {
  if (cfg.x_p.rows() != h.cols())
    throw std::invalid_argument("pilot matrix must be K x K");
  if (cfg.sigma_p2 < 0.0) throw std::invalid_argument("pilot noise variance must be >= 0");
  CMatrix y = h * cfg.x_p;
  if (cfg.sigma_p2 > 0.0) {
    const double s = std::sqrt(cfg.sigma_p2);
    y += s * complex_normal_matrix(y.rows(), y.cols(), rng);
  }
  return y;
}

CMatrix mmse_estimate(const CMatrix& y_p, const PilotConfig& cfg) {
  const Eigen::Index k = cfg.x_p.rows();
  const CMatrix gram =
      cfg.x_p * cfg.x_p.adjoint() + cfg.sigma_p2 * CMatrix::Identity(k, k);
  Eigen::FullPivLU<CMatrix> lu(gram);
  if (!lu.isInvertible())
    throw singularity_error("regularized pilot Gram matrix is singular");
  return y_p * cfg.x_p.adjoint() * lu.inverse();
}

CMatrix zf_precoder(const CMatrix& h_hat, double condition_cap) {
  const Eigen::Index n = h_hat.rows();
  const Eigen::Index k = h_hat.cols();
  if (n < k) throw std::invalid_argument("zero-forcing requires N >= K");

  Eigen::JacobiSVD<CMatrix> svd(h_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s(k - 1) <= 0.0 || s(0) / s(k - 1) > condition_cap)
    throw singularity_error("channel estimate is rank deficient for zero-forcing");

  // (H^H H)^-1 H^H equals the thin-SVD pseudo-inverse V S^-1 U^H.
  CMatrix v = svd.matrixV() * s.cwiseInverse().asDiagonal().toDenseMatrix().cast<Complex>() *
              svd.matrixU().adjoint();
  for (Eigen::Index row = 0; row < v.rows(); ++row) v.row(row) /= v.row(row).norm();
  return v;
}

LinkResult evaluate_link(const CMatrix& v, const CMatrix& h, const Vector& sigma_k2) {
  const Eigen::Index k_count = h.cols();
  if (v.rows() != k_count || v.cols() != h.rows())
    throw std::invalid_argument("precoder must be K x N");
  if (sigma_k2.size() != k_count)
    throw std::invalid_argument("one noise variance per UE required");

  LinkResult res;
  res.sinr.resize(k_count);
  res.rate.resize(k_count);
  const CMatrix g = v * h;  // g(l, k) = v_l^H h_k
  for (Eigen::Index k = 0; k < k_count; ++k) {
    if (!(sigma_k2(k) > 0.0)) throw std::invalid_argument("UE noise variance must be > 0");
    double interference = 0.0;
    for (Eigen::Index l = 0; l < k_count; ++l)
      if (l != k) interference += std::norm(g(l, k));
    res.sinr(k) = std::norm(g(k, k)) / (interference + sigma_k2(k));
    res.rate(k) = std::log2(1.0 + res.sinr(k));
  }
  res.sum_rate = res.rate.sum();
  return res;
}

LinkResult evaluate_link(const CMatrix& v, const CMatrix& h, double sigma_k2) {
  return evaluate_link(v, h, Vector::Constant(h.cols(), sigma_k2));
}

}  // namespace iosim::transceiver
