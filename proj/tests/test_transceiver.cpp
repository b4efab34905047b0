// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "iosim/transceiver.hpp"

using namespace iosim;
using namespace iosim::transceiver;

namespace {

CMatrix random_channel(Eigen::Index n, Eigen::Index k, Rng& rng) {
  return complex_normal_matrix(n, k, rng);
}

// direct loop evaluation of the SINR/rate definitions, kept independent of
// evaluate_link's implementation
LinkResult reference_link(const CMatrix& v, const CMatrix& h, double sigma2) {
  LinkResult res;
  const Eigen::Index k_count = h.cols();
  res.sinr.resize(k_count);
  res.rate.resize(k_count);
  res.sum_rate = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    double signal = 0.0, interference = 0.0;
    for (Eigen::Index l = 0; l < k_count; ++l) {
      Complex dot = 0.0;
      for (Eigen::Index a = 0; a < h.rows(); ++a) dot += v(l, a) * h(a, k);
      if (l == k)
        signal = std::norm(dot);
      else
        interference += std::norm(dot);
    }
    res.sinr(k) = signal / (interference + sigma2);
    res.rate(k) = std::log2(1.0 + res.sinr(k));
    res.sum_rate += res.rate(k);
  }
  return res;
}

}  // namespace

TEST_CASE("uplink pilot") {
  Rng rng = make_rng(7, 0);
  const auto h = random_channel(5, 4, rng);

  SUBCASE("noiseless pass-through") {
    auto cfg = PilotConfig::identity(4, 0.0);
    const auto y = uplink_pilot(h, cfg, rng);
    CHECK((y - h).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("identity pilot adds noise only") {
    auto cfg = PilotConfig::identity(4, 0.25);
    const auto y = uplink_pilot(h, cfg, rng);
    CHECK((y - h).cwiseAbs().maxCoeff() > 0.0);
    CHECK((y - h).cwiseAbs().maxCoeff() < 10.0);
  }

  SUBCASE("noise variance matches configuration") {
    auto cfg = PilotConfig::identity(2, 0.3);
    const CMatrix zero = CMatrix::Zero(2, 2);
    double second_moment = 0.0;
    const int reps = 25000;  // 4 entries per draw -> 1e5 samples
    for (int i = 0; i < reps; ++i)
      second_moment += uplink_pilot(zero, cfg, rng).cwiseAbs2().sum();
    second_moment /= reps * 4.0;
    CHECK(second_moment == doctest::Approx(0.3).epsilon(0.03));
  }
}

TEST_CASE("MMSE estimation") {
  Rng rng = make_rng(7, 1);
  const auto h = random_channel(6, 4, rng);

  SUBCASE("noiseless unitary pilot recovers exactly") {
    auto cfg = PilotConfig::identity(4, 0.0);
    const auto h_hat = mmse_estimate(uplink_pilot(h, cfg, rng), cfg);
    CHECK((h_hat - h).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("scaled-identity pilot reduces to a scalar formula") {
    PilotConfig cfg;
    const Complex c(0.8, -0.6);
    cfg.x_p = c * CMatrix::Identity(4, 4);
    cfg.sigma_p2 = 0.37;
    const CMatrix y = random_channel(6, 4, rng);
    const auto h_hat = mmse_estimate(y, cfg);
    const CMatrix expected = y * std::conj(c) / (std::norm(c) + 0.37);
    CHECK((h_hat - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("heavy regularization shrinks the estimate to zero") {
    auto cfg = PilotConfig::identity(4, 1e12);
    const auto h_hat = mmse_estimate(h, cfg);
    CHECK(h_hat.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("zero-forcing precoder") {
  Rng rng = make_rng(7, 2);

  SUBCASE("rows have unit norm") {
    const auto h = random_channel(6, 4, rng);
    const auto v = zf_precoder(h);
    CHECK(v.rows() == 4);
    CHECK(v.cols() == 6);
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      CHECK(v.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("perfect CSI nulls inter-user terms") {
    const auto h = random_channel(6, 4, rng);
    const auto v = zf_precoder(h);
    const CMatrix g = v * h;
    for (Eigen::Index l = 0; l < 4; ++l)
      for (Eigen::Index k = 0; k < 4; ++k)
        if (l != k) CHECK(std::abs(g(l, k)) < 1e-9);
  }

  SUBCASE("orthogonal columns align rows with the matched filter") {
    CMatrix h = CMatrix::Zero(4, 2);
    h(0, 0) = Complex(2.0, 0.0);
    h(1, 0) = Complex(0.0, 1.0);
    h(2, 1) = Complex(0.0, -3.0);
    const auto v = zf_precoder(h);
    for (Eigen::Index k = 0; k < 2; ++k) {
      const Complex dot = (v.row(k) * h.col(k))(0, 0);
      CHECK(std::abs(dot) == doctest::Approx(h.col(k).norm()).epsilon(1e-9));
    }
  }

  SUBCASE("rank-deficient estimate throws") {
    CMatrix h = random_channel(6, 3, rng);
    CMatrix bad(6, 4);
    bad << h, h.col(0);  // duplicated column
    CHECK_THROWS_AS(zf_precoder(bad), singularity_error);
    CHECK_THROWS_AS(zf_precoder(random_channel(3, 4, rng)), std::invalid_argument);
  }
}

TEST_CASE("link evaluation") {
  Rng rng = make_rng(7, 3);

  SUBCASE("single UE reduction") {
    const CMatrix h = random_channel(5, 1, rng);
    CMatrix v(1, 5);
    v.row(0) = h.col(0).adjoint() / h.col(0).norm();
    const auto res = evaluate_link(v, h, 0.5);
    CHECK(res.sinr(0) == doctest::Approx(h.col(0).squaredNorm() / 0.5).epsilon(1e-12));
    CHECK(res.rate(0) == doctest::Approx(std::log2(1.0 + res.sinr(0))));
  }

  SUBCASE("unit SINR gives one bit") {
    CMatrix h(2, 1);
    h << Complex(1.0, 0.0), Complex(0.0, 0.0);
    CMatrix v(1, 2);
    v << Complex(std::sqrt(0.5), 0.0), Complex(0.0, 0.0);  // |v^H h|^2 = 0.5 = sigma^2
    const auto res = evaluate_link(v, h, 0.5);
    CHECK(res.rate(0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("matches the independent reference implementation") {
    const auto h = random_channel(6, 4, rng);
    const auto v = zf_precoder(h + 0.1 * random_channel(6, 4, rng));
    const auto a = evaluate_link(v, h, 0.5);
    const auto b = reference_link(v, h, 0.5);
    CHECK(a.sum_rate == doctest::Approx(b.sum_rate).epsilon(1e-12));
    for (Eigen::Index k = 0; k < 4; ++k)
      CHECK(a.sinr(k) == doctest::Approx(b.sinr(k)).epsilon(1e-12));
  }

  SUBCASE("invariant to per-row phase rotation") {
    const auto h = random_channel(6, 3, rng);
    auto v = zf_precoder(h);
    const auto base = evaluate_link(v, h, 0.5);
    CMatrix rotated = v;
    rotated.row(1) *= std::polar(1.0, 0.77);
    const auto rot = evaluate_link(rotated, h, 0.5);
    CHECK(rot.sum_rate == doctest::Approx(base.sum_rate).epsilon(1e-12));
  }

  SUBCASE("rate is monotone in SINR and consistent") {
    const auto h = random_channel(6, 3, rng);
    const auto v = zf_precoder(h);
    auto res = evaluate_link(v, h, 0.5);
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK(res.rate(k) == doctest::Approx(std::log2(1.0 + res.sinr(k))));
      CHECK(res.rate(k) >= 0.0);
    }
    const auto noisier = evaluate_link(v, h, 1.5);
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(noisier.sinr(k) < res.sinr(k));
  }
}

TEST_CASE("end-to-end chain with noiseless pilots") {
  Rng rng = make_rng(7, 4);
  const auto h = complex_normal_matrix(6, 4, rng);
  auto cfg = PilotConfig::identity(4, 0.0);
  const auto h_hat = mmse_estimate(uplink_pilot(h, cfg, rng), cfg);
  const auto v = zf_precoder(h_hat);
  const auto res = evaluate_link(v, h, 0.5);
  const CMatrix g = v * h;
  for (Eigen::Index l = 0; l < 4; ++l)
    for (Eigen::Index k = 0; k < 4; ++k)
      if (l != k) CHECK(std::abs(g(l, k)) < 1e-9);
  for (Eigen::Index k = 0; k < 4; ++k)
    CHECK(res.sinr(k) == doctest::Approx(std::norm(g(k, k)) / 0.5).epsilon(1e-9));
}
