// SPDX-License-Identifier: Apache-2.0
#include <Eigen/SVD>

#include "doctest.h"
#include "iosim/channel.hpp"

using namespace iosim;
using namespace iosim::channel;

TEST_CASE("steering vector basics") {
  const auto ones = steering_vector(0.0, 32);
  for (Eigen::Index i = 0; i < 32; ++i) CHECK(std::abs(ones(i) - Complex(1, 0)) < 1e-15);

  // element 1 of w(1/32) is exp(j*pi/32)
  const auto w = steering_vector(1.0 / 32.0, 32);
  CHECK(w(0) == Complex(1, 0));
  CHECK(w(1).real() == doctest::Approx(0.99518472667219693).epsilon(1e-12));
  CHECK(w(1).imag() == doctest::Approx(0.09801714032956060).epsilon(1e-12));

  // opposite cosines conjugate each other
  const auto wp = steering_vector(3.0 / 32.0, 32);
  const auto wn = steering_vector(-3.0 / 32.0, 32);
  CHECK(std::abs(wn(31) - std::conj(wp(31))) < 1e-12);

  CHECK_THROWS_AS(steering_vector(0.5, 0), std::invalid_argument);
}

TEST_CASE("steering vector entries have unit modulus") {
  Rng rng = make_rng(42, 0);
  std::uniform_real_distribution<double> phi(-1.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> len(1, 64);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = steering_vector(phi(rng), len(rng));
    for (Eigen::Index i = 0; i < w.size(); ++i)
      CHECK(std::abs(std::abs(w(i)) - 1.0) < 1e-12);
  }
}

TEST_CASE("directional cosines of the standard geometry") {
  Geometry g;  // BS [0,0,10], IOS [-2,5,5]
  const auto [psi_o, psi_b] = directional_cosines(g);
  CHECK(psi_o == doctest::Approx(-5.0 / std::sqrt(54.0)).epsilon(1e-12));
  CHECK(psi_b == doctest::Approx(2.0 / std::sqrt(54.0)).epsilon(1e-12));
  CHECK(psi_o == doctest::Approx(-0.68041).epsilon(1e-4));
  CHECK(psi_b == doctest::Approx(0.27217).epsilon(1e-4));

  Geometry above = g;
  above.ios_position = {0.0, 0.0, 4.0};
  const auto [zo, zb] = directional_cosines(above);
  CHECK(zo == doctest::Approx(0.0));
  CHECK(zb == doctest::Approx(0.0));

  Geometry along_x = g;
  along_x.ios_position = g.bs_position - Eigen::Vector3d{3.0, 0.0, 0.0};
  const auto [xo, xb] = directional_cosines(along_x);
  CHECK(xo == doctest::Approx(0.0));
  CHECK(xb == doctest::Approx(1.0));

  Geometry degenerate = g;
  degenerate.ios_position = g.bs_position;
  CHECK_THROWS_AS(directional_cosines(degenerate), std::invalid_argument);
}

TEST_CASE("los matrix structure") {
  const auto flat = los_matrix(0.0, 0.0, 3, 2);
  CHECK(flat.rows() == 3);
  CHECK(flat.cols() == 2);
  CHECK((flat - CMatrix::Ones(3, 2)).cwiseAbs().maxCoeff() < 1e-15);

  Rng rng = make_rng(42, 1);
  std::uniform_real_distribution<double> phi(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto los = los_matrix(phi(rng), phi(rng), 32, 5);
    CHECK(std::abs(los(0, 0) - Complex(1, 0)) < 1e-15);
    Eigen::JacobiSVD<CMatrix> svd(los);
    CHECK(svd.singularValues()(1) <= 1e-9 * svd.singularValues()(0));
    for (Eigen::Index j = 0; j < los.cols(); ++j)
      for (Eigen::Index i = 0; i < los.rows(); ++i)
        CHECK(std::abs(std::abs(los(i, j)) - 1.0) < 1e-12);
  }
}

TEST_CASE("rician sampling moments") {
  Rng rng = make_rng(42, 2);
  const CMatrix los = CMatrix::Ones(1, 1);

  SUBCASE("LoS-dominant limit") {
    const auto h = sample_rician(CMatrix::Constant(4, 4, Complex(0.5, -0.25)), 1e12, rng);
    CHECK((h - CMatrix::Constant(4, 4, Complex(0.5, -0.25))).cwiseAbs().maxCoeff() < 1e-5);
  }

  SUBCASE("pure NLoS variance") {
    const int draws = 100000;
    double second_moment = 0.0;
    for (int i = 0; i < draws; ++i) second_moment += std::norm(sample_rician(los, 0.0, rng)(0, 0));
    second_moment /= draws;
    CHECK(second_moment == doctest::Approx(1.0).epsilon(0.03));
  }

  SUBCASE("mixing weights at lambda = 10") {
    const int draws = 100000;
    Complex mean = 0.0;
    double second_moment = 0.0;
    for (int i = 0; i < draws; ++i) {
      const Complex v = sample_rician(los, 10.0, rng)(0, 0);
      mean += v;
      second_moment += std::norm(v);
    }
    mean /= static_cast<double>(draws);
    second_moment /= draws;
    CHECK(mean.real() == doctest::Approx(std::sqrt(10.0 / 11.0)).epsilon(0.02));
    CHECK(std::abs(mean.imag()) < 0.02);
    // E|h|^2 = lambda/(lambda+1) |los|^2 + 1/(lambda+1)
    CHECK(second_moment == doctest::Approx(1.0).epsilon(0.03));
  }

  SUBCASE("negative factor rejected") {
    CHECK_THROWS_AS(sample_rician(los, -0.1, rng), std::invalid_argument);
  }
}

TEST_CASE("gauss-markov mobility") {
  Geometry geom;
  Rng rng = make_rng(42, 3);

  SUBCASE("full-memory limit keeps velocity and heading") {
    MobilityParams p;
    p.memory = 1.0;
    p.velocity_std = 0.0;
    p.heading_std = 0.0;
    UeState ue;
    ue.position = {0.0, 0.0, geom.ue_height};
    ue.velocity = 0.7;
    ue.heading = 1.1;
    const auto next = step_mobility(ue, p, 1.0, geom, rng);
    CHECK(next.velocity == doctest::Approx(0.7));
    CHECK(next.heading == doctest::Approx(1.1));
  }

  SUBCASE("memoryless long-run mean velocity") {
    MobilityParams p;
    p.memory = 0.0;
    UeState ue;
    ue.position = {0.0, 0.0, geom.ue_height};
    double mean_v = 0.0;
    const int steps = 100000;
    for (int i = 0; i < steps; ++i) {
      ue = step_mobility(ue, p, 1.0, geom, rng);
      mean_v += ue.velocity;
    }
    mean_v /= steps;
    CHECK(mean_v == doctest::Approx(1.0).epsilon(0.03));
  }

  SUBCASE("boundary reflection stays strictly inside") {
    MobilityParams p;
    p.memory = 1.0;
    p.velocity_std = 0.0;
    p.heading_std = 0.0;
    UeState ue;
    ue.position = {geom.ue_x_max, 0.0, geom.ue_height};
    ue.velocity = 1.0;
    ue.heading = 0.0;  // straight at the +x wall
    const auto next = step_mobility(ue, p, 1.0, geom, rng);
    CHECK(next.position.x() < geom.ue_x_max);
    CHECK(next.position.x() > geom.ue_x_min);
    CHECK(next.position.x() == doctest::Approx(geom.ue_x_max - 1.0));
  }

  SUBCASE("seeded steps are bit-reproducible") {
    MobilityParams p;
    UeState ue;
    ue.position = {1.0, 2.0, geom.ue_height};
    Rng a = make_rng(5, 5), b = make_rng(5, 5);
    auto ua = ue, ub = ue;
    for (int i = 0; i < 100; ++i) {
      ua = step_mobility(ua, p, 1.0, geom, a);
      ub = step_mobility(ub, p, 1.0, geom, b);
    }
    CHECK(ua.position.x() == ub.position.x());
    CHECK(ua.position.y() == ub.position.y());
    CHECK(ua.velocity == ub.velocity);
    CHECK(ua.heading == ub.heading);
  }
}

namespace {

ChannelSet random_channels(Eigen::Index n, Eigen::Index m, Eigen::Index k, Rng& rng) {
  ChannelSet ch;
  ch.h_bu = complex_normal_matrix(n, k, rng);
  ch.h_bo = complex_normal_matrix(n, m, rng);
  ch.h_ou = complex_normal_matrix(m, k, rng);
  return ch;
}

}  // namespace

TEST_CASE("aggregate channel composition") {
  Rng rng = make_rng(42, 4);

  SUBCASE("surface off returns the direct channel") {
    auto ch = random_channels(4, 6, 3, rng);
    const std::vector<Side> sides{Side::reflected, Side::refracted, Side::reflected};
    const auto h = aggregate_channel(ch, CVector::Zero(6), CVector::Zero(6), sides);
    CHECK((h - ch.h_bu).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("scalar expansion for M = 1") {
    auto ch = random_channels(1, 1, 1, rng);
    const Complex phi = std::polar(0.4, 1.3);
    const auto h = aggregate_channel(ch, CVector::Constant(1, phi), CVector::Zero(1),
                                     {Side::reflected});
    const Complex expected = ch.h_bu(0, 0) + ch.h_bo(0, 0) * phi * ch.h_ou(0, 0);
    CHECK(std::abs(h(0, 0) - expected) < 1e-14);
  }

  SUBCASE("refract coefficients are ignored when all UEs reflect") {
    auto ch = random_channels(4, 6, 3, rng);
    const std::vector<Side> sides(3, Side::reflected);
    CVector phi_r(6), junk1(6), junk2(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      phi_r(i) = complex_normal(rng);
      junk1(i) = complex_normal(rng);
      junk2(i) = complex_normal(rng);
    }
    const auto a = aggregate_channel(ch, phi_r, junk1, sides);
    const auto b = aggregate_channel(ch, phi_r, junk2, sides);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("linear in each coefficient matrix") {
    auto ch = random_channels(4, 6, 3, rng);
    const std::vector<Side> sides{Side::reflected, Side::refracted, Side::reflected};
    CVector r1(6), r2(6), t1(6), t2(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      r1(i) = complex_normal(rng);
      r2(i) = complex_normal(rng);
      t1(i) = complex_normal(rng);
      t2(i) = complex_normal(rng);
    }
    const auto sum = aggregate_channel(ch, r1 + r2, t1 + t2, sides);
    const auto parts = aggregate_channel(ch, r1, t1, sides) +
                       aggregate_channel(ch, r2, t2, sides) - ch.h_bu;
    CHECK((sum - parts).cwiseAbs().maxCoeff() / sum.cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("missing side label rejected") {
    auto ch = random_channels(4, 6, 3, rng);
    CHECK_THROWS_AS(aggregate_channel(ch, CVector::Zero(6), CVector::Zero(6), {Side::reflected}),
                    std::invalid_argument);
  }
}

TEST_CASE("channel simulator evolves positions and redraws fading") {
  ChannelSimConfig cfg;
  cfg.n_antennas = 4;
  cfg.n_ues = 3;
  cfg.n_elements = 8;
  cfg.n_reflected = 2;
  ChannelSimulator sim(cfg);
  Rng rng = make_rng(9, 0);
  sim.initialize(rng);
  CHECK(sim.channels().h_bu.rows() == 4);
  CHECK(sim.channels().h_ou.rows() == 8);
  CHECK(sim.sides()[0] == Side::reflected);
  CHECK(sim.sides()[2] == Side::refracted);

  const auto before = sim.channels().h_bu;
  const auto pos_before = sim.ues()[0].position;
  sim.advance(rng);
  CHECK((sim.channels().h_bu - before).cwiseAbs().maxCoeff() > 1e-6);
  CHECK((sim.ues()[0].position - pos_before).norm() > 0.0);
  for (const auto& ue : sim.ues()) {
    CHECK(ue.position.x() >= cfg.geom.ue_x_min);
    CHECK(ue.position.x() <= cfg.geom.ue_x_max);
    CHECK(ue.position.z() == doctest::Approx(cfg.geom.ue_height));
  }
}
