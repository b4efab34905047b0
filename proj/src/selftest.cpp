// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/SVD>

#include "iosim/cli.hpp"
#include "iosim/runner.hpp"

namespace iosim::harness {

namespace {

int g_failures = 0;

void check(bool ok, const char* what) {
  std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what);
  if (!ok) ++g_failures;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int run_selftest() {
  g_failures = 0;

  {
    Rng rng = make_rng(7, 1);
    const auto w = channel::steering_vector(0.37, 32);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      worst = std::max(worst, std::abs(std::abs(w(i)) - 1.0));
    check(worst < 1e-12, "steering vector entries unit modulus");

    const auto [psi_o, psi_b] = channel::directional_cosines(channel::Geometry{});
    check(std::abs(psi_o + 0.6804138174) < 1e-9 && std::abs(psi_b - 0.2721655270) < 1e-9,
          "directional cosines of the default geometry");

    const auto los = channel::los_matrix(0.3, -0.2, 8, 5);
    Eigen::JacobiSVD<CMatrix> svd(los);
    check(svd.singularValues()(1) < 1e-9 * svd.singularValues()(0), "LoS matrix is rank one");
    (void)rng;
  }

  {
    const double betas[5] = {0.995, 0.953, 0.707, 0.302, 0.100};
    const double ratios[5] = {100, 10, 1, 0.1, 0.01};
    bool ok = true;
    for (int i = 0; i < 5; ++i)
      ok = ok && std::abs(ios::es_amplitude_from_ratio(ratios[i]).first - betas[i]) < 5e-4;
    check(ok, "ES amplitudes match the published list");
  }

  {
    Rng rng = make_rng(7, 2);
    const CMatrix h = complex_normal_matrix(5, 5, rng);
    auto pilots = transceiver::PilotConfig::identity(5, 0.0);
    const auto y = transceiver::uplink_pilot(h, pilots, rng);
    const auto h_hat = transceiver::mmse_estimate(y, pilots);
    check((h_hat - h).cwiseAbs().maxCoeff() < 1e-10, "noiseless MMSE recovers the channel");

    const auto v = transceiver::zf_precoder(h);
    const CMatrix g = v * h;
    double leak = 0.0;
    for (Eigen::Index l = 0; l < 5; ++l)
      for (Eigen::Index k = 0; k < 5; ++k)
        if (l != k) leak = std::max(leak, std::abs(g(l, k)));
    check(leak < 1e-9, "zero-forcing nulls inter-user leakage under perfect CSI");
  }

  {
    env::RewardConfig rc;
    check(env::reward_from_sum_rate(12.0, rc) == 12.0 &&
              std::abs(env::reward_from_sum_rate(9.9, rc) - (-10.1)) < 1e-12,
          "thresholded reward arithmetic");
  }

  {
    agent::ReplayBuffer buf(2);
    buf.store({{}, {0, 0}, 1.0, {}});
    buf.store({{}, {0, 0}, 2.0, {}});
    buf.store({{}, {0, 0}, 3.0, {}});
    check(buf.size() == 2 && buf.at(0).reward == 2.0 && buf.at(1).reward == 3.0,
          "replay buffer is FIFO at capacity");
  }

  {
    // two identical seeded micro-runs must produce byte-identical metrics
    RunConfig cfg = default_config();
    cfg.mode = Mode::random;
    cfg.horizon = 50;
    cfg.metrics_window = 10;
    cfg.convergence_hold = 10;
    cfg.seed = 11;
    const auto base = std::filesystem::temp_directory_path() / "iosim_selftest";
    std::filesystem::remove_all(base);
    run_one(cfg, base / "a");
    run_one(cfg, base / "b");
    check(slurp(base / "a" / "metrics.csv") == slurp(base / "b" / "metrics.csv") &&
              !slurp(base / "a" / "metrics.csv").empty(),
          "seeded runs are byte-identical");
    std::filesystem::remove_all(base);
  }

  std::printf("selftest: %s (%d failure%s)\n", g_failures == 0 ? "OK" : "FAILED", g_failures,
              g_failures == 1 ? "" : "s");
  return g_failures;
}

}  // namespace iosim::harness
