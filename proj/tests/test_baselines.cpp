// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "iosim/baselines.hpp"

using namespace iosim;
using namespace iosim::baselines;

namespace {

ios::ActionCatalog default_catalog() {
  Rng rng = make_rng(70, 0);
  return ios::build_action_catalog(32, ios::CatalogSpec{}, ios::Protocol::es, rng);
}

}  // namespace

TEST_CASE("random policy is uniform and seeded") {
  const auto cat = default_catalog();
  Rng rng = make_rng(70, 1);
  std::array<int, 25> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto a = random_policy(cat, rng);
    ++counts[static_cast<std::size_t>(a.increment_index * 5 + a.amplitude_index)];
  }
  for (int c : counts) CHECK(std::abs(c / static_cast<double>(draws) - 0.04) < 0.002);

  Rng a = make_rng(3, 3), b = make_rng(3, 3);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_policy(cat, a), y = random_policy(cat, b);
    CHECK(x.increment_index == y.increment_index);
    CHECK(x.amplitude_index == y.amplitude_index);
  }
}

TEST_CASE("posterior sampling selection") {
  Rng rng = make_rng(71, 0);

  SUBCASE("a dominant arm is selected almost surely") {
    std::vector<BanditArm> arms(25);
    for (auto& arm : arms) {
      arm.posterior_mean = 0.0;
      arm.posterior_precision = 0.01;
    }
    arms[7].posterior_mean = 100.0;
    arms[7].posterior_precision = 1e9;
    int hits = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) hits += ts_select(arms, rng) == 7;
    CHECK(hits / static_cast<double>(draws) > 0.999);
  }

  SUBCASE("identical posteriors select uniformly") {
    std::vector<BanditArm> arms(25);
    for (auto& arm : arms) {
      arm.posterior_mean = 1.0;
      arm.posterior_precision = 4.0;
    }
    std::array<int, 25> counts{};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[ts_select(arms, rng)];
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(draws) - 0.04) < 0.002);
  }

  SUBCASE("seeded selection is deterministic") {
    std::vector<BanditArm> arms(5);
    Rng a = make_rng(4, 4), b = make_rng(4, 4);
    for (int i = 0; i < 50; ++i) CHECK(ts_select(arms, a) == ts_select(arms, b));
  }
}

TEST_CASE("conjugate posterior updates") {
  SUBCASE("repeated pulls concentrate on the true mean") {
    Rng rng = make_rng(72, 0);
    std::vector<BanditArm> arms(3);
    const double mu = 3.0;
    for (int i = 0; i < 10000; ++i) ts_update(arms, 1, normal_sample(rng, mu, 1.0), 1.0);
    CHECK(arms[1].posterior_mean == doctest::Approx(mu).epsilon(0.02));
    CHECK(arms[1].pull_count == 10000);
    // untouched arms keep their prior
    CHECK(arms[0].posterior_mean == 0.0);
    CHECK(arms[0].posterior_precision == 0.01);
    CHECK(arms[2].pull_count == 0);
  }

  SUBCASE("precision strictly increases") {
    std::vector<BanditArm> arms(2);
    double last = arms[0].posterior_precision;
    for (int i = 0; i < 10; ++i) {
      ts_update(arms, 0, 1.0, 0.5);
      CHECK(arms[0].posterior_precision > last);
      last = arms[0].posterior_precision;
    }
  }

  SUBCASE("unknown arm rejected") {
    std::vector<BanditArm> arms(2);
    CHECK_THROWS_AS(ts_update(arms, 5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ts_update(arms, 0, 1.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("thompson sampling locks onto the best arm of a stationary bandit") {
  const auto cat = default_catalog();
  ThompsonBandit bandit(cat, ThompsonConfig{});
  Rng rng = make_rng(73, 0);

  // 25 Gaussian arms, best-arm gap 0.5, unit observation noise
  std::array<double, 25> means{};
  for (std::size_t i = 0; i < 25; ++i) means[i] = 1.0;
  const std::size_t best = 11;
  means[best] = 1.5;

  const int pulls = 100000;
  int best_picks_tail = 0;
  const int tail_start = pulls - pulls / 10;
  for (int i = 0; i < pulls; ++i) {
    const auto action = bandit.select(rng);
    const auto arm = static_cast<std::size_t>(action.increment_index * 5 + action.amplitude_index);
    if (i >= tail_start && arm == best) ++best_picks_tail;
    bandit.observe(normal_sample(rng, means[arm], 1.0));
  }
  CHECK(best_picks_tail / static_cast<double>(pulls / 10) >= 0.95);
}

TEST_CASE("the initial sweep sets the observation precision") {
  const auto cat = default_catalog();
  ThompsonBandit bandit(cat, ThompsonConfig{});
  Rng rng = make_rng(74, 0);
  CHECK_FALSE(bandit.sweep_done());
  for (int i = 0; i < 25; ++i) {
    const auto a = bandit.select(rng);
    // round robin covers every arm exactly once
    CHECK(a.increment_index == i / 5);
    CHECK(a.amplitude_index == i % 5);
    bandit.observe(static_cast<double>(i % 7));
  }
  CHECK(bandit.sweep_done());
  CHECK(bandit.observation_precision() > 0.0);
  for (const auto& arm : bandit.arms()) CHECK(arm.pull_count == 1);
}
