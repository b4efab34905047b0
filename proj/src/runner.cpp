// SPDX-License-Identifier: Apache-2.0
#include "iosim/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "iosim/baselines.hpp"

namespace iosim::harness {

namespace {

ProgressFn g_progress;

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point from) {
  return std::chrono::duration<double, std::micro>(Clock::now() - from).count();
}

struct SlotLog {
  std::vector<double> rates;
  std::vector<double> rewards;
  std::vector<double> decision_us;
  std::vector<env::JointAction> actions;

  void append(const env::JointAction& a, const env::StepResult& sr, double us) {
    rates.push_back(sr.link.sum_rate);
    rewards.push_back(sr.reward);
    decision_us.push_back(us);
    actions.push_back(a);
  }
};

void report_progress(std::int64_t slot, std::int64_t horizon, const std::vector<double>& rates) {
  if (!g_progress || slot == 0 || slot % 2000 != 0) return;
  const std::size_t window = std::min<std::size_t>(rates.size(), 500);
  double mean = 0.0;
  for (std::size_t i = rates.size() - window; i < rates.size(); ++i) mean += rates[i];
  g_progress(slot, horizon, window ? mean / static_cast<double>(window) : 0.0);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "slot,sum_rate,short_term_avg,reward,converged\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.12g,%.12g,%.12g,%d\n",
                  static_cast<long long>(r.slot), r.sum_rate, r.short_term_avg, r.reward,
                  r.converged ? 1 : 0);
    out << buf;
  }
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<double>& decision_us) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "slot,decision_us\n";
  char buf[64];
  for (std::size_t i = 0; i < decision_us.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.3f\n", i, decision_us[i]);
    out << buf;
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const SlotLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "slot,a1,a2,sum_rate,reward\n";
  char buf[96];
  for (std::size_t i = 0; i < log.actions.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.12g,%.12g\n", i, log.actions[i].increment_index,
                  log.actions[i].amplitude_index, log.rates[i], log.rewards[i]);
    out << buf;
  }
}

void write_posteriors_csv(const std::filesystem::path& path,
                          const baselines::ThompsonBandit& bandit) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "arm,a1,a2,posterior_mean,posterior_precision,pulls\n";
  char buf[128];
  const auto& arms = bandit.arms();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.12g,%.12g,%lld\n", i,
                  arms[i].action.increment_index, arms[i].action.amplitude_index,
                  arms[i].posterior_mean, arms[i].posterior_precision,
                  static_cast<long long>(arms[i].pull_count));
    out << buf;
  }
}

RunResult finalize(const RunConfig& cfg, const std::filesystem::path& dir, const SlotLog& log,
                   const ios::ActionCatalog& catalog, std::int64_t env_steps,
                   std::int64_t virtual_steps) {
  RunResult res;
  res.dir = dir;
  res.rows = build_metrics(log.rates, log.rewards, cfg.metrics_window, cfg.convergence_rel_tol,
                           cfg.convergence_hold);
  std::vector<double> avg(res.rows.size());
  for (std::size_t i = 0; i < res.rows.size(); ++i) avg[i] = res.rows[i].short_term_avg;
  res.convergence_slot = -1;
  for (std::size_t i = 0; i < res.rows.size(); ++i)
    if (res.rows[i].converged) {
      res.convergence_slot = static_cast<std::int64_t>(i);
      break;
    }
  res.tail_mean_rate = tail_mean(avg);
  double us = 0.0;
  for (double d : log.decision_us) us += d;
  res.mean_decision_us = log.decision_us.empty() ? 0.0 : us / static_cast<double>(log.decision_us.size());
  res.env_steps = env_steps;
  res.virtual_steps = virtual_steps;

  std::filesystem::create_directories(dir);
  write_metrics_csv(dir / "metrics.csv", res.rows);
  write_timing_csv(dir / "timing.csv", log.decision_us);
  write_config_snapshot(cfg, catalog, dir / "config.snapshot.json");
  if (cfg.log_trajectory) write_trajectory_csv(dir / "trajectory.csv", log);
  return res;
}

twin::TwinRecord make_record(const env::Environment& e, const env::JointAction& a,
                             const env::StepResult& sr, bool after_reset) {
  twin::TwinRecord rec;
  rec.h_hat = sr.obs.h_hat;
  rec.increment_index = a.increment_index;
  rec.increment = e.catalog().phase_increments[static_cast<std::size_t>(a.increment_index)];
  rec.beta_r = e.catalog().amplitude_options[static_cast<std::size_t>(a.amplitude_index)].beta_r;
  rec.rates = sr.link.rate;
  rec.phases_after = e.phases().phases;
  rec.after_reset = after_reset;
  return rec;
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

void set_progress_callback(ProgressFn fn) { g_progress = std::move(fn); }

RunResult run_baseline(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.mode == Mode::deepios_twin)
    throw std::invalid_argument("run_baseline does not handle deepios_twin");

  Rng catalog_rng = make_rng(cfg.seed, 0xca7);
  const auto catalog = ios::build_action_catalog(cfg.env.chan.n_elements, cfg.env.catalog_spec,
                                                 cfg.env.protocol, catalog_rng);
  env::Environment environment(cfg.env, catalog, cfg.seed);
  env::Observation obs = environment.reset();
  SlotLog log;

  const auto n = cfg.env.chan.n_antennas;
  const auto k = cfg.env.chan.n_ues;
  const auto m = cfg.env.chan.n_elements;

  std::optional<agent::QAgent> learner;
  std::optional<baselines::ThompsonBandit> bandit;
  Rng policy_rng = make_rng(cfg.seed, 0x90c);

  if (cfg.mode == Mode::deepios || cfg.mode == Mode::deepios_no_branch) {
    agent::AgentConfig acfg = cfg.agent;
    acfg.branching = (cfg.mode == Mode::deepios);
    learner.emplace(acfg, n, k, m, catalog.n1(), catalog.n2(), cfg.seed + 0xa9);
  } else if (cfg.mode == Mode::mab) {
    bandit.emplace(catalog, baselines::ThompsonConfig{});
  }

  for (std::int64_t t = 0; t < cfg.horizon; ++t) {
    env::JointAction a;
    const auto t0 = Clock::now();
    switch (cfg.mode) {
      case Mode::random: a = baselines::random_policy(catalog, policy_rng); break;
      case Mode::mab: a = bandit->select(policy_rng); break;
      default: a = learner->act(obs); break;
    }
    const double us = elapsed_us(t0);

    const auto sr = environment.step(a);
    if (bandit) bandit->observe(sr.reward);
    if (learner) {
      learner->store({obs, a, sr.reward, sr.obs});
      learner->train_step();
    }
    obs = sr.obs;
    log.append(a, sr, us);
    report_progress(t, cfg.horizon, log.rates);
  }

  std::filesystem::create_directories(out_dir);
  auto res = finalize(cfg, out_dir, log, catalog, environment.step_count(), 0);
  if (learner) save_text(out_dir / "agent.ckpt", learner->checkpoint_json());
  if (bandit && cfg.log_posteriors) write_posteriors_csv(out_dir / "posteriors.csv", *bandit);
  return res;
}

RunResult run_algorithm1(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.mode != Mode::deepios_twin)
    throw std::invalid_argument("run_algorithm1 requires mode deepios_twin");

  Rng catalog_rng = make_rng(cfg.seed, 0xca7);
  const auto catalog = ios::build_action_catalog(cfg.env.chan.n_elements, cfg.env.catalog_spec,
                                                 cfg.env.protocol, catalog_rng);
  const auto n = cfg.env.chan.n_antennas;
  const auto k = cfg.env.chan.n_ues;
  const auto m = cfg.env.chan.n_elements;

  agent::QAgent physical(cfg.agent, n, k, m, catalog.n1(), catalog.n2(), cfg.seed + 0xa9);
  agent::QAgent digital(cfg.agent, n, k, m, catalog.n1(), catalog.n2(), cfg.seed + 0xd1);
  twin::Twin twin_model(cfg.twin, catalog, n, k, cfg.agent.hidden_width, cfg.agent.seq,
                        cfg.env.reward, cfg.seed + 0x77);

  // Data requisition bootstrap: drive a live environment at the bootstrap
  // Rician factor with the (untrained) physical policy until the dataset is
  // full, then fit the twin.
  {
    env::EnvConfig boot = cfg.env;
    boot.chan.rician_factor = cfg.twin.bootstrap_lambda;
    env::Environment benv(boot, catalog, cfg.seed + 0xb0);
    env::Observation obs = benv.reset();
    for (int i = 0; i < cfg.twin.dataset_capacity; ++i) {
      const auto a = physical.act(obs);
      const auto sr = benv.step(a);
      twin_model.collect(make_record(benv, a, sr, i == 0));
      obs = sr.obs;
    }
    twin_model.train_initial();
  }

  // Main loop on the real scenario; physical exploration restarts with the
  // slot clock.
  physical.reset_decision_count();
  env::Environment environment(cfg.env, catalog, cfg.seed);
  env::Observation obs = environment.reset();
  SlotLog log;

  for (std::int64_t t = 0; t < cfg.horizon; ++t) {
    twin_model.calibrate(t);  // no-op off the T1 schedule

    // Digital space: gamma_inner interactions against the twin, training on
    // each step, starting from the latest physical observation.
    env::Observation vstate = obs;
    for (int tau = 0; tau < cfg.gamma_inner; ++tau) {
      const auto a = digital.act(vstate);
      auto [vnext, vreward] = twin_model.virtual_step(vstate, a);
      digital.store({vstate, a, vreward, vnext});
      digital.train_step();
      vstate = std::move(vnext);
    }

    physical.deliver_from(digital);

    const auto t0 = Clock::now();
    const auto a = physical.act(obs);
    const double us = elapsed_us(t0);
    const auto sr = environment.step(a);
    twin_model.collect(make_record(environment, a, sr, t == 0));
    obs = sr.obs;
    log.append(a, sr, us);
    report_progress(t, cfg.horizon, log.rates);
  }

  std::filesystem::create_directories(out_dir);
  auto res = finalize(cfg, out_dir, log, catalog, environment.step_count(),
                      twin_model.virtual_step_count());
  save_text(out_dir / "agent.ckpt", physical.checkpoint_json());
  save_text(out_dir / "twin.ckpt", twin_model.checkpoint_json());
  return res;
}

RunResult run_one(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.mode == Mode::deepios_twin) return run_algorithm1(cfg, out_dir);
  return run_baseline(cfg, out_dir);
}

}  // namespace iosim::harness
