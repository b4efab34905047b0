// SPDX-License-Identifier: Apache-2.0
#include "iosim/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "iosim/report.hpp"
#include "iosim/runner.hpp"

namespace iosim::harness {

namespace {

struct RunFlags {
  std::string config_path;
  std::string mode;
  std::string protocol;
  std::string out = "runs/run";
  std::int64_t slots = -1;
  double lambda = -1.0;
  double omega = -1.0;
  int gamma_inner = -1;
  std::uint64_t seed = 0;
  bool have_seed = false;
  bool trajectory = false;
  bool posteriors = false;
  bool quiet = false;
};

RunConfig assemble_config(const RunFlags& f) {
  RunConfig cfg = f.config_path.empty() ? default_config() : load_config_file(f.config_path);
  if (!f.mode.empty()) cfg.mode = mode_from_string(f.mode);
  if (!f.protocol.empty()) {
    if (f.protocol == "ES" || f.protocol == "es")
      cfg.env.protocol = ios::Protocol::es;
    else if (f.protocol == "MS" || f.protocol == "ms")
      cfg.env.protocol = ios::Protocol::ms;
    else
      throw CLI::ValidationError("--protocol must be ES or MS");
  }
  if (f.slots > 0) cfg.horizon = f.slots;
  if (f.lambda >= 0.0) cfg.env.chan.rician_factor = f.lambda;
  if (f.omega >= 0.0) cfg.env.reward.penalty = f.omega;
  if (f.gamma_inner >= 0) cfg.gamma_inner = f.gamma_inner;
  if (f.have_seed) cfg.seed = f.seed;
  if (f.trajectory) cfg.log_trajectory = true;
  if (f.posteriors) cfg.log_posteriors = true;
  cfg.validate();
  return cfg;
}

void hook_progress(bool quiet) {
  if (quiet) {
    set_progress_callback(nullptr);
    return;
  }
  set_progress_callback([](std::int64_t slot, std::int64_t horizon, double recent) {
    std::fprintf(stderr, "  slot %lld/%lld  recent sum rate %.3f\n",
                 static_cast<long long>(slot), static_cast<long long>(horizon), recent);
  });
}

int do_run(const RunFlags& flags) {
  const RunConfig cfg = assemble_config(flags);
  hook_progress(flags.quiet);
  const auto res = run_one(cfg, flags.out);
  std::printf("run complete: %s\n", res.dir.string().c_str());
  std::printf("  slots %zu, tail mean %.4f bits/s/Hz, convergence slot %lld, decision %.1f us\n",
              res.rows.size(), res.tail_mean_rate,
              static_cast<long long>(res.convergence_slot), res.mean_decision_us);
  return 0;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// Preset action sets used by the sweep grid: A1_1/A1_2/A1_3 select the
// increment index range, A2_1/A2_2/A2_3 the amplitude list size.
void apply_action_preset(RunConfig& cfg, const std::string& name) {
  auto indices = [](int l) {
    std::vector<int> v;
    for (int i = -l; i <= l; ++i) v.push_back(i);
    return v;
  };
  if (name == "A1_1")
    cfg.env.catalog_spec.increment_indices = {-3, -1, 0, 1, 3};
  else if (name == "A1_2")
    cfg.env.catalog_spec.increment_indices = indices(9);
  else if (name == "A1_3")
    cfg.env.catalog_spec.increment_indices = indices(15);
  else if (name == "A2_1") {
    cfg.env.catalog_spec.es_ratios = {100, 10, 1, 0.1, 0.01};
    cfg.env.catalog_spec.es_betas.clear();
    cfg.env.catalog_spec.ms_group_count = 5;
  } else if (name == "A2_2") {
    cfg.env.catalog_spec.es_betas = {0.998, 0.995, 0.990, 0.953, 0.913,
                                     0.707, 0.577, 0.302, 0.218, 0.100};
    cfg.env.catalog_spec.ms_group_count = 10;
  } else if (name == "A2_3") {
    cfg.env.catalog_spec.es_betas = {1.000, 0.999, 0.998, 0.995, 0.990, 0.953, 0.913, 0.806,
                                     0.707, 0.577, 0.302, 0.218, 0.100, 0.070, 0.032};
    cfg.env.catalog_spec.ms_group_count = 15;
  } else {
    throw CLI::ValidationError("unknown action preset: " + name);
  }
}

int do_sweep(const RunFlags& flags, const std::string& param, const std::string& values,
             const std::string& modes_csv, int seeds) {
  const auto values_list = split_list(values);
  if (values_list.empty()) throw CLI::ValidationError("--values must be non-empty");
  std::vector<std::string> modes = split_list(modes_csv);
  if (modes.empty()) modes = {"random", "mab", "deepios"};

  hook_progress(flags.quiet);
  const std::filesystem::path root = flags.out;
  for (const auto& mode : modes) {
    for (const auto& value : values_list) {
      for (int s = 0; s < seeds; ++s) {
        RunFlags f = flags;
        f.mode = mode;
        RunConfig cfg = assemble_config(f);
        cfg.seed = flags.have_seed ? flags.seed + static_cast<std::uint64_t>(s)
                                   : static_cast<std::uint64_t>(s + 1);
        if (cfg.gamma_inner == 1000 && flags.gamma_inner < 0)
          cfg.gamma_inner = 200;  // desk-scale sweep default
        std::string tag;
        if (param == "lambda") {
          cfg.env.chan.rician_factor = std::stod(value);
          tag = "lam" + value;
        } else if (param == "omega") {
          cfg.env.reward.penalty = std::stod(value);
          tag = "om" + value;
        } else if (param == "gamma") {
          cfg.gamma_inner = std::stoi(value);
          tag = "gam" + value;
        } else if (param == "actions") {
          apply_action_preset(cfg, value);
          tag = value;
        } else {
          throw CLI::ValidationError("--param must be lambda, omega, gamma or actions");
        }
        cfg.validate();
        const auto dir = root / (mode + "_" + tag + "_s" + std::to_string(cfg.seed));
        std::fprintf(stderr, "sweep cell: %s\n", dir.string().c_str());
        run_one(cfg, dir);
      }
    }
  }
  std::printf("sweep complete: %s\n", root.string().c_str());
  return 0;
}

int do_report(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<std::filesystem::path> paths;
  for (const auto& d : dirs) {
    const std::filesystem::path p(d);
    if (std::filesystem::exists(p / "metrics.csv")) {
      paths.push_back(p);
      continue;
    }
    // treat as a root of run directories
    if (std::filesystem::is_directory(p))
      for (const auto& entry : std::filesystem::directory_iterator(p))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "metrics.csv"))
          paths.push_back(entry.path());
  }
  if (paths.empty()) {
    std::fprintf(stderr, "report: no run directories found\n");
    return 1;
  }
  std::sort(paths.begin(), paths.end());
  write_report(paths, out);
  std::printf("report written to %s (%zu runs)\n", out.c_str(), paths.size());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"IOS-assisted MU-MIMO downlink simulator and learning framework"};
  app.require_subcommand(1);

  RunFlags flags;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", flags.config_path, "JSON config file");
    cmd->add_option("--mode", flags.mode,
                    "random | mab | deepios | deepios_no_branch | deepios_twin");
    cmd->add_option("--protocol", flags.protocol, "ES or MS");
    cmd->add_option("--slots", flags.slots, "horizon in slots");
    cmd->add_option("--lambda", flags.lambda, "Rician factor");
    cmd->add_option("--omega", flags.omega, "reward penalty factor");
    cmd->add_option("--gamma-inner", flags.gamma_inner, "digital interactions per slot");
    cmd->add_option("--seed", flags.seed, "master seed")->each([&](const std::string&) {
      flags.have_seed = true;
    });
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_flag("--trajectory", flags.trajectory, "write trajectory.csv");
    cmd->add_flag("--dump-posteriors", flags.posteriors, "write bandit posteriors.csv");
    cmd->add_flag("-q,--quiet", flags.quiet, "suppress progress output");
  };

  auto* run_cmd = app.add_subcommand("run", "execute one configured run");
  add_common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "grid of runs over one parameter");
  add_common(sweep_cmd);
  std::string sweep_param = "lambda";
  std::string sweep_values = "5,10,15";
  std::string sweep_modes;
  int sweep_seeds = 3;
  sweep_cmd->add_option("--param", sweep_param, "lambda | omega | gamma | actions");
  sweep_cmd->add_option("--values", sweep_values, "comma-separated cell values");
  sweep_cmd->add_option("--modes", sweep_modes, "comma-separated modes (default random,mab,deepios)");
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per cell");

  auto* report_cmd = app.add_subcommand("report", "aggregate run directories");
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  report_cmd->add_option("dirs", report_dirs, "run directories (or a root of them)")->required();
  report_cmd->add_option("--out", report_out, "report output directory");

  auto* selftest_cmd = app.add_subcommand("selftest", "run the invariant battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) return do_run(flags);
    if (sweep_cmd->parsed())
      return do_sweep(flags, sweep_param, sweep_values, sweep_modes, sweep_seeds);
    if (report_cmd->parsed()) return do_report(report_dirs, report_out);
    if (selftest_cmd->parsed()) {
      const int failures = run_selftest();
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace iosim::harness
