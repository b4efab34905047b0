// SPDX-License-Identifier: Apache-2.0
#include "iosim/report.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "iosim/metrics.hpp"

namespace iosim::harness {

namespace {

struct Curve {
  std::vector<double> avg;
};

Curve read_metrics(const std::filesystem::path& path, RunSummary& summary) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  Curve curve;
  std::int64_t conv = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) throw std::runtime_error("malformed metrics row in " + path.string());
    curve.avg.push_back(std::stod(cells[2]));
    if (conv < 0 && cells[4] == "1") conv = std::stoll(cells[0]);
  }
  summary.slots = static_cast<std::int64_t>(curve.avg.size());
  summary.convergence_slot = conv;
  if (!curve.avg.empty()) summary.tail_mean_rate = tail_mean(curve.avg);
  return curve;
}

double mean_timing(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return 0.0;
  std::string line;
  std::getline(in, line);
  double acc = 0.0;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    acc += std::stod(line.substr(comma + 1));
    ++count;
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace

RunSummary summarize_run_dir(const std::filesystem::path& dir) {
  RunSummary s;
  s.dir = dir.string();
  std::ifstream in(dir / "config.snapshot.json");
  if (!in) throw std::runtime_error("missing config snapshot in " + dir.string());
  const auto j = nlohmann::json::parse(in);
  s.mode = j.at("run").at("mode").get<std::string>();
  s.protocol = j.at("protocol").get<std::string>();
  s.lambda = j.at("scenario").value("rician_lambda", 0.0);
  s.omega = j.at("reward").value("penalty", 0.0);
  s.seed = j.at("run").value("seed", std::uint64_t{0});
  read_metrics(dir / "metrics.csv", s);
  s.mean_decision_us = mean_timing(dir / "timing.csv");
  return s;
}

void write_report(const std::vector<std::filesystem::path>& run_dirs,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream cmp(out_dir / "comparison.csv");
  if (!cmp) throw std::runtime_error("cannot write comparison.csv");
  cmp << "dir,mode,protocol,lambda,omega,seed,slots,tail_mean_rate,convergence_slot,"
         "mean_decision_us\n";

  std::map<std::string, std::vector<std::vector<double>>> per_mode;
  for (const auto& dir : run_dirs) {
    RunSummary s = summarize_run_dir(dir);
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6g,%.6g,%llu,%lld,%.12g,%lld,%.3f\n",
                  s.dir.c_str(), s.mode.c_str(), s.protocol.c_str(), s.lambda, s.omega,
                  static_cast<unsigned long long>(s.seed), static_cast<long long>(s.slots),
                  s.tail_mean_rate, static_cast<long long>(s.convergence_slot),
                  s.mean_decision_us);
    cmp << buf;

    RunSummary tmp;
    const Curve curve = read_metrics(dir / "metrics.csv", tmp);
    const auto name = s.mode + "_seed" + std::to_string(s.seed) + ".dat";
    std::ofstream dat(out_dir / name);
    dat << "# slot short_term_avg\n";
    for (std::size_t i = 0; i < curve.avg.size(); ++i)
      dat << i << " " << curve.avg[i] << "\n";
    per_mode[s.mode].push_back(curve.avg);
  }

  // Seed-averaged curve per mode, truncated to the shortest run.
  for (const auto& [mode, curves] : per_mode) {
    std::size_t len = curves.front().size();
    for (const auto& c : curves) len = std::min(len, c.size());
    std::ofstream dat(out_dir / ("curve_" + mode + ".dat"));
    dat << "# slot mean_short_term_avg\n";
    for (std::size_t i = 0; i < len; ++i) {
      double acc = 0.0;
      for (const auto& c : curves) acc += c[i];
      dat << i << " " << acc / static_cast<double>(curves.size()) << "\n";
    }
  }
}

}  // namespace iosim::harness
