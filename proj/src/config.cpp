// SPDX-License-Identifier: Apache-2.0
#include "iosim/config.hpp"

#include <fstream>

#include "json.hpp"

namespace iosim::harness {

using nlohmann::json;

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::random: return "random";
    case Mode::mab: return "mab";
    case Mode::deepios: return "deepios";
    case Mode::deepios_no_branch: return "deepios_no_branch";
    case Mode::deepios_twin: return "deepios_twin";
  }
  throw std::logic_error("unreachable");
}

Mode mode_from_string(const std::string& name) {
  if (name == "random") return Mode::random;
  if (name == "mab") return Mode::mab;
  if (name == "deepios") return Mode::deepios;
  if (name == "deepios_no_branch") return Mode::deepios_no_branch;
  if (name == "deepios_twin") return Mode::deepios_twin;
  throw std::invalid_argument("unknown mode: " + name);
}

void RunConfig::validate() const {
  env.validate();
  agent.validate();
  twin.validate();
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (mode == Mode::deepios_twin && gamma_inner < 1)
    throw std::invalid_argument("twin mode needs gamma_inner >= 1");
  if (metrics_window < 1) throw std::invalid_argument("metrics window must be >= 1");
  if (convergence_hold < 1) throw std::invalid_argument("convergence hold must be >= 1");
}

RunConfig default_config() {
  RunConfig cfg;  // struct defaults already carry the published values
  cfg.agent.branching = true;
  return cfg;
}

namespace {

constexpr double kDegPerRad = 180.0 / M_PI;

json scenario_to_json(const env::EnvConfig& e) {
  const auto& c = e.chan;
  json j;
  j["n_antennas"] = c.n_antennas;
  j["n_ues"] = c.n_ues;
  j["n_elements"] = c.n_elements;
  j["n_reflected_ues"] = c.n_reflected;
  j["bs_position"] = {c.geom.bs_position.x(), c.geom.bs_position.y(), c.geom.bs_position.z()};
  j["ios_position"] = {c.geom.ios_position.x(), c.geom.ios_position.y(), c.geom.ios_position.z()};
  j["ue_area"] = {c.geom.ue_x_min, c.geom.ue_x_max, c.geom.ue_y_min, c.geom.ue_y_max};
  j["ue_height"] = c.geom.ue_height;
  j["rician_lambda"] = c.rician_factor;
  j["slot_duration_s"] = c.slot_duration;
  j["redraw_positions_each_slot"] = c.redraw_positions_each_slot;
  j["sigma_p2"] = e.sigma_p2;
  j["sigma_k2"] = e.sigma_k2;
  j["zf_condition_cap"] = e.zf_condition_cap;
  j["mobility"] = {{"memory", c.mobility.memory},
                   {"mean_velocity", c.mobility.mean_velocity},
                   {"velocity_std", c.mobility.velocity_std},
                   {"mean_heading_deg", c.mobility.mean_heading * kDegPerRad},
                   {"heading_std_deg", c.mobility.heading_std * kDegPerRad}};
  return j;
}

void scenario_from_json(const json& j, env::EnvConfig& e) {
  auto& c = e.chan;
  c.n_antennas = j.value("n_antennas", c.n_antennas);
  c.n_ues = j.value("n_ues", c.n_ues);
  c.n_elements = j.value("n_elements", c.n_elements);
  c.n_reflected = j.value("n_reflected_ues", c.n_reflected);
  if (j.contains("bs_position")) {
    const auto v = j["bs_position"].get<std::vector<double>>();
    c.geom.bs_position = {v.at(0), v.at(1), v.at(2)};
  }
  if (j.contains("ios_position")) {
    const auto v = j["ios_position"].get<std::vector<double>>();
    c.geom.ios_position = {v.at(0), v.at(1), v.at(2)};
  }
  if (j.contains("ue_area")) {
    const auto v = j["ue_area"].get<std::vector<double>>();
    c.geom.ue_x_min = v.at(0);
    c.geom.ue_x_max = v.at(1);
    c.geom.ue_y_min = v.at(2);
    c.geom.ue_y_max = v.at(3);
  }
  c.geom.ue_height = j.value("ue_height", c.geom.ue_height);
  c.rician_factor = j.value("rician_lambda", c.rician_factor);
  c.slot_duration = j.value("slot_duration_s", c.slot_duration);
  c.redraw_positions_each_slot =
      j.value("redraw_positions_each_slot", c.redraw_positions_each_slot);
  e.sigma_p2 = j.value("sigma_p2", e.sigma_p2);
  e.sigma_k2 = j.value("sigma_k2", e.sigma_k2);
  e.zf_condition_cap = j.value("zf_condition_cap", e.zf_condition_cap);
  if (j.contains("mobility")) {
    const auto& m = j["mobility"];
    c.mobility.memory = m.value("memory", c.mobility.memory);
    c.mobility.mean_velocity = m.value("mean_velocity", c.mobility.mean_velocity);
    c.mobility.velocity_std = m.value("velocity_std", c.mobility.velocity_std);
    if (m.contains("mean_heading_deg"))
      c.mobility.mean_heading = m["mean_heading_deg"].get<double>() / kDegPerRad;
    if (m.contains("heading_std_deg"))
      c.mobility.heading_std = m["heading_std_deg"].get<double>() / kDegPerRad;
  }
}

}  // namespace

std::string config_to_json_text(const RunConfig& cfg) {
  json j;
  j["scenario"] = scenario_to_json(cfg.env);
  j["protocol"] = cfg.env.protocol == ios::Protocol::es ? "ES" : "MS";
  j["catalog"] = {{"increment_indices", cfg.env.catalog_spec.increment_indices},
                  {"es_ratios", cfg.env.catalog_spec.es_ratios},
                  {"es_betas", cfg.env.catalog_spec.es_betas},
                  {"ms_group_count", cfg.env.catalog_spec.ms_group_count}};
  j["reward"] = {{"threshold", cfg.env.reward.threshold}, {"penalty", cfg.env.reward.penalty}};
  j["agent"] = {{"discount", cfg.agent.discount},
                {"learning_rate", cfg.agent.learning_rate},
                {"buffer_capacity", cfg.agent.buffer_capacity},
                {"batch_size", cfg.agent.batch_size},
                {"target_period", cfg.agent.target_period},
                {"epsilon_floor", cfg.agent.epsilon_floor},
                {"epsilon_decay", cfg.agent.epsilon_decay},
                {"hidden_width", cfg.agent.hidden_width},
                {"loss_mode",
                 cfg.agent.loss_mode == agent::LossMode::summed_td ? "summed_td" : "per_branch"},
                {"sequence_mode",
                 cfg.agent.seq == neural::SeqMode::structural ? "structural" : "single_step"},
                {"observation_mode",
                 cfg.agent.obs == neural::ObsMode::compact ? "compact" : "full"},
                {"momentum", cfg.agent.momentum}};
  j["twin"] = {{"dataset_capacity", cfg.twin.dataset_capacity},
               {"calibration_batch", cfg.twin.calibration_batch},
               {"calibration_period", cfg.twin.calibration_period},
               {"lr_state", cfg.twin.lr_state},
               {"lr_reward", cfg.twin.lr_reward},
               {"bootstrap_lambda", cfg.twin.bootstrap_lambda},
               {"initial_epochs_cap", cfg.twin.initial_epochs_cap},
               {"initial_patience", cfg.twin.initial_patience},
               {"initial_holdout", cfg.twin.initial_holdout},
               {"initial_batch", cfg.twin.initial_batch},
               {"paper_literal_state", cfg.twin.paper_literal_state}};
  j["run"] = {{"mode", to_string(cfg.mode)},
              {"horizon", cfg.horizon},
              {"gamma_inner", cfg.gamma_inner},
              {"seed", cfg.seed},
              {"metrics_window", cfg.metrics_window},
              {"convergence_rel_tol", cfg.convergence_rel_tol},
              {"convergence_hold", cfg.convergence_hold},
              {"log_trajectory", cfg.log_trajectory},
              {"log_posteriors", cfg.log_posteriors}};
  return j.dump(2);
}

RunConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  RunConfig cfg = default_config();
  if (j.contains("scenario")) scenario_from_json(j["scenario"], cfg.env);
  if (j.contains("protocol")) {
    const auto p = j["protocol"].get<std::string>();
    if (p == "ES" || p == "es")
      cfg.env.protocol = ios::Protocol::es;
    else if (p == "MS" || p == "ms")
      cfg.env.protocol = ios::Protocol::ms;
    else
      throw std::invalid_argument("unknown protocol: " + p);
  }
  if (j.contains("catalog")) {
    const auto& c = j["catalog"];
    if (c.contains("increment_indices"))
      cfg.env.catalog_spec.increment_indices = c["increment_indices"].get<std::vector<int>>();
    if (c.contains("es_ratios"))
      cfg.env.catalog_spec.es_ratios = c["es_ratios"].get<std::vector<double>>();
    if (c.contains("es_betas"))
      cfg.env.catalog_spec.es_betas = c["es_betas"].get<std::vector<double>>();
    cfg.env.catalog_spec.ms_group_count =
        c.value("ms_group_count", cfg.env.catalog_spec.ms_group_count);
  }
  if (j.contains("reward")) {
    cfg.env.reward.threshold = j["reward"].value("threshold", cfg.env.reward.threshold);
    cfg.env.reward.penalty = j["reward"].value("penalty", cfg.env.reward.penalty);
  }
  if (j.contains("agent")) {
    const auto& a = j["agent"];
    cfg.agent.discount = a.value("discount", cfg.agent.discount);
    cfg.agent.learning_rate = a.value("learning_rate", cfg.agent.learning_rate);
    cfg.agent.buffer_capacity = a.value("buffer_capacity", cfg.agent.buffer_capacity);
    cfg.agent.batch_size = a.value("batch_size", cfg.agent.batch_size);
    cfg.agent.target_period = a.value("target_period", cfg.agent.target_period);
    cfg.agent.epsilon_floor = a.value("epsilon_floor", cfg.agent.epsilon_floor);
    cfg.agent.epsilon_decay = a.value("epsilon_decay", cfg.agent.epsilon_decay);
    cfg.agent.hidden_width = a.value("hidden_width", cfg.agent.hidden_width);
    cfg.agent.momentum = a.value("momentum", cfg.agent.momentum);
    if (a.contains("loss_mode"))
      cfg.agent.loss_mode = a["loss_mode"].get<std::string>() == "per_branch"
                                ? agent::LossMode::per_branch
                                : agent::LossMode::summed_td;
    if (a.contains("sequence_mode"))
      cfg.agent.seq = a["sequence_mode"].get<std::string>() == "single_step"
                          ? neural::SeqMode::single_step
                          : neural::SeqMode::structural;
    if (a.contains("observation_mode"))
      cfg.agent.obs = a["observation_mode"].get<std::string>() == "full"
                          ? neural::ObsMode::full
                          : neural::ObsMode::compact;
  }
  if (j.contains("twin")) {
    const auto& t = j["twin"];
    cfg.twin.dataset_capacity = t.value("dataset_capacity", cfg.twin.dataset_capacity);
    cfg.twin.calibration_batch = t.value("calibration_batch", cfg.twin.calibration_batch);
    cfg.twin.calibration_period = t.value("calibration_period", cfg.twin.calibration_period);
    cfg.twin.lr_state = t.value("lr_state", cfg.twin.lr_state);
    cfg.twin.lr_reward = t.value("lr_reward", cfg.twin.lr_reward);
    cfg.twin.bootstrap_lambda = t.value("bootstrap_lambda", cfg.twin.bootstrap_lambda);
    cfg.twin.initial_epochs_cap = t.value("initial_epochs_cap", cfg.twin.initial_epochs_cap);
    cfg.twin.initial_patience = t.value("initial_patience", cfg.twin.initial_patience);
    cfg.twin.initial_holdout = t.value("initial_holdout", cfg.twin.initial_holdout);
    cfg.twin.initial_batch = t.value("initial_batch", cfg.twin.initial_batch);
    cfg.twin.paper_literal_state = t.value("paper_literal_state", cfg.twin.paper_literal_state);
  }
  if (j.contains("run")) {
    const auto& r = j["run"];
    if (r.contains("mode")) cfg.mode = mode_from_string(r["mode"].get<std::string>());
    cfg.horizon = r.value("horizon", cfg.horizon);
    cfg.gamma_inner = r.value("gamma_inner", cfg.gamma_inner);
    cfg.seed = r.value("seed", cfg.seed);
    cfg.metrics_window = r.value("metrics_window", cfg.metrics_window);
    cfg.convergence_rel_tol = r.value("convergence_rel_tol", cfg.convergence_rel_tol);
    cfg.convergence_hold = r.value("convergence_hold", cfg.convergence_hold);
    cfg.log_trajectory = r.value("log_trajectory", cfg.log_trajectory);
    cfg.log_posteriors = r.value("log_posteriors", cfg.log_posteriors);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void write_config_snapshot(const RunConfig& cfg, const ios::ActionCatalog& catalog,
                           const std::filesystem::path& path) {
  json j = json::parse(config_to_json_text(cfg));
  json cat;
  cat["protocol"] = catalog.protocol == ios::Protocol::es ? "ES" : "MS";
  cat["n_elements"] = catalog.m;
  cat["increment_indices"] = catalog.increment_indices;
  for (const auto& amp : catalog.amplitude_options) {
    json entry;
    entry["beta_r"] = std::vector<double>(amp.beta_r.data(), amp.beta_r.data() + amp.beta_r.size());
    entry["beta_t"] = std::vector<double>(amp.beta_t.data(), amp.beta_t.data() + amp.beta_t.size());
    cat["amplitude_options"].push_back(std::move(entry));
  }
  j["resolved_catalog"] = std::move(cat);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace iosim::harness
