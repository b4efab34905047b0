// SPDX-License-Identifier: Apache-2.0
#include "iosim/twin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace iosim::twin {

void TwinConfig::validate() const {
  if (dataset_capacity < 2) throw std::invalid_argument("dataset capacity must be >= 2");
  if (calibration_batch < 2 || calibration_batch > dataset_capacity)
    throw std::invalid_argument("calibration batch must be in [2, dataset capacity]");
  if (calibration_period < 1) throw std::invalid_argument("calibration period must be >= 1");
  if (!(lr_state > 0.0) || !(lr_reward > 0.0))
    throw std::invalid_argument("twin learning rates must be > 0");
  if (initial_holdout <= 0.0 || initial_holdout >= 1.0)
    throw std::invalid_argument("holdout fraction must be in (0,1)");
}

void TwinDataset::collect(TwinRecord record) {
  records_.push_back(std::move(record));
  if (records_.size() > capacity_) records_.pop_front();
}

void TwinDataset::export_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const Eigen::Index m = records_.empty() ? 0 : records_.front().beta_r.size();
  const Eigen::Index n = records_.empty() ? 0 : records_.front().h_hat.rows();
  const Eigen::Index k = records_.empty() ? 0 : records_.front().h_hat.cols();
  out << "# iosim-twin-dataset-v1 n=" << n << " k=" << k << " m=" << m << "\n";
  out << "inc_index,after_reset";
  for (Eigen::Index i = 0; i < m; ++i) out << ",inc_re_" << i << ",inc_im_" << i;
  for (Eigen::Index i = 0; i < m; ++i) out << ",phase_re_" << i << ",phase_im_" << i;
  for (Eigen::Index i = 0; i < m; ++i) out << ",beta_r_" << i;
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < n; ++r) out << ",h_re_" << r << "_" << c << ",h_im_" << r << "_" << c;
  for (Eigen::Index i = 0; i < k; ++i) out << ",rate_" << i;
  out << "\n";

  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const auto& rec : records_) {
    out << rec.increment_index << "," << (rec.after_reset ? 1 : 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      put(rec.increment(i).real());
      put(rec.increment(i).imag());
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      put(rec.phases_after(i).real());
      put(rec.phases_after(i).imag());
    }
    for (Eigen::Index i = 0; i < m; ++i) put(rec.beta_r(i));
    for (Eigen::Index c = 0; c < k; ++c)
      for (Eigen::Index r = 0; r < n; ++r) {
        put(rec.h_hat(r, c).real());
        put(rec.h_hat(r, c).imag());
      }
    for (Eigen::Index i = 0; i < k; ++i) put(rec.rates(i));
    out << "\n";
  }
}

TwinDataset TwinDataset::import_csv(const std::filesystem::path& path, std::size_t capacity) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# iosim-twin-dataset-v1", 0) != 0)
    throw std::invalid_argument("unknown twin dataset format");
  Eigen::Index n = 0, k = 0, m = 0;
  if (std::sscanf(line.c_str(), "# iosim-twin-dataset-v1 n=%ld k=%ld m=%ld", &n, &k, &m) != 3)
    throw std::invalid_argument("malformed twin dataset header");
  std::getline(in, line);  // column names

  TwinDataset ds(capacity);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    auto next = [&]() -> double {
      if (!std::getline(ss, cell, ',')) throw std::invalid_argument("short twin dataset row");
      return std::stod(cell);
    };
    TwinRecord rec;
    rec.increment_index = static_cast<int>(next());
    rec.after_reset = next() != 0.0;
    rec.increment.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double re = next(), im = next();
      rec.increment(i) = Complex(re, im);
    }
    rec.phases_after.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double re = next(), im = next();
      rec.phases_after(i) = Complex(re, im);
    }
    rec.beta_r.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) rec.beta_r(i) = next();
    rec.h_hat.resize(n, k);
    for (Eigen::Index c = 0; c < k; ++c)
      for (Eigen::Index r = 0; r < n; ++r) {
        const double re = next(), im = next();
        rec.h_hat(r, c) = Complex(re, im);
      }
    rec.rates.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) rec.rates(i) = next();
    ds.collect(std::move(rec));
  }
  return ds;
}

// --------------------------------------------------------------- StateNet

StateNet::StateNet(Eigen::Index n, Eigen::Index k, Eigen::Index m, int n1, Eigen::Index hidden,
                   neural::SeqMode seq, bool full_state) {
  const auto [steps, width] =
      encode::component_shape(0, n, k, m, seq, neural::ObsMode::compact);
  (void)steps;
  context_width_ = 4 * m + n1 + m;
  output_width_ = 2 * n * k + (full_state ? 4 * m : 0);
  gru_ = neural::Gru(layout_, "state.gru", width, hidden);
  fc_ = neural::Fc(layout_, "state.fc", hidden + context_width_, hidden,
                   neural::Activation::relu);
  out_ = neural::Fc(layout_, "state.out", hidden, output_width_, neural::Activation::linear);
}

Matrix StateNet::forward(const Vector& theta, const std::vector<Matrix>& channel_steps,
                         const Matrix& context, Cache* cache) const {
  const Matrix h = gru_.forward(layout_, theta, channel_steps, cache ? &cache->gru : nullptr);
  Matrix joined(h.rows() + context.rows(), h.cols());
  joined.topRows(h.rows()) = h;
  joined.bottomRows(context.rows()) = context;
  const Matrix hid = fc_.forward(layout_, theta, joined, cache ? &cache->fc : nullptr);
  return out_.forward(layout_, theta, hid, cache ? &cache->out : nullptr);
}

void StateNet::backward(const Vector& theta, const Cache& cache, const Matrix& dout,
                        Vector& grad) const {
  Matrix dhid;
  out_.backward(layout_, theta, cache.out, dout, grad, &dhid);
  Matrix djoined;
  fc_.backward(layout_, theta, cache.fc, dhid, grad, &djoined);
  gru_.backward(layout_, theta, cache.gru, djoined.topRows(gru_.hidden()), grad);
}

Vector StateNet::init_params(Rng& rng) const {
  Vector theta = Vector::Zero(layout_.total());
  gru_.init_params(layout_, theta, rng);
  fc_.init_params(layout_, theta, rng);
  out_.init_params(layout_, theta, rng);
  return theta;
}

// -------------------------------------------------------------- RewardNet

RewardNet::RewardNet(Eigen::Index input_width, Eigen::Index hidden) : input_width_(input_width) {
  fc_in_ = neural::Fc(layout_, "reward.fc1", input_width, hidden, neural::Activation::relu);
  block_ = neural::ResidualBlock(layout_, "reward.block", hidden);
  out_ = neural::Fc(layout_, "reward.out", hidden, 1, neural::Activation::linear);
}

Matrix RewardNet::forward(const Vector& theta, const Matrix& x, Cache* cache) const {
  const Matrix h = fc_in_.forward(layout_, theta, x, cache ? &cache->fc_in : nullptr);
  const Matrix b = block_.forward(layout_, theta, h, cache ? &cache->block : nullptr);
  return out_.forward(layout_, theta, b, cache ? &cache->out : nullptr);
}

void RewardNet::backward(const Vector& theta, const Cache& cache, const Matrix& dout,
                         Vector& grad) const {
  Matrix db;
  out_.backward(layout_, theta, cache.out, dout, grad, &db);
  Matrix dh;
  block_.backward(layout_, theta, cache.block, db, grad, &dh);
  fc_in_.backward(layout_, theta, cache.fc_in, dh, grad, nullptr);
}

Vector RewardNet::init_params(Rng& rng) const {
  Vector theta = Vector::Zero(layout_.total());
  fc_in_.init_params(layout_, theta, rng);
  block_.init_params(layout_, theta, rng);
  out_.init_params(layout_, theta, rng);
  return theta;
}

// ------------------------------------------------------------------- Twin

namespace {

Vector beta_t_from_r(const Vector& beta_r, ios::Protocol protocol) {
  if (protocol == ios::Protocol::es)
    return (1.0 - beta_r.array().square()).max(0.0).sqrt().matrix();
  return (1.0 - beta_r.array()).matrix();
}

CMatrix unflatten_channel(const Vector& flat, Eigen::Index n, Eigen::Index k) {
  CMatrix h(n, k);
  Eigen::Index at = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < n; ++r)
      h(r, c) = Complex(flat(at + r), flat(at + n + r));
    at += 2 * n;
  }
  return h;
}

}  // namespace

Twin::Twin(const TwinConfig& cfg, const ios::ActionCatalog& catalog, Eigen::Index n,
           Eigen::Index k, Eigen::Index hidden, neural::SeqMode seq,
           const env::RewardConfig& reward, std::uint64_t seed)
    : cfg_(cfg),
      catalog_(&catalog),
      reward_cfg_(reward),
      n_(n),
      k_(k),
      m_(catalog.m),
      seq_(seq),
      dataset_(static_cast<std::size_t>(cfg.dataset_capacity)),
      state_net_(n, k, catalog.m, catalog.n1(), hidden, seq, cfg.paper_literal_state),
      reward_net_(2 * n * k + 4 * catalog.m + catalog.n1() + catalog.m, hidden),
      rng_(make_rng(seed, 0x7717)) {
  cfg_.validate();
  Rng init_rng = make_rng(seed, 0x7718);
  theta_state_ = state_net_.init_params(init_rng);
  theta_reward_ = reward_net_.init_params(init_rng);
}

env::Observation Twin::observation_at(std::size_t record_index) const {
  const TwinRecord& rec = dataset_.at(record_index);
  const Vector beta_t = beta_t_from_r(rec.beta_r, catalog_->protocol);
  env::Observation obs;
  obs.h_hat = rec.h_hat;
  obs.phi_r = rec.beta_r.cast<Complex>().cwiseProduct(rec.phases_after);
  obs.phi_t = beta_t.cast<Complex>().cwiseProduct(rec.phases_after);
  return obs;
}

void Twin::append_pair(const env::Observation& state, const env::JointAction& action,
                       const TwinRecord& next, PairBatch& batch, Eigen::Index col) const {
  const auto in = encode::encode_observation(state, seq_, neural::ObsMode::compact);
  for (std::size_t t = 0; t < in.comp[0].size(); ++t)
    batch.channel_steps[t].col(col) = in.comp[0][t].col(0);

  Vector action_enc = Vector::Zero(catalog_->n1() + m_);
  action_enc(action.increment_index) = 1.0;
  action_enc.segment(catalog_->n1(), m_) = next.beta_r;

  const Vector coeff = encode::flatten_coefficients(state);
  batch.context.block(0, col, coeff.size(), 1) = coeff;
  batch.context.block(coeff.size(), col, action_enc.size(), 1) = action_enc;

  const Vector channel_flat = encode::flatten_channel(state.h_hat);
  batch.reward_input.block(0, col, channel_flat.size(), 1) = channel_flat;
  batch.reward_input.block(channel_flat.size(), col, coeff.size(), 1) = coeff;
  batch.reward_input.block(channel_flat.size() + coeff.size(), col, action_enc.size(), 1) =
      action_enc;

  Vector target = Vector::Zero(state_net_.output_width());
  target.segment(0, 2 * n_ * k_) = encode::flatten_channel(next.h_hat);
  if (cfg_.paper_literal_state) {
    const Vector beta_t = beta_t_from_r(next.beta_r, catalog_->protocol);
    env::Observation next_obs;
    next_obs.h_hat = next.h_hat;
    next_obs.phi_r = next.beta_r.cast<Complex>().cwiseProduct(next.phases_after);
    next_obs.phi_t = beta_t.cast<Complex>().cwiseProduct(next.phases_after);
    target.segment(2 * n_ * k_, 4 * m_) = encode::flatten_coefficients(next_obs);
  }
  batch.state_target.col(col) = target;
  batch.reward_target(0, col) = env::reward_from_sum_rate(next.rates.sum(), reward_cfg_);
}

Twin::PairBatch Twin::make_pairs(std::size_t first_record, std::size_t last_record) const {
  if (last_record >= dataset_.size() || first_record > last_record)
    throw std::invalid_argument("record range out of bounds");

  std::vector<std::size_t> next_indices;
  for (std::size_t i = first_record + 1; i <= last_record; ++i)
    if (!dataset_.at(i).after_reset) next_indices.push_back(i);

  PairBatch batch;
  batch.count = static_cast<Eigen::Index>(next_indices.size());
  const auto [steps, width] =
      encode::component_shape(0, n_, k_, m_, seq_, neural::ObsMode::compact);
  batch.channel_steps.assign(static_cast<std::size_t>(steps), Matrix::Zero(width, batch.count));
  batch.context.resize(state_net_.context_width(), batch.count);
  batch.reward_input.resize(reward_net_.input_width(), batch.count);
  batch.state_target.resize(state_net_.output_width(), batch.count);
  batch.reward_target.resize(1, batch.count);

  for (Eigen::Index col = 0; col < batch.count; ++col) {
    const std::size_t i = next_indices[static_cast<std::size_t>(col)];
    const TwinRecord& next = dataset_.at(i);
    const env::Observation state = observation_at(i - 1);
    const env::JointAction action{next.increment_index, 0};
    append_pair(state, action, next, batch, col);
  }
  return batch;
}

namespace {

Matrix select_cols(const Matrix& src, const std::vector<int>& cols) {
  Matrix out(src.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = src.col(cols[j]);
  return out;
}

}  // namespace

std::pair<double, double> Twin::train_batch(const PairBatch& batch, const std::vector<int>& cols,
                                            bool update_state, bool update_reward) {
  double state_loss = 0.0, reward_loss = 0.0;
  if (update_state) {
    std::vector<Matrix> steps(batch.channel_steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) steps[t] = select_cols(batch.channel_steps[t], cols);
    const Matrix context = select_cols(batch.context, cols);
    const Matrix target = select_cols(batch.state_target, cols);
    StateNet::Cache cache;
    const Matrix pred = state_net_.forward(theta_state_, steps, context, &cache);
    const auto mse = neural::mse_loss(pred, target);
    state_loss = mse.loss;
    Vector grad = Vector::Zero(theta_state_.size());
    state_net_.backward(theta_state_, cache, mse.grad_pred, grad);
    neural::sgd_step(theta_state_, grad, cfg_.lr_state);
  }
  if (update_reward) {
    const Matrix input = select_cols(batch.reward_input, cols);
    const Matrix target = select_cols(batch.reward_target, cols);
    RewardNet::Cache cache;
    const Matrix pred = reward_net_.forward(theta_reward_, input, &cache);
    const auto mse = neural::mse_loss(pred, target);
    reward_loss = mse.loss;
    Vector grad = Vector::Zero(theta_reward_.size());
    reward_net_.backward(theta_reward_, cache, mse.grad_pred, grad);
    neural::sgd_step(theta_reward_, grad, cfg_.lr_reward);
  }
  return {state_loss, reward_loss};
}

TrainReport Twin::train_initial() {
  if (dataset_.size() < dataset_.capacity())
    throw state_error("twin dataset must be full before initial training");
  const PairBatch batch = make_pairs(0, dataset_.size() - 1);
  if (batch.count < 4) throw state_error("too few transitions for initial training");

  std::vector<int> order(static_cast<std::size_t>(batch.count));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  const auto holdout_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg_.initial_holdout * static_cast<double>(batch.count)));
  std::vector<int> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_count));
  std::vector<int> train(order.begin() + static_cast<std::ptrdiff_t>(holdout_count), order.end());

  // Holdout inputs/targets, fixed for the whole run.
  std::vector<Matrix> ho_steps(batch.channel_steps.size());
  for (std::size_t t = 0; t < ho_steps.size(); ++t)
    ho_steps[t] = select_cols(batch.channel_steps[t], holdout);
  const Matrix ho_context = select_cols(batch.context, holdout);
  const Matrix ho_rin = select_cols(batch.reward_input, holdout);
  const Matrix ho_starget = select_cols(batch.state_target, holdout);
  const Matrix ho_rtarget = select_cols(batch.reward_target, holdout);

  auto holdout_mse = [&](bool state) {
    if (state) {
      const Matrix pred = state_net_.forward(theta_state_, ho_steps, ho_context, nullptr);
      return neural::mse_loss(pred, ho_starget).loss;
    }
    const Matrix pred = reward_net_.forward(theta_reward_, ho_rin, nullptr);
    return neural::mse_loss(pred, ho_rtarget).loss;
  };

  // Mean-predictor reference: train-set mean scored on the holdout.
  const Matrix tr_starget = select_cols(batch.state_target, train);
  const Matrix tr_rtarget = select_cols(batch.reward_target, train);
  const Vector smean = tr_starget.rowwise().mean();
  const Vector rmean = tr_rtarget.rowwise().mean();
  TrainReport report;
  report.state_target_variance =
      (ho_starget.colwise() - smean).squaredNorm() / static_cast<double>(ho_starget.cols());
  report.reward_target_variance =
      (ho_rtarget.colwise() - rmean).squaredNorm() / static_cast<double>(ho_rtarget.cols());

  double best_state = holdout_mse(true), best_reward = holdout_mse(false);
  Vector best_theta_state = theta_state_, best_theta_reward = theta_reward_;
  int state_stall = 0, reward_stall = 0;
  bool state_active = true, reward_active = true;

  const int bsz = std::max(1, cfg_.initial_batch);
  for (int epoch = 0; epoch < cfg_.initial_epochs_cap && (state_active || reward_active);
       ++epoch) {
    std::shuffle(train.begin(), train.end(), rng_);
    for (std::size_t at = 0; at < train.size(); at += static_cast<std::size_t>(bsz)) {
      const std::vector<int> cols(train.begin() + static_cast<std::ptrdiff_t>(at),
                                  train.begin() + static_cast<std::ptrdiff_t>(std::min(
                                                      at + static_cast<std::size_t>(bsz),
                                                      train.size())));
      train_batch(batch, cols, state_active, reward_active);
    }
    report.epochs = epoch + 1;
    if (state_active) {
      const double mse = holdout_mse(true);
      if (mse < best_state) {
        best_state = mse;
        best_theta_state = theta_state_;
        state_stall = 0;
      } else if (++state_stall >= cfg_.initial_patience) {
        state_active = false;
      }
    }
    if (reward_active) {
      const double mse = holdout_mse(false);
      if (mse < best_reward) {
        best_reward = mse;
        best_theta_reward = theta_reward_;
        reward_stall = 0;
      } else if (++reward_stall >= cfg_.initial_patience) {
        reward_active = false;
      }
    }
  }
  theta_state_ = best_theta_state;
  theta_reward_ = best_theta_reward;
  report.state_holdout_mse = best_state;
  report.reward_holdout_mse = best_reward;
  trained_ = true;
  return report;
}

CalibrationReport Twin::calibrate(std::int64_t slot) {
  CalibrationReport report;
  if (slot <= 0 || slot % cfg_.calibration_period != 0) return report;  // off schedule: no-op
  const std::size_t count =
      std::min<std::size_t>(dataset_.size(), static_cast<std::size_t>(cfg_.calibration_batch));
  if (count < 2) return report;
  const PairBatch batch = make_pairs(dataset_.size() - count, dataset_.size() - 1);
  if (batch.count < 1) return report;
  std::vector<int> cols(static_cast<std::size_t>(batch.count));
  std::iota(cols.begin(), cols.end(), 0);
  std::tie(report.state_loss, report.reward_loss) = train_batch(batch, cols, true, true);
  report.applied = true;
  return report;
}

env::Observation Twin::predict_next_state(const env::Observation& state,
                                          const env::JointAction& action) const {
  const auto in = encode::encode_observation(state, seq_, neural::ObsMode::compact);
  Matrix context(state_net_.context_width(), 1);
  const Vector coeff = encode::flatten_coefficients(state);
  context.block(0, 0, coeff.size(), 1) = coeff;
  context.block(coeff.size(), 0, catalog_->n1() + m_, 1) =
      encode::encode_action(action, *catalog_);

  const Matrix out = state_net_.forward(theta_state_, in.comp[0], context, nullptr);

  env::Observation next;
  next.h_hat = unflatten_channel(out.col(0).segment(0, 2 * n_ * k_), n_, k_);
  if (cfg_.paper_literal_state) {
    const Vector tail = out.col(0).segment(2 * n_ * k_, 4 * m_);
    next.phi_r.resize(m_);
    next.phi_t.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      next.phi_r(i) = Complex(tail(i), tail(m_ + i));
      next.phi_t(i) = Complex(tail(2 * m_ + i), tail(3 * m_ + i));
    }
  } else {
    // The coefficient part of the next state is an exact function of
    // (state, action); compose it analytically instead of regressing it.
    ios::PhaseState phases{ios::phases_from_coefficients(state.phi_r, state.phi_t)};
    phases = ios::apply_increment(
        phases, catalog_->phase_increments[static_cast<std::size_t>(action.increment_index)]);
    const auto pair = ios::coefficient_matrices(
        phases, catalog_->amplitude_options[static_cast<std::size_t>(action.amplitude_index)]);
    next.phi_r = pair.phi_r;
    next.phi_t = pair.phi_t;
  }
  return next;
}

double Twin::predict_reward(const env::Observation& state, const env::JointAction& action) const {
  Matrix input(reward_net_.input_width(), 1);
  const Vector channel_flat = encode::flatten_channel(state.h_hat);
  const Vector coeff = encode::flatten_coefficients(state);
  input.block(0, 0, channel_flat.size(), 1) = channel_flat;
  input.block(channel_flat.size(), 0, coeff.size(), 1) = coeff;
  input.block(channel_flat.size() + coeff.size(), 0, catalog_->n1() + m_, 1) =
      encode::encode_action(action, *catalog_);
  return reward_net_.forward(theta_reward_, input, nullptr)(0, 0);
}

std::pair<env::Observation, double> Twin::virtual_step(const env::Observation& state,
                                                       const env::JointAction& action) {
  if (!trained_) throw state_error("twin must be trained before virtual stepping");
  ++virtual_steps_;
  return {predict_next_state(state, action), predict_reward(state, action)};
}

std::string Twin::checkpoint_json() const {
  nlohmann::json j;
  j["format"] = "iosim-twin-v1";
  j["trained"] = trained_;
  j["state_net"] = nlohmann::json::parse(neural::params_to_json(state_net_.layout(), theta_state_));
  j["reward_net"] =
      nlohmann::json::parse(neural::params_to_json(reward_net_.layout(), theta_reward_));
  return j.dump();
}

void Twin::load_checkpoint_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "iosim-twin-v1")
    throw std::invalid_argument("unknown twin checkpoint format");
  theta_state_ = neural::params_from_json(state_net_.layout(), j.at("state_net").dump());
  theta_reward_ = neural::params_from_json(reward_net_.layout(), j.at("reward_net").dump());
  trained_ = j.value("trained", false);
}

}  // namespace iosim::twin
