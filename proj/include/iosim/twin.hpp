// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <utility>

#include "iosim/agent.hpp"
#include "iosim/encode.hpp"
#include "iosim/env.hpp"

namespace iosim::twin {

/// One data-requisition row: the slot's channel estimate, the applied phase
/// increment and reflect amplitudes, and the per-UE rates. `phases_after` is
/// the running phase product after this slot (derivable from the increment
/// history; carried so coefficient reconstruction survives buffer eviction
/// and environment restarts), `after_reset` marks the first record of a
/// fresh environment.
struct TwinRecord {
  CMatrix h_hat;
  int increment_index = 0;
  CVector increment;
  Vector beta_r;
  Vector rates;
  CVector phases_after;
  bool after_reset = false;
};

class TwinDataset {
 public:
  explicit TwinDataset(std::size_t capacity) : capacity_(capacity) {}

  void collect(TwinRecord record);
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  const TwinRecord& at(std::size_t i) const { return records_[i]; }

  void export_csv(const std::filesystem::path& path) const;
  static TwinDataset import_csv(const std::filesystem::path& path, std::size_t capacity);

 private:
  std::size_t capacity_;
  std::deque<TwinRecord> records_;
};

struct TwinConfig {
  int dataset_capacity = 1000;  // D
  int calibration_batch = 24;   // N_D
  int calibration_period = 10;  // T1
  double lr_state = 0.001;      // alpha_p
  double lr_reward = 0.001;     // alpha_r
  double bootstrap_lambda = 9.0;
  int initial_epochs_cap = 500;
  int initial_patience = 10;
  double initial_holdout = 0.2;
  int initial_batch = 24;
  bool paper_literal_state = false;  // regress the whole next state, not just the channel

  void validate() const;
};

/// Next-state predictor: one GRU over the channel-estimate sequence, one FC
/// layer taking [gru features; coefficient context; action encoding], and a
/// linear output over the predicted channel tensor (plus the coefficient
/// tensors in paper-literal mode).
class StateNet {
 public:
  StateNet(Eigen::Index n, Eigen::Index k, Eigen::Index m, int n1, Eigen::Index hidden,
           neural::SeqMode seq, bool full_state);

  struct Cache {
    neural::GruCache gru;
    neural::FcCache fc;
    neural::FcCache out;
  };

  Matrix forward(const Vector& theta, const std::vector<Matrix>& channel_steps,
                 const Matrix& context, Cache* cache) const;
  void backward(const Vector& theta, const Cache& cache, const Matrix& dout, Vector& grad) const;
  Vector init_params(Rng& rng) const;
  const neural::ParamLayout& layout() const { return layout_; }
  Eigen::Index context_width() const { return context_width_; }
  Eigen::Index output_width() const { return output_width_; }

 private:
  neural::ParamLayout layout_;
  neural::Gru gru_;
  neural::Fc fc_;
  neural::Fc out_;
  Eigen::Index context_width_ = 0;
  Eigen::Index output_width_ = 0;
};

/// Reward predictor: one FC layer into a two-layer residual block and a
/// linear scalar output (three FC layers total around an identity shortcut).
class RewardNet {
 public:
  RewardNet(Eigen::Index input_width, Eigen::Index hidden);

  struct Cache {
    neural::FcCache fc_in;
    neural::ResidualCache block;
    neural::FcCache out;
  };

  Matrix forward(const Vector& theta, const Matrix& x, Cache* cache) const;
  void backward(const Vector& theta, const Cache& cache, const Matrix& dout, Vector& grad) const;
  Vector init_params(Rng& rng) const;
  const neural::ParamLayout& layout() const { return layout_; }
  Eigen::Index input_width() const { return input_width_; }

 private:
  neural::ParamLayout layout_;
  neural::Fc fc_in_;
  neural::ResidualBlock block_;
  neural::Fc out_;
  Eigen::Index input_width_ = 0;
};

struct TrainReport {
  int epochs = 0;
  double state_holdout_mse = 0.0;
  double reward_holdout_mse = 0.0;
  double state_target_variance = 0.0;
  double reward_target_variance = 0.0;
};

struct CalibrationReport {
  bool applied = false;
  double state_loss = 0.0;
  double reward_loss = 0.0;
};

/// The learned environment model: collects transition records, fits the
/// next-state and reward predictors, recalibrates on fresh data, and serves
/// virtual steps to the digital agent.
class Twin {
 public:
  Twin(const TwinConfig& cfg, const ios::ActionCatalog& catalog, Eigen::Index n, Eigen::Index k,
       Eigen::Index hidden, neural::SeqMode seq, const env::RewardConfig& reward,
       std::uint64_t seed);

  void collect(TwinRecord record) { dataset_.collect(std::move(record)); }
  const TwinDataset& dataset() const { return dataset_; }
  TwinDataset& dataset() { return dataset_; }

  TrainReport train_initial();
  CalibrationReport calibrate(std::int64_t slot);

  env::Observation predict_next_state(const env::Observation& state,
                                      const env::JointAction& action) const;
  double predict_reward(const env::Observation& state, const env::JointAction& action) const;
  std::pair<env::Observation, double> virtual_step(const env::Observation& state,
                                                   const env::JointAction& action);

  bool trained() const { return trained_; }
  std::int64_t virtual_step_count() const { return virtual_steps_; }

  const StateNet& state_net() const { return state_net_; }
  const RewardNet& reward_net() const { return reward_net_; }
  const Vector& state_params() const { return theta_state_; }
  const Vector& reward_params() const { return theta_reward_; }

  std::string checkpoint_json() const;
  void load_checkpoint_json(const std::string& text);

  /// Training pairs (inputs/targets) assembled from the newest `count`
  /// records; exposed so tests can verify target construction.
  struct PairBatch {
    std::vector<Matrix> channel_steps;  // state-net sequence, batched columns
    Matrix context;                     // coefficient context ++ action encoding
    Matrix reward_input;                // flattened state ++ action encoding
    Matrix state_target;
    Matrix reward_target;
    Eigen::Index count = 0;
  };
  PairBatch make_pairs(std::size_t first_record, std::size_t last_record) const;

 private:
  env::Observation observation_at(std::size_t record_index) const;
  void append_pair(const env::Observation& state, const env::JointAction& action,
                   const TwinRecord& next, PairBatch& batch, Eigen::Index col) const;
  std::pair<double, double> train_batch(const PairBatch& batch, const std::vector<int>& cols,
                                        bool update_state, bool update_reward);

  TwinConfig cfg_;
  const ios::ActionCatalog* catalog_;
  env::RewardConfig reward_cfg_;
  Eigen::Index n_, k_, m_;
  neural::SeqMode seq_;
  TwinDataset dataset_;
  StateNet state_net_;
  RewardNet reward_net_;
  Vector theta_state_;
  Vector theta_reward_;
  bool trained_ = false;
  std::int64_t virtual_steps_ = 0;
  Rng rng_;
};

}  // namespace iosim::twin
