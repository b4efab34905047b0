// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "iosim/encode.hpp"
#include "iosim/env.hpp"
#include "iosim/neural.hpp"

namespace iosim::agent {

struct Experience {
  env::Observation state;
  env::JointAction action;
  double reward = 0.0;
  env::Observation next_state;
};

enum class LossMode { summed_td, per_branch };

struct AgentConfig {
  double discount = 0.95;        // gamma
  double learning_rate = 0.001;  // alpha
  int buffer_capacity = 10000;   // E
  int batch_size = 8;            // N_E
  int target_period = 20;        // T0
  double epsilon_floor = 0.001;
  double epsilon_decay = 0.99;
  Eigen::Index hidden_width = 64;
  LossMode loss_mode = LossMode::summed_td;
  neural::SeqMode seq = neural::SeqMode::structural;
  neural::ObsMode obs = neural::ObsMode::compact;
  bool branching = true;
  double momentum = 0.0;  // off by default; plain SGD

  void validate() const;
};

/// Q-values of one decision: q per action branch. Non-branching agents carry a
/// single joint head in q[0].
struct BranchQ {
  std::vector<Vector> q;
};

/// FIFO experience buffer with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void store(Experience exp);
  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& at(std::size_t i) const { return buffer_[i]; }
  std::vector<const Experience*> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> buffer_;
};

/// The shared-trunk Q-network: per state component one GRU feeding one FC
/// layer, features concatenated, then one FC + linear output per action head.
class QNet {
 public:
  QNet(Eigen::Index n, Eigen::Index k, Eigen::Index m, std::vector<int> head_sizes,
       Eigen::Index hidden, neural::SeqMode seq, neural::ObsMode obs);

  struct Cache {
    std::array<neural::GruCache, 3> gru;
    std::array<neural::FcCache, 3> fc;
    std::array<neural::FcCache, 2> head_fc;
    std::array<neural::FcCache, 2> head_out;
    Matrix features;
  };

  std::vector<Matrix> forward(const Vector& theta, const encode::NetInput& in,
                              Cache* cache) const;
  void backward(const Vector& theta, const Cache& cache, const std::vector<Matrix>& dheads,
                Vector& grad) const;

  Vector init_params(Rng& rng) const;
  const neural::ParamLayout& layout() const { return layout_; }
  const std::vector<int>& head_sizes() const { return head_sizes_; }
  /// Named slice indices owned by head `h` (branch-independence checks).
  std::vector<int> head_slice_indices(int h) const;
  double min_abs_relu_preact(const Cache& cache) const;

 private:
  neural::ParamLayout layout_;
  std::array<neural::Gru, 3> gru_;
  std::array<neural::Fc, 3> fc_;
  std::vector<neural::Fc> head_fc_;
  std::vector<neural::Fc> head_out_;
  std::vector<int> head_sizes_;
  Eigen::Index hidden_ = 0;
  neural::SeqMode seq_;
  neural::ObsMode obs_;
};

struct TrainDiagnostics {
  bool trained = false;
  bool synced = false;
  double loss = 0.0;
};

/// The branching deep-Q agent: epsilon-greedy per-branch selection, FIFO
/// replay, fixed target network, joint two-branch TD loss, plain SGD. With
/// branching disabled it degrades to a single joint-head DQN.
class QAgent {
 public:
  QAgent(const AgentConfig& cfg, Eigen::Index n, Eigen::Index k, Eigen::Index m, int n1, int n2,
         std::uint64_t seed);

  BranchQ q_values(const env::Observation& obs) const;
  env::JointAction select_action(const BranchQ& q, double epsilon, Rng& rng) const;

  /// One epsilon-greedy decision using the internal schedule and RNG stream;
  /// advances the decision counter. This is the full execution path — the
  /// physical agent calls exactly this and nothing else.
  env::JointAction act(const env::Observation& obs);

  double epsilon() const;
  std::int64_t decision_count() const { return decision_count_; }
  void reset_decision_count() { decision_count_ = 0; }

  void store(Experience exp) { buffer_.store(std::move(exp)); }
  const ReplayBuffer& buffer() const { return buffer_; }

  TrainDiagnostics train_step();
  std::int64_t train_count() const { return train_count_; }
  std::int64_t skipped_train_steps() const { return skipped_; }

  /// Loss and full parameter gradient for an explicit batch; pure in theta.
  std::pair<double, Vector> loss_and_grad(const Vector& theta, const Vector& target_theta,
                                          std::span<const Experience* const> batch) const;

  void sync_target() { target_theta_ = theta_; }
  void deliver_from(const QAgent& other);

  const QNet& net() const { return net_; }
  const Vector& params() const { return theta_; }
  Vector& mutable_params() { return theta_; }
  const Vector& target_params() const { return target_theta_; }
  const AgentConfig& config() const { return cfg_; }
  std::pair<int, int> branch_sizes() const { return {n1_, n2_}; }

  std::string checkpoint_json() const;
  void load_checkpoint_json(const std::string& text);

 private:
  env::JointAction decompose(int joint) const;

  AgentConfig cfg_;
  int n1_ = 0, n2_ = 0;
  QNet net_;
  Vector theta_;
  Vector target_theta_;
  Vector velocity_;
  ReplayBuffer buffer_;
  std::int64_t decision_count_ = 0;
  std::int64_t train_count_ = 0;
  std::int64_t skipped_ = 0;
  mutable Rng rng_select_;
  Rng rng_sample_;
};

}  // namespace iosim::agent
