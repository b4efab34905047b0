// SPDX-License-Identifier: Apache-2.0
#include "iosim/agent.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace iosim::agent {

void AgentConfig::validate() const {
  if (discount < 0.0 || discount > 1.0) throw std::invalid_argument("discount must be in [0,1]");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (batch_size < 1 || buffer_capacity < batch_size)
    throw std::invalid_argument("batch size must be in [1, buffer capacity]");
  if (target_period < 1) throw std::invalid_argument("target period must be >= 1");
  if (hidden_width < 1) throw std::invalid_argument("hidden width must be >= 1");
}

void ReplayBuffer::store(Experience exp) {
  buffer_.push_back(std::move(exp));
  if (buffer_.size() > capacity_) buffer_.pop_front();
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (buffer_.empty()) throw state_error("cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
  std::vector<const Experience*> out(count);
  for (auto& slot : out) slot = &buffer_[pick(rng)];
  return out;
}

// ------------------------------------------------------------------ QNet

QNet::QNet(Eigen::Index n, Eigen::Index k, Eigen::Index m, std::vector<int> head_sizes,
           Eigen::Index hidden, neural::SeqMode seq, neural::ObsMode obs)
    : head_sizes_(std::move(head_sizes)), hidden_(hidden), seq_(seq), obs_(obs) {
  if (head_sizes_.empty() || head_sizes_.size() > 2)
    throw std::invalid_argument("QNet supports one or two action heads");
  static const char* comp_names[3] = {"hhat", "phir", "phit"};
  for (int c = 0; c < 3; ++c) {
    const auto [steps, width] = encode::component_shape(c, n, k, m, seq, obs);
    (void)steps;
    gru_[static_cast<std::size_t>(c)] =
        neural::Gru(layout_, std::string("gru.") + comp_names[c], width, hidden);
    fc_[static_cast<std::size_t>(c)] = neural::Fc(layout_, std::string("fc.") + comp_names[c],
                                                  hidden, hidden, neural::Activation::relu);
  }
  for (std::size_t h = 0; h < head_sizes_.size(); ++h) {
    const std::string tag = "branch" + std::to_string(h);
    head_fc_.emplace_back(layout_, tag + ".fc", 3 * hidden, hidden, neural::Activation::relu);
    head_out_.emplace_back(layout_, tag + ".out", hidden, head_sizes_[h],
                           neural::Activation::linear);
  }
}

std::vector<Matrix> QNet::forward(const Vector& theta, const encode::NetInput& in,
                                  Cache* cache) const {
  Matrix features(3 * hidden_, in.batch);
  for (std::size_t c = 0; c < 3; ++c) {
    const Matrix h = gru_[c].forward(layout_, theta, in.comp[c], cache ? &cache->gru[c] : nullptr);
    features.middleRows(static_cast<Eigen::Index>(c) * hidden_, hidden_) =
        fc_[c].forward(layout_, theta, h, cache ? &cache->fc[c] : nullptr);
  }
  if (cache) cache->features = features;

  std::vector<Matrix> heads;
  heads.reserve(head_fc_.size());
  for (std::size_t h = 0; h < head_fc_.size(); ++h) {
    const Matrix hid =
        head_fc_[h].forward(layout_, theta, features, cache ? &cache->head_fc[h] : nullptr);
    heads.push_back(
        head_out_[h].forward(layout_, theta, hid, cache ? &cache->head_out[h] : nullptr));
  }
  return heads;
}

void QNet::backward(const Vector& theta, const Cache& cache, const std::vector<Matrix>& dheads,
                    Vector& grad) const {
  if (dheads.size() != head_fc_.size())
    throw std::invalid_argument("one upstream gradient per head required");
  Matrix dfeatures = Matrix::Zero(cache.features.rows(), cache.features.cols());
  for (std::size_t h = 0; h < head_fc_.size(); ++h) {
    Matrix dhid;
    head_out_[h].backward(layout_, theta, cache.head_out[h], dheads[h], grad, &dhid);
    Matrix dfeat;
    head_fc_[h].backward(layout_, theta, cache.head_fc[h], dhid, grad, &dfeat);
    dfeatures += dfeat;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    Matrix dh;
    fc_[c].backward(layout_, theta, cache.fc[c],
                    dfeatures.middleRows(static_cast<Eigen::Index>(c) * hidden_, hidden_), grad,
                    &dh);
    gru_[c].backward(layout_, theta, cache.gru[c], dh, grad);
  }
}

Vector QNet::init_params(Rng& rng) const {
  Vector theta = Vector::Zero(layout_.total());
  for (const auto& g : gru_) g.init_params(layout_, theta, rng);
  for (const auto& f : fc_) f.init_params(layout_, theta, rng);
  for (std::size_t h = 0; h < head_fc_.size(); ++h) {
    head_fc_[h].init_params(layout_, theta, rng);
    head_out_[h].init_params(layout_, theta, rng);
  }
  return theta;
}

std::vector<int> QNet::head_slice_indices(int h) const {
  const std::string tag = "branch" + std::to_string(h) + ".";
  std::vector<int> out;
  for (std::size_t i = 0; i < layout_.slices().size(); ++i)
    if (layout_.slices()[i].name.rfind(tag, 0) == 0) out.push_back(static_cast<int>(i));
  return out;
}

double QNet::min_abs_relu_preact(const Cache& cache) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < 3; ++c) m = std::min(m, fc_[c].min_abs_relu_preact(cache.fc[c]));
  for (std::size_t h = 0; h < head_fc_.size(); ++h)
    m = std::min(m, head_fc_[h].min_abs_relu_preact(cache.head_fc[h]));
  return m;
}

// ----------------------------------------------------------------- QAgent

namespace {

std::vector<int> make_head_sizes(bool branching, int n1, int n2) {
  if (branching) return {n1, n2};
  return {n1 * n2};
}

int argmax_lowest(const Vector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;  // strict: ties keep the lowest index
  return best;
}

}  // namespace

QAgent::QAgent(const AgentConfig& cfg, Eigen::Index n, Eigen::Index k, Eigen::Index m, int n1,
               int n2, std::uint64_t seed)
    : cfg_(cfg),
      n1_(n1),
      n2_(n2),
      net_(n, k, m, make_head_sizes(cfg.branching, n1, n2), cfg.hidden_width, cfg.seq, cfg.obs),
      buffer_(static_cast<std::size_t>(cfg.buffer_capacity)),
      rng_select_(make_rng(seed, 0x5e1)),
      rng_sample_(make_rng(seed, 0x5a2)) {
  cfg_.validate();
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("branch sizes must be >= 1");
  Rng init_rng = make_rng(seed, 0x111);
  theta_ = net_.init_params(init_rng);
  target_theta_ = theta_;
}

BranchQ QAgent::q_values(const env::Observation& obs) const {
  const auto in = encode::encode_observation(obs, cfg_.seq, cfg_.obs);
  const auto heads = net_.forward(theta_, in, nullptr);
  BranchQ q;
  for (const auto& h : heads) q.q.push_back(h.col(0));
  return q;
}

env::JointAction QAgent::select_action(const BranchQ& q, double epsilon, Rng& rng) const {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must be in [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (cfg_.branching) {
    env::JointAction a;
    if (unit(rng) < epsilon)
      a.increment_index = std::uniform_int_distribution<int>(0, n1_ - 1)(rng);
    else
      a.increment_index = argmax_lowest(q.q[0]);
    if (unit(rng) < epsilon)
      a.amplitude_index = std::uniform_int_distribution<int>(0, n2_ - 1)(rng);
    else
      a.amplitude_index = argmax_lowest(q.q[1]);
    return a;
  }
  int joint;
  if (unit(rng) < epsilon)
    joint = std::uniform_int_distribution<int>(0, n1_ * n2_ - 1)(rng);
  else
    joint = argmax_lowest(q.q[0]);
  return decompose(joint);
}

env::JointAction QAgent::decompose(int joint) const {
  return {joint / n2_, joint % n2_};
}

env::JointAction QAgent::act(const env::Observation& obs) {
  const double eps = epsilon();
  ++decision_count_;
  return select_action(q_values(obs), eps, rng_select_);
}

double QAgent::epsilon() const {
  return std::max(cfg_.epsilon_floor,
                  std::pow(cfg_.epsilon_decay, static_cast<double>(decision_count_)));
}

std::pair<double, Vector> QAgent::loss_and_grad(const Vector& theta, const Vector& target_theta,
                                                std::span<const Experience* const> batch) const {
  if (batch.empty()) throw std::invalid_argument("loss needs a non-empty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());

  std::vector<const env::Observation*> states(batch.size());
  std::vector<const env::Observation*> next_states(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    states[i] = &batch[i]->state;
    next_states[i] = &batch[i]->next_state;
  }
  const auto in = encode::encode_observations(states, cfg_.seq, cfg_.obs);
  const auto in_next = encode::encode_observations(next_states, cfg_.seq, cfg_.obs);

  QNet::Cache cache;
  const auto heads = net_.forward(theta, in, &cache);
  const auto target_heads = net_.forward(target_theta, in_next, nullptr);

  const double inv_b = 1.0 / static_cast<double>(b);
  std::vector<Matrix> dheads;
  dheads.reserve(heads.size());
  for (const auto& h : heads) dheads.push_back(Matrix::Zero(h.rows(), h.cols()));

  double loss = 0.0;
  if (cfg_.branching) {
    for (Eigen::Index i = 0; i < b; ++i) {
      const Experience& e = *batch[static_cast<std::size_t>(i)];
      const double r = e.reward;
      const double y1 = r + cfg_.discount * target_heads[0].col(i).maxCoeff();
      const double y2 = r + cfg_.discount * target_heads[1].col(i).maxCoeff();
      const double d1 = y1 - heads[0](e.action.increment_index, i);
      const double d2 = y2 - heads[1](e.action.amplitude_index, i);
      if (cfg_.loss_mode == LossMode::summed_td) {
        const double s = d1 + d2;
        loss += s * s * inv_b;
        dheads[0](e.action.increment_index, i) = -2.0 * s * inv_b;
        dheads[1](e.action.amplitude_index, i) = -2.0 * s * inv_b;
      } else {
        loss += (d1 * d1 + d2 * d2) * inv_b;
        dheads[0](e.action.increment_index, i) = -2.0 * d1 * inv_b;
        dheads[1](e.action.amplitude_index, i) = -2.0 * d2 * inv_b;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < b; ++i) {
      const Experience& e = *batch[static_cast<std::size_t>(i)];
      const int joint = e.action.increment_index * n2_ + e.action.amplitude_index;
      const double y = e.reward + cfg_.discount * target_heads[0].col(i).maxCoeff();
      const double d = y - heads[0](joint, i);
      loss += d * d * inv_b;
      dheads[0](joint, i) = -2.0 * d * inv_b;
    }
  }

  Vector grad = Vector::Zero(theta.size());
  net_.backward(theta, cache, dheads, grad);
  return {loss, std::move(grad)};
}

TrainDiagnostics QAgent::train_step() {
  TrainDiagnostics diag;
  if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) {
    ++skipped_;
    return diag;
  }
  const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_sample_);
  auto [loss, grad] = loss_and_grad(theta_, target_theta_, batch);
  neural::sgd_step(theta_, velocity_, grad, cfg_.learning_rate, cfg_.momentum);
  diag.trained = true;
  diag.loss = loss;
  ++train_count_;
  if (train_count_ % cfg_.target_period == 0) {
    sync_target();
    diag.synced = true;
  }
  return diag;
}

void QAgent::deliver_from(const QAgent& other) {
  if (other.theta_.size() != theta_.size())
    throw std::invalid_argument("parameter delivery between incompatible networks");
  theta_ = other.theta_;
}

std::string QAgent::checkpoint_json() const {
  nlohmann::json j;
  j["format"] = "iosim-agent-v1";
  j["decision_count"] = decision_count_;
  j["train_count"] = train_count_;
  j["online"] = nlohmann::json::parse(neural::params_to_json(net_.layout(), theta_));
  j["target"] = nlohmann::json::parse(neural::params_to_json(net_.layout(), target_theta_));
  return j.dump();
}

void QAgent::load_checkpoint_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "iosim-agent-v1")
    throw std::invalid_argument("unknown agent checkpoint format");
  theta_ = neural::params_from_json(net_.layout(), j.at("online").dump());
  target_theta_ = neural::params_from_json(net_.layout(), j.at("target").dump());
  decision_count_ = j.value("decision_count", std::int64_t{0});
  train_count_ = j.value("train_count", std::int64_t{0});
}

}  // namespace iosim::agent
