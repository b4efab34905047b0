// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "iosim/common.hpp"

namespace iosim::neural {

enum class Activation { relu, linear };

/// How a state component is presented to its GRU: one step per structural
/// index (UE column / surface element), or the whole component as one step.
enum class SeqMode { structural, single_step };

/// Coefficient tensors fed compact (diagonal only) or as full M x M planes.
enum class ObsMode { compact, full };

/// Named slice of a flat parameter vector; all layers address their weights
/// through the layout so networks copy, checkpoint and perturb trivially.
struct Slice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

class ParamLayout {
 public:
  int add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Eigen::Index total() const { return total_; }
  const std::vector<Slice>& slices() const { return slices_; }

  Eigen::Map<const Matrix> mat(const Vector& theta, int idx) const;
  Eigen::Map<Matrix> mat(Vector& theta, int idx) const;
  Eigen::Map<const Vector> vec(const Vector& theta, int idx) const;
  Eigen::Map<Vector> vec(Vector& theta, int idx) const;

 private:
  std::vector<Slice> slices_;
  Eigen::Index total_ = 0;
};

// ---------------------------------------------------------------------------
// Layers. Batches are stored column-wise; forward fills a cache that backward
// consumes. Parameter gradients accumulate into a layout-shaped vector.
// ---------------------------------------------------------------------------

struct FcCache {
  Matrix x;  // input
  Matrix z;  // pre-activation
};

class Fc {
 public:
  Fc() = default;
  Fc(ParamLayout& layout, const std::string& prefix, Eigen::Index in, Eigen::Index out,
     Activation act);

  Matrix forward(const ParamLayout& layout, const Vector& theta, const Matrix& x,
                 FcCache* cache) const;
  void backward(const ParamLayout& layout, const Vector& theta, const FcCache& cache,
                const Matrix& dy, Vector& grad, Matrix* dx) const;
  void init_params(const ParamLayout& layout, Vector& theta, Rng& rng) const;

  Eigen::Index in() const { return in_; }
  Eigen::Index out() const { return out_; }
  double min_abs_relu_preact(const FcCache& cache) const;

 private:
  int w_ = -1, b_ = -1;
  Eigen::Index in_ = 0, out_ = 0;
  Activation act_ = Activation::linear;
};

struct GruCache {
  std::vector<Matrix> x, hprev, z, r, c;
};

/// Standard update/reset/candidate GRU consuming a step sequence and emitting
/// the final hidden state; h_0 = 0.
class Gru {
 public:
  Gru() = default;
  Gru(ParamLayout& layout, const std::string& prefix, Eigen::Index in, Eigen::Index hidden);

  Matrix forward(const ParamLayout& layout, const Vector& theta, const std::vector<Matrix>& steps,
                 GruCache* cache) const;
  void backward(const ParamLayout& layout, const Vector& theta, const GruCache& cache,
                const Matrix& dh_final, Vector& grad,
                std::vector<Matrix>* dx = nullptr) const;
  void init_params(const ParamLayout& layout, Vector& theta, Rng& rng) const;

  Eigen::Index in() const { return in_; }
  Eigen::Index hidden() const { return hidden_; }

 private:
  // gate order: z (update), r (reset), c (candidate)
  int wz_ = -1, uz_ = -1, bz_ = -1;
  int wr_ = -1, ur_ = -1, br_ = -1;
  int wc_ = -1, uc_ = -1, bc_ = -1;
  Eigen::Index in_ = 0, hidden_ = 0;
};

struct ResidualCache {
  FcCache a, b;
  Matrix x;
};

/// Two-layer inner stack with an identity shortcut: y = f2(f1(x)) + x.
/// Zero inner weights give the identity map.
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(ParamLayout& layout, const std::string& prefix, Eigen::Index width);

  Matrix forward(const ParamLayout& layout, const Vector& theta, const Matrix& x,
                 ResidualCache* cache) const;
  void backward(const ParamLayout& layout, const Vector& theta, const ResidualCache& cache,
                const Matrix& dy, Vector& grad, Matrix* dx) const;
  void init_params(const ParamLayout& layout, Vector& theta, Rng& rng) const;

  Eigen::Index width() const { return width_; }
  double min_abs_relu_preact(const ResidualCache& cache) const;

 private:
  Fc a_, b_;
  Eigen::Index width_ = 0;
};

// ---------------------------------------------------------------------------
// Losses and the optimizer step.
// ---------------------------------------------------------------------------

struct MseResult {
  double loss = 0.0;
  Matrix grad_pred;
};

/// Squared-error loss ||pred - target||_F^2 / batch with its gradient
/// 2 (pred - target) / batch; columns are batch items.
MseResult mse_loss(const Matrix& pred, const Matrix& target);

/// Plain SGD with optional momentum (velocity owned by the caller when used).
void sgd_step(Vector& params, const Vector& grad, double lr);
void sgd_step(Vector& params, Vector& velocity, const Vector& grad, double lr, double momentum);

// ---------------------------------------------------------------------------
// Checkpointing: named slices serialized to JSON, bit-exact on round-trip.
// ---------------------------------------------------------------------------

std::string params_to_json(const ParamLayout& layout, const Vector& theta);
Vector params_from_json(const ParamLayout& layout, const std::string& json_text);

}  // namespace iosim::neural
