// SPDX-License-Identifier: Apache-2.0
#include "iosim/neural.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace iosim::neural {

int ParamLayout::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  slices_.push_back({name, total_, rows, cols});
  total_ += rows * cols;
  return static_cast<int>(slices_.size()) - 1;
}

Eigen::Map<const Matrix> ParamLayout::mat(const Vector& theta, int idx) const {
  const Slice& s = slices_[static_cast<std::size_t>(idx)];
  return {theta.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Matrix> ParamLayout::mat(Vector& theta, int idx) const {
  const Slice& s = slices_[static_cast<std::size_t>(idx)];
  return {theta.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Vector> ParamLayout::vec(const Vector& theta, int idx) const {
  const Slice& s = slices_[static_cast<std::size_t>(idx)];
  return {theta.data() + s.offset, s.size()};
}

Eigen::Map<Vector> ParamLayout::vec(Vector& theta, int idx) const {
  const Slice& s = slices_[static_cast<std::size_t>(idx)];
  return {theta.data() + s.offset, s.size()};
}

namespace {

void uniform_init(Eigen::Map<Matrix> w, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
}

inline Matrix sigmoid(const Matrix& x) {
  return ((-x.array()).exp() + 1.0).inverse().matrix();
}

}  // namespace

// ----------------------------------------------------------------- Fc

Fc::Fc(ParamLayout& layout, const std::string& prefix, Eigen::Index in, Eigen::Index out,
       Activation act)
    : in_(in), out_(out), act_(act) {
  if (in < 1 || out < 1) throw std::invalid_argument("layer widths must be >= 1");
  w_ = layout.add(prefix + ".W", out, in);
  b_ = layout.add(prefix + ".b", out, 1);
}

Matrix Fc::forward(const ParamLayout& layout, const Vector& theta, const Matrix& x,
                   FcCache* cache) const {
  if (x.rows() != in_) throw std::invalid_argument("Fc input width mismatch");
  Matrix z = layout.mat(theta, w_) * x;
  z.colwise() += layout.vec(theta, b_);
  if (cache) {
    cache->x = x;
    cache->z = z;
  }
  if (act_ == Activation::relu) return z.cwiseMax(0.0);
  return z;
}

void Fc::backward(const ParamLayout& layout, const Vector& theta, const FcCache& cache,
                  const Matrix& dy, Vector& grad, Matrix* dx) const {
  Matrix dz = dy;
  if (act_ == Activation::relu)
    dz = dz.cwiseProduct((cache.z.array() > 0.0).cast<double>().matrix());
  layout.mat(grad, w_) += dz * cache.x.transpose();
  layout.vec(grad, b_) += dz.rowwise().sum();
  if (dx) *dx = layout.mat(theta, w_).transpose() * dz;
}

void Fc::init_params(const ParamLayout& layout, Vector& theta, Rng& rng) const {
  uniform_init(layout.mat(theta, w_), 1.0 / std::sqrt(static_cast<double>(in_)), rng);
  layout.vec(theta, b_).setZero();
}

double Fc::min_abs_relu_preact(const FcCache& cache) const {
  if (act_ != Activation::relu || cache.z.size() == 0)
    return std::numeric_limits<double>::infinity();
  return cache.z.array().abs().minCoeff();
}

// ----------------------------------------------------------------- Gru

Gru::Gru(ParamLayout& layout, const std::string& prefix, Eigen::Index in, Eigen::Index hidden)
    : in_(in), hidden_(hidden) {
  if (in < 1 || hidden < 1) throw std::invalid_argument("layer widths must be >= 1");
  wz_ = layout.add(prefix + ".Wz", hidden, in);
  uz_ = layout.add(prefix + ".Uz", hidden, hidden);
  bz_ = layout.add(prefix + ".bz", hidden, 1);
  wr_ = layout.add(prefix + ".Wr", hidden, in);
  ur_ = layout.add(prefix + ".Ur", hidden, hidden);
  br_ = layout.add(prefix + ".br", hidden, 1);
  wc_ = layout.add(prefix + ".Wc", hidden, in);
  uc_ = layout.add(prefix + ".Uc", hidden, hidden);
  bc_ = layout.add(prefix + ".bc", hidden, 1);
}

Matrix Gru::forward(const ParamLayout& layout, const Vector& theta,
                    const std::vector<Matrix>& steps, GruCache* cache) const {
  if (steps.empty()) throw std::invalid_argument("GRU needs at least one step");
  const Eigen::Index batch = steps.front().cols();
  Matrix h = Matrix::Zero(hidden_, batch);
  if (cache) {
    cache->x.clear();
    cache->hprev.clear();
    cache->z.clear();
    cache->r.clear();
    cache->c.clear();
  }
  const auto wz = layout.mat(theta, wz_), uz = layout.mat(theta, uz_);
  const auto wr = layout.mat(theta, wr_), ur = layout.mat(theta, ur_);
  const auto wc = layout.mat(theta, wc_), uc = layout.mat(theta, uc_);

  for (const Matrix& x : steps) {
    if (x.rows() != in_ || x.cols() != batch)
      throw std::invalid_argument("GRU step shape mismatch");
    Matrix az = wz * x + uz * h;
    az.colwise() += layout.vec(theta, bz_);
    Matrix ar = wr * x + ur * h;
    ar.colwise() += layout.vec(theta, br_);
    const Matrix z = sigmoid(az);
    const Matrix r = sigmoid(ar);
    Matrix ac = wc * x + uc * r.cwiseProduct(h);
    ac.colwise() += layout.vec(theta, bc_);
    const Matrix c = ac.array().tanh().matrix();
    Matrix h_next = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
    if (cache) {
      cache->x.push_back(x);
      cache->hprev.push_back(h);
      cache->z.push_back(z);
      cache->r.push_back(r);
      cache->c.push_back(c);
    }
    h = std::move(h_next);
  }
  return h;
}

void Gru::backward(const ParamLayout& layout, const Vector& theta, const GruCache& cache,
                   const Matrix& dh_final, Vector& grad, std::vector<Matrix>* dx) const {
  const auto uz = layout.mat(theta, uz_);
  const auto ur = layout.mat(theta, ur_);
  const auto uc = layout.mat(theta, uc_);
  const std::size_t steps = cache.x.size();
  if (dx) dx->assign(steps, Matrix());

  Matrix dh = dh_final;
  for (std::size_t t = steps; t-- > 0;) {
    const Matrix& x = cache.x[t];
    const Matrix& hprev = cache.hprev[t];
    const Matrix& z = cache.z[t];
    const Matrix& r = cache.r[t];
    const Matrix& c = cache.c[t];

    const Matrix dz = dh.cwiseProduct(c - hprev);
    const Matrix dc = dh.cwiseProduct(z);
    Matrix dhprev = dh.cwiseProduct((1.0 - z.array()).matrix());

    const Matrix dac = dc.cwiseProduct((1.0 - c.array().square()).matrix());
    const Matrix q = r.cwiseProduct(hprev);
    layout.mat(grad, wc_) += dac * x.transpose();
    layout.mat(grad, uc_) += dac * q.transpose();
    layout.vec(grad, bc_) += dac.rowwise().sum();
    const Matrix dq = uc.transpose() * dac;
    const Matrix dr = dq.cwiseProduct(hprev);
    dhprev += dq.cwiseProduct(r);

    const Matrix daz = dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
    layout.mat(grad, wz_) += daz * x.transpose();
    layout.mat(grad, uz_) += daz * hprev.transpose();
    layout.vec(grad, bz_) += daz.rowwise().sum();
    dhprev += uz.transpose() * daz;

    const Matrix dar = dr.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
    layout.mat(grad, wr_) += dar * x.transpose();
    layout.mat(grad, ur_) += dar * hprev.transpose();
    layout.vec(grad, br_) += dar.rowwise().sum();
    dhprev += ur.transpose() * dar;

    if (dx)
      (*dx)[t] = layout.mat(theta, wz_).transpose() * daz +
                 layout.mat(theta, wr_).transpose() * dar +
                 layout.mat(theta, wc_).transpose() * dac;
    dh = std::move(dhprev);
  }
}

void Gru::init_params(const ParamLayout& layout, Vector& theta, Rng& rng) const {
  const double wb = 1.0 / std::sqrt(static_cast<double>(in_));
  const double ub = 1.0 / std::sqrt(static_cast<double>(hidden_));
  uniform_init(layout.mat(theta, wz_), wb, rng);
  uniform_init(layout.mat(theta, uz_), ub, rng);
  layout.vec(theta, bz_).setZero();
  uniform_init(layout.mat(theta, wr_), wb, rng);
  uniform_init(layout.mat(theta, ur_), ub, rng);
  layout.vec(theta, br_).setZero();
  uniform_init(layout.mat(theta, wc_), wb, rng);
  uniform_init(layout.mat(theta, uc_), ub, rng);
  layout.vec(theta, bc_).setZero();
}

// ----------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(ParamLayout& layout, const std::string& prefix, Eigen::Index width)
    : a_(layout, prefix + ".fc1", width, width, Activation::relu),
      b_(layout, prefix + ".fc2", width, width, Activation::relu),
      width_(width) {}

Matrix ResidualBlock::forward(const ParamLayout& layout, const Vector& theta, const Matrix& x,
                              ResidualCache* cache) const {
  if (cache) cache->x = x;
  const Matrix h = a_.forward(layout, theta, x, cache ? &cache->a : nullptr);
  return b_.forward(layout, theta, h, cache ? &cache->b : nullptr) + x;
}

void ResidualBlock::backward(const ParamLayout& layout, const Vector& theta,
                             const ResidualCache& cache, const Matrix& dy, Vector& grad,
                             Matrix* dx) const {
  Matrix dh;
  b_.backward(layout, theta, cache.b, dy, grad, &dh);
  Matrix dx_stack;
  a_.backward(layout, theta, cache.a, dh, grad, &dx_stack);
  if (dx) *dx = dx_stack + dy;  // shortcut passes the upstream gradient through
}

void ResidualBlock::init_params(const ParamLayout& layout, Vector& theta, Rng& rng) const {
  a_.init_params(layout, theta, rng);
  b_.init_params(layout, theta, rng);
}

double ResidualBlock::min_abs_relu_preact(const ResidualCache& cache) const {
  return std::min(a_.min_abs_relu_preact(cache.a), b_.min_abs_relu_preact(cache.b));
}

// ------------------------------------------------------------ losses

MseResult mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("mse_loss shape mismatch");
  const double batch = static_cast<double>(pred.cols());
  MseResult res;
  const Matrix diff = pred - target;
  res.loss = diff.squaredNorm() / batch;
  res.grad_pred = (2.0 / batch) * diff;
  return res;
}

void sgd_step(Vector& params, const Vector& grad, double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!grad.allFinite()) throw std::runtime_error("non-finite gradient in SGD step");
  params -= lr * grad;
}

void sgd_step(Vector& params, Vector& velocity, const Vector& grad, double lr, double momentum) {
  if (momentum == 0.0) {
    sgd_step(params, grad, lr);
    return;
  }
  if (!grad.allFinite()) throw std::runtime_error("non-finite gradient in SGD step");
  if (velocity.size() != params.size()) velocity = Vector::Zero(params.size());
  velocity = momentum * velocity + grad;
  params -= lr * velocity;
}

// ------------------------------------------------------- checkpoints

std::string params_to_json(const ParamLayout& layout, const Vector& theta) {
  nlohmann::json j;
  j["format"] = "iosim-params-v1";
  auto& slices = j["slices"];
  for (std::size_t i = 0; i < layout.slices().size(); ++i) {
    const Slice& s = layout.slices()[i];
    nlohmann::json entry;
    entry["name"] = s.name;
    entry["rows"] = s.rows;
    entry["cols"] = s.cols;
    std::vector<double> data(theta.data() + s.offset, theta.data() + s.offset + s.size());
    entry["data"] = std::move(data);
    slices.push_back(std::move(entry));
  }
  return j.dump();
}

Vector params_from_json(const ParamLayout& layout, const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  if (j.value("format", "") != "iosim-params-v1")
    throw std::invalid_argument("unknown parameter checkpoint format");
  const auto& slices = j.at("slices");
  if (slices.size() != layout.slices().size())
    throw std::invalid_argument("checkpoint slice count mismatch");
  Vector theta(layout.total());
  for (std::size_t i = 0; i < layout.slices().size(); ++i) {
    const Slice& s = layout.slices()[i];
    const auto& entry = slices[i];
    if (entry.at("name").get<std::string>() != s.name ||
        entry.at("rows").get<Eigen::Index>() != s.rows ||
        entry.at("cols").get<Eigen::Index>() != s.cols)
      throw std::invalid_argument("checkpoint slice shape mismatch for " + s.name);
    const auto data = entry.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != s.size())
      throw std::invalid_argument("checkpoint slice size mismatch for " + s.name);
    std::copy(data.begin(), data.end(), theta.data() + s.offset);
  }
  return theta;
}

}  // namespace iosim::neural
