// SPDX-License-Identifier: Apache-2.0
#include <functional>

#include "doctest.h"
#include "iosim/neural.hpp"

using namespace iosim;
using namespace iosim::neural;

namespace {

int slice_index(const ParamLayout& layout, const std::string& name) {
  for (std::size_t i = 0; i < layout.slices().size(); ++i)
    if (layout.slices()[i].name == name) return static_cast<int>(i);
  throw std::logic_error("no slice " + name);
}

void set_slice(const ParamLayout& layout, Vector& theta, const std::string& name,
               std::initializer_list<double> values) {
  auto view = layout.vec(theta, slice_index(layout, name));
  REQUIRE(view.size() == static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) view(i++) = v;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal_sample(rng);
  return m;
}

// zero-initialized biases can park pre-activations exactly on the ReLU kink;
// jitter all parameters so the finite-difference sweep has room to work
void jitter(Vector& theta, Rng& rng) {
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.1 * normal_sample(rng);
}

// Central finite differences against the analytic gradient. `loss` returns
// (value, min |ReLU pre-activation|); coordinates whose evaluation lands in a
// kink neighborhood are skipped.
void check_gradient(Vector theta, const Vector& analytic,
                    const std::function<std::pair<double, double>(const Vector&)>& loss,
                    double tol = 1e-4, double step = 1e-5) {
  REQUIRE(theta.size() == analytic.size());
  int checked = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + step;
    const auto [fp, kp] = loss(theta);
    theta(i) = saved - step;
    const auto [fm, km] = loss(theta);
    theta(i) = saved;
    if (kp < 1e-6 || km < 1e-6) continue;  // ReLU kink neighborhood
    const double fd = (fp - fm) / (2.0 * step);
    const double an = analytic(i);
    const double err = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
    CHECK(err < tol);
    ++checked;
  }
  CHECK(checked > 0);
}

}  // namespace

TEST_CASE("fc layer forward basics") {
  ParamLayout layout;
  Fc fc(layout, "fc", 3, 2, Activation::relu);
  Vector theta = Vector::Zero(layout.total());
  Matrix x(3, 1);
  x << 1.0, -2.0, 0.5;
  CHECK(fc.forward(layout, theta, x, nullptr).cwiseAbs().maxCoeff() == 0.0);

  set_slice(layout, theta, "fc.W", {1.0, 0.0, 0.0, 1.0, 0.0, 0.0});  // column-major 2x3
  set_slice(layout, theta, "fc.b", {0.0, -1.0});
  const Matrix y = fc.forward(layout, theta, x, nullptr);
  // z = [1*1 + 0*(-2) + 0*0.5, 1*1 + 0 - 1] = [1, 0]; relu -> [1, 0]
  CHECK(y(0, 0) == doctest::Approx(1.0));
  CHECK(y(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("linear fc gradient equals input times upstream") {
  ParamLayout layout;
  Fc fc(layout, "fc", 3, 2, Activation::linear);
  Rng rng = make_rng(11, 0);
  Vector theta(layout.total());
  fc.init_params(layout, theta, rng);
  Matrix x = random_matrix(3, 1, rng);
  FcCache cache;
  fc.forward(layout, theta, x, &cache);
  Matrix dy(2, 1);
  dy << 0.7, -1.3;
  Vector grad = Vector::Zero(layout.total());
  fc.backward(layout, theta, cache, dy, grad, nullptr);
  const auto gw = layout.mat(grad, slice_index(layout, "fc.W"));
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(gw(i, j) == doctest::Approx(x(j, 0) * dy(i, 0)).epsilon(1e-12));
  const auto gb = layout.vec(grad, slice_index(layout, "fc.b"));
  CHECK(gb(0) == doctest::Approx(0.7));
  CHECK(gb(1) == doctest::Approx(-1.3));
}

TEST_CASE("zero upstream gradient produces zero parameter gradient") {
  ParamLayout layout;
  Fc fc(layout, "fc", 4, 3, Activation::relu);
  Rng rng = make_rng(11, 1);
  Vector theta(layout.total());
  fc.init_params(layout, theta, rng);
  const Matrix x = random_matrix(4, 2, rng);
  FcCache cache;
  fc.forward(layout, theta, x, &cache);
  Vector grad = Vector::Zero(layout.total());
  fc.backward(layout, theta, cache, Matrix::Zero(3, 2), grad, nullptr);
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("residual block with zero inner weights is the identity") {
  ParamLayout layout;
  ResidualBlock block(layout, "res", 4);
  const Vector theta = Vector::Zero(layout.total());
  Rng rng = make_rng(11, 2);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix y = block.forward(layout, theta, x, nullptr);
  CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one-step GRU matches a hand computation") {
  ParamLayout layout;
  Gru gru(layout, "g", 1, 1);
  Vector theta = Vector::Zero(layout.total());
  set_slice(layout, theta, "g.Wz", {0.3});
  set_slice(layout, theta, "g.Uz", {0.4});
  set_slice(layout, theta, "g.bz", {0.1});
  set_slice(layout, theta, "g.Wr", {-0.2});
  set_slice(layout, theta, "g.Ur", {0.6});
  set_slice(layout, theta, "g.br", {0.05});
  set_slice(layout, theta, "g.Wc", {0.7});
  set_slice(layout, theta, "g.Uc", {-0.3});
  set_slice(layout, theta, "g.bc", {0.2});

  Matrix x(1, 1);
  x << 0.5;
  const Matrix h = gru.forward(layout, theta, {x}, nullptr);

  // update gate z = sigmoid(0.3*0.5 + 0.1); candidate c = tanh(0.7*0.5 + 0.2)
  // (reset gate drops out because h0 = 0); h1 = z * c
  const double z = 1.0 / (1.0 + std::exp(-(0.3 * 0.5 + 0.1)));
  const double c = std::tanh(0.7 * 0.5 + 0.2);
  CHECK(h(0, 0) == doctest::Approx(z * c).epsilon(1e-12));
}

TEST_CASE("gradients pass central finite differences") {
  Rng rng = make_rng(13, 0);
  std::uniform_int_distribution<Eigen::Index> dim(1, 6);

  SUBCASE("fc relu and linear") {
    for (int trial = 0; trial < 10; ++trial) {
      ParamLayout layout;
      const auto in = dim(rng), out = dim(rng), batch = dim(rng);
      Fc fc(layout, "fc", in, out, trial % 2 ? Activation::relu : Activation::linear);
      Vector theta(layout.total());
      fc.init_params(layout, theta, rng);
      jitter(theta, rng);
      const Matrix x = random_matrix(in, batch, rng);
      const Matrix target = random_matrix(out, batch, rng);

      FcCache cache;
      const Matrix pred = fc.forward(layout, theta, x, &cache);
      const auto mse = mse_loss(pred, target);
      Vector grad = Vector::Zero(layout.total());
      fc.backward(layout, theta, cache, mse.grad_pred, grad, nullptr);

      check_gradient(theta, grad, [&](const Vector& t) {
        FcCache c2;
        const Matrix p = fc.forward(layout, t, x, &c2);
        return std::make_pair(mse_loss(p, target).loss, fc.min_abs_relu_preact(c2));
      });
    }
  }

  SUBCASE("gru over short sequences") {
    for (int trial = 0; trial < 10; ++trial) {
      ParamLayout layout;
      const auto in = dim(rng), hidden = dim(rng), batch = dim(rng);
      const int steps = 1 + trial % 3;
      Gru gru(layout, "g", in, hidden);
      Vector theta(layout.total());
      gru.init_params(layout, theta, rng);
      jitter(theta, rng);
      std::vector<Matrix> xs;
      for (int s = 0; s < steps; ++s) xs.push_back(random_matrix(in, batch, rng));
      const Matrix target = random_matrix(hidden, batch, rng);

      GruCache cache;
      const Matrix h = gru.forward(layout, theta, xs, &cache);
      const auto mse = mse_loss(h, target);
      Vector grad = Vector::Zero(layout.total());
      gru.backward(layout, theta, cache, mse.grad_pred, grad);

      check_gradient(theta, grad, [&](const Vector& t) {
        const Matrix p = gru.forward(layout, t, xs, nullptr);
        return std::make_pair(mse_loss(p, target).loss,
                              std::numeric_limits<double>::infinity());
      });
    }
  }

  SUBCASE("residual block") {
    for (int trial = 0; trial < 10; ++trial) {
      ParamLayout layout;
      const auto width = dim(rng), batch = dim(rng);
      ResidualBlock block(layout, "res", width);
      Vector theta(layout.total());
      block.init_params(layout, theta, rng);
      jitter(theta, rng);
      const Matrix x = random_matrix(width, batch, rng);
      const Matrix target = random_matrix(width, batch, rng);

      ResidualCache cache;
      const Matrix pred = block.forward(layout, theta, x, &cache);
      const auto mse = mse_loss(pred, target);
      Vector grad = Vector::Zero(layout.total());
      block.backward(layout, theta, cache, mse.grad_pred, grad, nullptr);

      check_gradient(theta, grad, [&](const Vector& t) {
        ResidualCache c2;
        const Matrix p = block.forward(layout, t, x, &c2);
        return std::make_pair(mse_loss(p, target).loss, block.min_abs_relu_preact(c2));
      });
    }
  }
}

TEST_CASE("mse loss values and gradient") {
  Matrix pred(2, 1), target(2, 1);
  pred << 1.0, 2.0;
  target << 1.0, 2.0;
  CHECK(mse_loss(pred, target).loss == 0.0);

  pred << 2.0, 3.0;
  const auto res = mse_loss(pred, target);
  CHECK(res.loss == doctest::Approx(2.0));
  CHECK(res.grad_pred(0, 0) == doctest::Approx(2.0));
  CHECK(res.grad_pred(1, 0) == doctest::Approx(2.0));

  // finite differences on the prediction argument
  Rng rng = make_rng(13, 1);
  Matrix p = random_matrix(3, 2, rng);
  const Matrix t = random_matrix(3, 2, rng);
  const auto base = mse_loss(p, t);
  const double step = 1e-6;
  for (Eigen::Index j = 0; j < p.cols(); ++j)
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      p(i, j) += step;
      const double fp = mse_loss(p, t).loss;
      p(i, j) -= 2.0 * step;
      const double fm = mse_loss(p, t).loss;
      p(i, j) += step;
      CHECK((fp - fm) / (2.0 * step) == doctest::Approx(base.grad_pred(i, j)).epsilon(1e-5));
    }

  Matrix bad(3, 1);
  CHECK_THROWS_AS(mse_loss(bad, Matrix::Zero(2, 1)), std::invalid_argument);
}

TEST_CASE("sgd step") {
  Vector theta(2);
  theta << 1.0, -2.0;
  Vector grad(2);
  grad << 0.5, 0.5;

  SUBCASE("zero learning rate leaves parameters unchanged") {
    Vector t = theta;
    sgd_step(t, grad, 0.0);
    CHECK(t(0) == 1.0);
    CHECK(t(1) == -2.0);
  }

  SUBCASE("one step on a quadratic moves toward the minimum") {
    // loss = 0.5 (theta - c)^2, gradient theta - c
    double t = 5.0;
    const double c = 2.0, lr = 0.1;
    t -= lr * (t - c);
    Vector tv(1);
    tv << 5.0;
    Vector gv(1);
    gv << 5.0 - c;
    sgd_step(tv, gv, lr);
    CHECK(tv(0) == doctest::Approx(t));
    CHECK(tv(0) == doctest::Approx(4.7));
  }

  SUBCASE("non-finite gradient rejected") {
    Vector g = grad;
    g(1) = std::numeric_limits<double>::quiet_NaN();
    Vector t = theta;
    CHECK_THROWS_AS(sgd_step(t, g, 0.1), std::runtime_error);
  }
}

TEST_CASE("parameter checkpoints round-trip bit-exactly") {
  ParamLayout layout;
  Fc fc(layout, "fc", 5, 4, Activation::relu);
  Gru gru(layout, "g", 3, 4);
  Rng rng = make_rng(13, 2);
  Vector theta(layout.total());
  fc.init_params(layout, theta, rng);
  gru.init_params(layout, theta, rng);
  theta(0) = 0.1 + 0.2;  // a value without a short decimal representation

  const std::string text = params_to_json(layout, theta);
  const Vector back = params_from_json(layout, text);
  REQUIRE(back.size() == theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) CHECK(back(i) == theta(i));
}

TEST_CASE("forward is deterministic") {
  ParamLayout layout;
  Gru gru(layout, "g", 4, 5);
  Rng rng = make_rng(13, 3);
  Vector theta(layout.total());
  gru.init_params(layout, theta, rng);
  const std::vector<Matrix> xs{random_matrix(4, 3, rng), random_matrix(4, 3, rng)};
  const Matrix a = gru.forward(layout, theta, xs, nullptr);
  const Matrix b = gru.forward(layout, theta, xs, nullptr);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}
