#include <doctest.h>

#include <cmath>

#include "smogan/error.hpp"
#include "smogan/nnengine.hpp"

using namespace smogan;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, RngStream& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Mlp linear(const Vector& w, double b) {
  Mlp net;
  net.widths = {static_cast<int>(w.size()), 1};
  net.weights.push_back(w.transpose());
  net.biases.push_back(Vector::Constant(1, b));
  return net;
}

double min_abs_preact(const Mlp& net, const Matrix& x) {
  const ForwardTrace t = forward_trace(net, x);
  double m = INFINITY;
  for (std::size_t l = 0; l + 1 < t.preacts.size(); ++l) m = std::min(m, t.preacts[l].cwiseAbs().minCoeff());
  return m;
}

}  // namespace

TEST_CASE("init: bounds, zero biases, determinism, mean") {
  const Mlp a = init_mlp({3, 2}, RngStream(1, 0));
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 5.0));
  CHECK(a.biases[0].isZero());
  const Mlp b = init_mlp({3, 2}, RngStream(1, 0));
  CHECK(a.weights[0] == b.weights[0]);
  const Mlp big = init_mlp({100, 100}, RngStream(2, 0));
  CHECK(std::abs(big.weights[0].mean()) < 0.02);
  CHECK_THROWS_AS(init_mlp({3}, RngStream(0, 0)), Error);
  CHECK_THROWS_AS(init_mlp({3, 0, 1}, RngStream(0, 0)), Error);
  CHECK(gan_widths(6, 1) == std::vector<int>{6, 128, 256, 128, 1});
}

TEST_CASE("forward: hand cases") {
  Mlp zero = init_mlp({3, 4, 2}, RngStream(0, 0));
  for (auto& w : zero.weights) w.setZero();
  CHECK(forward(zero, Matrix::Ones(5, 3)).isZero());

  Vector w(2);
  w << 1, 1;
  Matrix x(1, 2);
  x << 3, 4;
  CHECK(forward(linear(w, 0), x)(0, 0) == 7.0);

  Mlp relu;
  relu.widths = {1, 1, 1};
  relu.weights = {Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0)};
  relu.biases = {Vector::Zero(1), Vector::Zero(1)};
  CHECK(forward(relu, Matrix::Constant(1, 1, 5.0))(0, 0) == 0.0);
  CHECK(forward(relu, Matrix::Constant(1, 1, -5.0))(0, 0) == 5.0);

  CHECK_THROWS_AS(forward(relu, Matrix::Ones(1, 2)), Error);
}

TEST_CASE("forward: positive homogeneity without biases") {
  RngStream rng(4, 0);
  const Mlp net = init_mlp({4, 16, 8, 3}, RngStream(4, 1));
  const Matrix x = random_matrix(10, 4, rng);
  CHECK((forward(net, 2.5 * x) - 2.5 * forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("input gradient") {
  Vector w(3);
  w << 0.5, -2, 3;
  const Mlp lin = linear(w, 1.0);
  RngStream rng(5, 0);
  for (int i = 0; i < 5; ++i) CHECK((input_gradient(lin, random_matrix(3, 1, rng).col(0)) - w).norm() == 0.0);

  Mlp zero = init_mlp({3, 5, 1}, RngStream(0, 0));
  for (auto& m : zero.weights) m.setZero();
  CHECK(input_gradient(zero, Vector::Ones(3)).isZero());

  CHECK_THROWS_AS(input_gradient(init_mlp({3, 2}, RngStream(0, 0)), Vector::Ones(3)), Error);

  Mlp net = init_mlp({4, 12, 12, 1}, RngStream(6, 0));
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.1 * rng.normal();
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = random_matrix(1, 4, rng);
    if (min_abs_preact(net, x) < 1e-3) continue;
    const Vector g = input_gradient(net, x.row(0).transpose());
    for (int c = 0; c < 4; ++c) {
      Matrix xp = x, xm = x;
      xp(0, c) += 1e-4;
      xm(0, c) -= 1e-4;
      const double fd = (forward(net, xp)(0, 0) - forward(net, xm)(0, 0)) / 2e-4;
      CHECK(std::abs(fd - g[c]) <= 1e-5);
    }
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("input gradient is constant within a linear region") {
  RngStream rng(8, 0);
  const Mlp net = init_mlp({3, 10, 10, 1}, RngStream(8, 1));
  const Matrix x = random_matrix(1, 3, rng);
  Matrix y = x;
  y(0, 0) += 1e-9;
  REQUIRE(min_abs_preact(net, x) > 1e-6);
  CHECK((input_gradient(net, x.row(0).transpose()) - input_gradient(net, y.row(0).transpose())).norm() == 0.0);
}

TEST_CASE("backward: parameter gradients match finite differences") {
  RngStream rng(9, 0);
  Mlp net = init_mlp({3, 7, 5, 2}, RngStream(9, 1));
  const Matrix x = random_matrix(6, 3, rng);
  const Matrix up = random_matrix(6, 2, rng);
  REQUIRE(min_abs_preact(net, x) > 1e-4);
  auto loss = [&](const Mlp& n) { return (forward(n, x).array() * up.array()).sum(); };
  MlpGradient g = MlpGradient::zeros_like(net);
  backward(net, forward_trace(net, x), up, &g);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
      Mlp p = net, m = net;
      p.weights[l].data()[i] += 1e-5;
      m.weights[l].data()[i] -= 1e-5;
      CHECK(std::abs((loss(p) - loss(m)) / 2e-5 - g.weights[l].data()[i]) < 1e-6);
    }
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
      Mlp p = net, m = net;
      p.biases[l][i] += 1e-5;
      m.biases[l][i] -= 1e-5;
      CHECK(std::abs((loss(p) - loss(m)) / 2e-5 - g.biases[l][i]) < 1e-6);
    }
  }
}

TEST_CASE("gradient penalty gradient: linear critic minimum and closed form") {
  Vector w(3);
  w << 0.6, 0.0, 0.8;  // unit norm
  Mlp lin = linear(w, 0.3);
  MlpGradient g = MlpGradient::zeros_like(lin);
  const double v = gradient_norm_penalty(lin, Matrix::Ones(4, 3), &g);
  CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.weights[0].norm() < 1e-15);
  CHECK(g.biases[0].isZero());

  Mlp lin3 = linear(3.0 * w, 0.0);
  MlpGradient g3 = MlpGradient::zeros_like(lin3);
  CHECK(gradient_norm_penalty(lin3, Matrix::Ones(4, 3), &g3) == doctest::Approx(4.0));
  // d/dw (|w| - 1)^2 = 2 (|w| - 1) w / |w|
  const Vector expect = 2.0 * (3.0 - 1.0) * w;
  CHECK((g3.weights[0].row(0).transpose() - expect).norm() < 1e-12);
}

TEST_CASE("adam: closed-form first step, zero gradient, scalar quadratic") {
  Mlp net = linear(Vector::Constant(2, 1.0), 0.0);
  AdamState s = make_adam(net, AdamConfig{});
  MlpGradient g = MlpGradient::zeros_like(net);
  g.weights[0] << 0.3, -2.0;
  adam_step(s, net, g);
  CHECK(s.step_count == 1);
  CHECK(net.weights[0](0, 0) == doctest::Approx(1.0 - 1e-4).epsilon(1e-9));
  CHECK(net.weights[0](0, 1) == doctest::Approx(1.0 + 1e-4).epsilon(1e-9));

  const Mlp before = net;
  const MlpGradient m_before = s.first_moment;
  adam_step(s, net, MlpGradient::zeros_like(net));
  CHECK(s.step_count == 2);
  CHECK(net.weights[0] == before.weights[0]);  // beta1 = 0: the step uses only g = 0
  CHECK(s.second_moment.weights[0].cwiseAbs().maxCoeff() < (g.weights[0].cwiseAbs2() * 0.1).maxCoeff());

  // f(theta) = theta^2, lr = 0.1, default betas, vs a scalar recursion oracle.
  Mlp q = linear(Vector::Constant(1, 1.0), 0.0);
  AdamConfig c;
  c.learning_rate = 0.1;
  AdamState qs = make_adam(q, c);
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    MlpGradient gq = MlpGradient::zeros_like(q);
    gq.weights[0](0, 0) = 2.0 * q.weights[0](0, 0);
    adam_step(qs, q, gq);
    const double gt = 2.0 * theta;
    m = c.beta1 * m + (1 - c.beta1) * gt;
    v = c.beta2 * v + (1 - c.beta2) * gt * gt;
    theta -= c.learning_rate * (m / (1 - std::pow(c.beta1, t))) / (std::sqrt(v / (1 - std::pow(c.beta2, t))) + c.epsilon);
  }
  CHECK(q.weights[0](0, 0) == doctest::Approx(theta).epsilon(1e-12));
  CHECK(std::abs(theta) < 0.1);

  MlpGradient wrong = MlpGradient::zeros_like(linear(Vector::Ones(3), 0));
  CHECK_THROWS_AS(adam_step(s, net, wrong), Error);
}

TEST_CASE("mlp validation") {
  Mlp net = init_mlp({2, 3, 1}, RngStream(0, 0));
  CHECK_NOTHROW(net.validate());
  CHECK(net.parameter_count() == 2 * 3 + 3 + 3 + 1);
  net.weights[1](0, 0) = NAN;
  CHECK_THROWS_AS(net.validate(), Error);
}
