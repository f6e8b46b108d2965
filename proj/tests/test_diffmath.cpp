#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "vgan/diffmath/grad.hpp"
#include "vgan/diffmath/tape.hpp"
#include "vgan/models/mlp.hpp"

using namespace vgan;
using diffmath::Matrix;
using diffmath::Tape;
using diffmath::Var;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  std::size_t i = 0;
  for (double x : v) m(0, static_cast<Eigen::Index>(i++)) = x;
  return m;
}

models::MlpSpec tanh_critic(std::size_t in, std::size_t hidden) {
  models::MlpSpec s = models::MlpSpec::critic(in, hidden, models::Activation::kTanh);
  return s;
}

}  // namespace

TEST_CASE("forward: affine identity, exp, leaky relu") {
  Tape tape;
  Var x = tape.constant(row({1.0, 2.0}));
  Matrix eye = Matrix::Identity(2, 2);
  Var y = tape.add(tape.matmul(x, tape.constant(eye)), tape.constant(Matrix::Zero(1, 2)));
  CHECK(y.value()(0, 0) == 1.0);
  CHECK(y.value()(0, 1) == 2.0);

  CHECK(tape.exp(tape.constant_scalar(0.0)).scalar() == 1.0);

  Var l = tape.leaky_relu(tape.constant(row({-1.0, 3.0})), 0.2);
  CHECK(l.value()(0, 0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(l.value()(0, 1) == 3.0);
}

TEST_CASE("forward: shape mismatch and non-finite intermediates are errors") {
  Tape tape;
  Var a = tape.constant(Matrix::Ones(2, 3));
  Var b = tape.constant(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.matmul(a, b), diffmath::ShapeError);
  CHECK_THROWS_AS(tape.add(a, b), diffmath::ShapeError);
  CHECK_THROWS_AS(tape.log(tape.constant_scalar(-1.0)), diffmath::NonFiniteError);
  CHECK_THROWS_AS(tape.exp(tape.constant_scalar(1000.0)), diffmath::NonFiniteError);
}

TEST_CASE("grad: hand-derived examples") {
  {
    Tape tape;
    Var x = tape.leaf(row({3.0}));
    CHECK(tape.gradient(tape.square(x), x).scalar() == 6.0);
  }
  {
    Tape tape;
    Var w = tape.leaf(Matrix::Zero(2, 1));
    Var y = tape.matmul(tape.constant(row({1.0, 2.0})), w);
    const Matrix& g = tape.gradient(tape.sum(y), w).value();
    CHECK(g(0, 0) == 1.0);
    CHECK(g(1, 0) == 2.0);
  }
}

TEST_CASE("grad: non-scalar output and detached parameter are errors") {
  Tape tape;
  Var x = tape.leaf(Matrix::Ones(1, 2));
  Var c = tape.constant(Matrix::Ones(1, 2));
  CHECK_THROWS_AS(tape.gradient(tape.square(x), x), diffmath::ShapeError);
  CHECK_THROWS_AS(tape.gradient(tape.sum(tape.mul(x, c)), c), std::invalid_argument);
}

TEST_CASE("grad: subgradient conventions for clip and min") {
  Tape tape;
  Var x = tape.leaf(row({0.8, 1.2, 0.5, 1.5}));
  Var y = tape.sum(tape.clip(x, 0.8, 1.2));
  const Matrix& g = tape.gradient(y, x).value();
  CHECK(g(0, 0) == 1.0);  // lower boundary passes the gradient
  CHECK(g(0, 1) == 1.0);  // upper boundary passes the gradient
  CHECK(g(0, 2) == 0.0);
  CHECK(g(0, 3) == 0.0);

  Tape t2;
  Var a = t2.leaf(row({2.0}));
  Var b = t2.leaf(row({2.0}));
  Var m = t2.sum(t2.min(a, b));
  const auto gs = t2.gradients(m, std::vector<Var>{a, b});
  CHECK(gs[0].scalar() == 1.0);
  CHECK(gs[1].scalar() == 0.0);
}

TEST_CASE("finite_diff_check: quadratic is exact up to rounding") {
  data::SplitMix64 rng(11);
  const std::vector<double> p = testing::uniform_vector(rng, 6, -2.0, 2.0);
  const Matrix a = testing::uniform_matrix(rng, 6, 6, -1.0, 1.0);
  Matrix sym = a * a.transpose();
  auto loss = [&](Tape& t, Var params) {
    return t.sum(t.mul(t.matmul(params, t.constant(sym)), params));
  };
  const auto report = diffmath::finite_diff_check(loss, p, 1e-5);
  CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("grad: random tanh MLP parameters match finite differences within 1e-6") {
  data::SplitMix64 rng(21);
  const models::MlpSpec spec = tanh_critic(2, 8);
  for (int trial = 0; trial < 10; ++trial) {
    const models::ModelParams params = models::init_params(spec, rng);
    const Matrix x = testing::uniform_matrix(rng, 5, 2, -1.5, 1.5);
    auto loss = [&](Tape& t, Var p) {
      return t.sum(models::mlp_forward(t, spec, p, t.constant(x)));
    };
    const auto report = diffmath::finite_diff_check(loss, params.values, 1e-5);
    INFO("trial " << trial << " worst " << report.worst_index << " analytic " << report.analytic
                  << " numeric " << report.numeric);
    CHECK(report.max_rel_error < 1e-6);
  }
}

TEST_CASE("grad_through_input_grad: linear critic penalty slope") {
  // f(x) = w x in 1-D; penalty (|w| - 1)^2 with derivative 2 (w - 1).
  auto f = [](Tape& t, Var w, Var x) { return t.matmul(x, w); };
  const Matrix x = Matrix::Constant(1, 1, 0.7);
  {
    const std::vector<double> w{2.0};
    auto fw = [&](Tape& t, Var p, Var in) { return f(t, t.slice(p, 0, 1, 1), in); };
    const auto g = diffmath::grad_through_input_grad(fw, w, x, 0.0);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-12));
  }
  {
    const std::vector<double> w{1.0};
    auto fw = [&](Tape& t, Var p, Var in) { return f(t, t.slice(p, 0, 1, 1), in); };
    const auto g = diffmath::grad_through_input_grad(fw, w, x, 0.0);
    CHECK(g[0] == 0.0);
  }
}

TEST_CASE("grad_through_input_grad: zero input gradient without smoothing is degenerate") {
  auto fw = [](Tape& t, Var p, Var in) { return t.matmul(in, t.slice(p, 0, 1, 1)); };
  const std::vector<double> w{0.0};
  const Matrix x = Matrix::Constant(2, 1, 0.3);
  CHECK_THROWS_AS(diffmath::grad_through_input_grad(fw, w, x, 0.0),
                  diffmath::DegenerateGradientError);
  CHECK_NOTHROW(diffmath::grad_through_input_grad(fw, w, x, 1e-12));
}

TEST_CASE("grad_through_input_grad: matches finite differences of the penalty") {
  data::SplitMix64 rng(31);
  const models::MlpSpec spec = tanh_critic(2, 6);
  for (int trial = 0; trial < 10; ++trial) {
    const models::ModelParams params = models::init_params(spec, rng);
    const Matrix x = testing::uniform_matrix(rng, 4, 2, -1.0, 1.0);
    auto f = [&](Tape& t, Var p, Var in) { return models::mlp_forward(t, spec, p, in); };
    const auto analytic = diffmath::grad_through_input_grad(f, params.values, x, 1e-12);
    auto penalty = [&](Tape& t, Var p) {
      Var in = t.leaf(x);
      return diffmath::input_gradient_penalty(
          t, [&](Var v) { return f(t, p, v); }, in, 1e-12);
    };
    const auto report = diffmath::finite_diff_check(penalty, params.values, 1e-5);
    CHECK(report.max_rel_error < 1e-4);
    const auto again = diffmath::analytic_gradient(penalty, params.values);
    for (std::size_t i = 0; i < analytic.size(); ++i) CHECK(analytic[i] == again[i]);
  }
}

TEST_CASE("property: gradient of a sum is the sum of gradients") {
  data::SplitMix64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> p = testing::uniform_vector(rng, 5, -1.0, 1.0);
    const Matrix c = testing::uniform_matrix(rng, 1, 5, -2.0, 2.0);
    auto f1 = [&](Tape& t, Var x) { return t.sum(t.tanh(t.mul(x, t.constant(c)))); };
    auto f2 = [&](Tape& t, Var x) { return t.mean(t.exp(t.scale(t.square(x), -0.5))); };
    auto both = [&](Tape& t, Var x) { return t.add(f1(t, x), f2(t, x)); };
    const auto g1 = diffmath::analytic_gradient(f1, p);
    const auto g2 = diffmath::analytic_gradient(f2, p);
    const auto g = diffmath::analytic_gradient(both, p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(g[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("property: replay reproduces cached values bit-exactly") {
  data::SplitMix64 rng(51);
  const models::MlpSpec spec = models::MlpSpec::critic(2, 8, models::Activation::kLeakyRelu);
  for (int trial = 0; trial < 20; ++trial) {
    const models::ModelParams params = models::init_params(spec, rng);
    const Matrix x = testing::uniform_matrix(rng, 7, 2, -3.0, 3.0);
    Tape tape;
    Var p = tape.row_vector(params.values, true);
    Var in = tape.leaf(x);
    Var out = tape.mean(models::mlp_forward(tape, spec, p, in));
    const Matrix pv = p.value();
    const Matrix replay = tape.replay(std::vector<Matrix>{pv, x}, out);
    CHECK(replay(0, 0) == out.scalar());

    // Different inputs give the value of a freshly built tape.
    const Matrix x2 = testing::uniform_matrix(rng, 7, 2, -3.0, 3.0);
    Tape fresh;
    Var out2 = fresh.mean(models::mlp_forward(fresh, spec, fresh.row_vector(params.values, false),
                                              fresh.constant(x2)));
    CHECK(tape.replay(std::vector<Matrix>{pv, x2}, out)(0, 0) == out2.scalar());
  }
}

TEST_CASE("property: identical tapes give bit-identical gradients") {
  data::SplitMix64 rng(61);
  const models::MlpSpec spec = tanh_critic(2, 8);
  const models::ModelParams params = models::init_params(spec, rng);
  const Matrix x = testing::uniform_matrix(rng, 16, 2, -1.0, 1.0);
  auto f = [&](Tape& t, Var p, Var in) { return models::mlp_forward(t, spec, p, in); };
  const auto a = diffmath::grad_through_input_grad(f, params.values, x);
  const auto b = diffmath::grad_through_input_grad(f, params.values, x);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("property: topological order of tape nodes") {
  Tape tape;
  Var x = tape.leaf(Matrix::Ones(2, 2));
  Var y = tape.tanh(tape.matmul(x, x));
  Var g = tape.gradient(tape.sum(y), x);
  CHECK(x.id() < y.id());
  CHECK(y.id() < g.id());
  CHECK(g.id() < tape.size());
}

TEST_CASE("Grad rejects non-finite entries") {
  CHECK_THROWS_AS(diffmath::Grad(std::vector<double>{1.0, std::nan("")}),
                  diffmath::NonFiniteError);
}
