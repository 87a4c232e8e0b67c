#include <doctest.h>

#include <cmath>
#include <vector>

#include "fairinfl/ndcore.hpp"
#include "fairinfl/rng.hpp"
#include "helpers.hpp"

using namespace fairinfl;

TEST_CASE("zero network outputs zero, bias gradient is one") {
  MLPParams p;
  p.input_dim = 3;
  p.hidden_dim = 4;
  p.w1.assign(12, 0.0);
  p.b1.assign(4, 0.0);
  p.w2.assign(4, 0.0);
  const ModelSnapshot net = ModelSnapshot::mlp(p);
  const std::vector<double> x = {1.0, -2.0, 0.5};
  CHECK(forward(net, x) == 0.0);
  const FlatGrad g = output_gradient(net, x);
  CHECK(g.values.size() == 21);
  CHECK(g.values.back() == 1.0);  // output bias
}

TEST_CASE("hand-computed 1x1 network with active and inactive units") {
  MLPParams p;
  p.input_dim = 1;
  p.hidden_dim = 1;
  p.w1 = {2.0};
  p.b1 = {-1.0};
  p.w2 = {3.0};
  p.b2 = 0.5;
  const ModelSnapshot net = ModelSnapshot::mlp(p);

  // x = 1: preactivation 1, active. f = 3*1 + 0.5.
  std::vector<double> x = {1.0};
  CHECK(forward(net, x) == doctest::Approx(3.5).epsilon(1e-15));
  FlatGrad g = output_gradient(net, x);
  CHECK(g.values[0] == doctest::Approx(3.0));  // dW1 = w2 * x
  CHECK(g.values[1] == doctest::Approx(3.0));  // db1 = w2
  CHECK(g.values[2] == doctest::Approx(1.0));  // dw2 = relu(pre)
  CHECK(g.values[3] == doctest::Approx(1.0));  // db2

  // x = 0: preactivation -1, inactive. Only the output bias survives.
  x = {0.0};
  CHECK(forward(net, x) == doctest::Approx(0.5).epsilon(1e-15));
  g = output_gradient(net, x);
  CHECK(g.values[0] == 0.0);
  CHECK(g.values[1] == 0.0);
  CHECK(g.values[2] == 0.0);
  CHECK(g.values[3] == 1.0);

  // x = 0.5: preactivation exactly 0; the subgradient there is 0.
  x = {0.5};
  g = output_gradient(net, x);
  CHECK(g.values[0] == 0.0);
  CHECK(g.values[1] == 0.0);
  CHECK(g.values[2] == 0.0);
}

TEST_CASE("output scales linearly in the second layer") {
  const ModelSnapshot net = testutil::random_mlp(4, 6, 11);
  const std::vector<double> x = {0.3, -1.2, 0.7, 2.0};
  const double f = forward(net, x);
  MLPParams p = net.mlp_params();
  for (double& w : p.w2) w *= 2.5;
  p.b2 *= 2.5;
  CHECK(forward(ModelSnapshot::mlp(p), x) == doctest::Approx(2.5 * f).epsilon(1e-14));
}

TEST_CASE("forward is a pure function of snapshot and input") {
  const ModelSnapshot net = testutil::random_mlp(5, 7, 3);
  const std::vector<double> x = {1.0, 2.0, -0.5, 0.0, 3.0};
  CHECK(forward(net, x) == forward(net, x));
}

TEST_CASE("flat parameter round trip preserves the model") {
  const ModelSnapshot net = testutil::random_mlp(3, 5, 21);
  CHECK(net.param_count() == 3 * 5 + 2 * 5 + 1);
  const std::vector<double> flat = net.flat_params();
  CHECK(flat.size() == static_cast<std::size_t>(net.param_count()));
  const ModelSnapshot back = net.with_flat_params(flat);
  const std::vector<double> x = {0.1, -0.9, 1.7};
  CHECK(forward(back, x) == forward(net, x));
}

TEST_CASE("analytic output gradient matches central differences") {
  Rng rng(99);
  int checked = 0;
  for (int c = 0; c < 100; ++c) {
    const int d = 1 + static_cast<int>(rng.below(5));
    const int h = 1 + static_cast<int>(rng.below(6));
    const ModelSnapshot net = testutil::random_mlp(d, h, rng.next_u64());
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const FlatGrad g = output_gradient(net, x);
    for (int q = 0; q < net.param_count(); ++q) {
      const double fd = testutil::fd_output_gradient(net, x, q, 1e-4);
      const double scale = std::max({std::abs(fd), std::abs(g.values[q]), 1.0});
      CHECK(std::abs(g.values[q] - fd) / scale < 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("affine model forward and gradient") {
  AffineParams p;
  p.w = {2.0, -1.0};
  p.b = 0.25;
  const ModelSnapshot net = ModelSnapshot::affine(p);
  const std::vector<double> x = {3.0, 4.0};
  CHECK(forward(net, x) == doctest::Approx(2.0 * 3.0 - 4.0 + 0.25).epsilon(1e-15));
  const FlatGrad g = output_gradient(net, x);
  REQUIRE(g.values.size() == 3);
  CHECK(g.values[0] == 3.0);
  CHECK(g.values[1] == 4.0);
  CHECK(g.values[2] == 1.0);
}

TEST_CASE("logistic loss values and limits") {
  CHECK(logistic_loss(0.0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(logistic_loss(0.0, -1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(logistic_loss(-1.5, 1) == doctest::Approx(std::log1p(std::exp(1.5))).epsilon(1e-15));
  CHECK(logistic_loss(1.5, -1) == doctest::Approx(std::log1p(std::exp(1.5))).epsilon(1e-15));
  // Extreme margins neither overflow nor go negative.
  CHECK(logistic_loss(-800.0, 1) == doctest::Approx(800.0).epsilon(1e-12));
  CHECK(logistic_loss(800.0, 1) >= 0.0);
  CHECK(logistic_loss(800.0, 1) < 1e-300);
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    CHECK(logistic_loss(rng.uniform(-50.0, 50.0), rng.uniform() < 0.5 ? -1 : 1) >= 0.0);
  }
}

TEST_CASE("loss derivative: value, sign and finite-difference agreement") {
  CHECK(loss_score_derivative(0.0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(loss_score_derivative(0.0, -1) == doctest::Approx(0.5).epsilon(1e-15));
  Rng rng(17);
  for (int k = 0; k < 200; ++k) {
    const double w = rng.uniform(-20.0, 20.0);
    const int y = rng.uniform() < 0.5 ? -1 : 1;
    const double d = loss_score_derivative(w, y);
    CHECK((y == 1 ? d <= 0.0 : d >= 0.0));
    const double fd = (logistic_loss(w + 1e-6, y) - logistic_loss(w - 1e-6, y)) / 2e-6;
    CHECK(std::abs(d - fd) < 1e-6);
  }
  // Saturated but finite at huge margins.
  CHECK(loss_score_derivative(900.0, 1) == 0.0);
  CHECK(loss_score_derivative(-900.0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
}
