#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mfrnet/adam.hpp"

using namespace mfrnet;

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
  std::vector<double> params{0.5, -1.25, 3.0};
  std::vector<double> grads{0.0, 0.0, 0.0};
  AdamState<double> state(3);
  adam_step<double>(params, grads, state, 0.1);
  CHECK(params == std::vector<double>{0.5, -1.25, 3.0});
  CHECK(state.t == 1);
}

TEST_CASE("first adam step moves by about lr in the gradient direction") {
  std::vector<double> params{1.0};
  std::vector<double> grads{0.37};
  AdamState<double> state(1);
  const double lr = 1e-3;
  adam_step<double>(params, grads, state, lr);
  // bias-corrected m/sqrt(v) is sign(g) up to epsilon on the first step
  CHECK_THAT(1.0 - params[0], Catch::Matchers::WithinRel(lr, 1e-4));

  std::vector<double> params2{1.0};
  std::vector<double> grads2{-0.002};
  AdamState<double> state2(1);
  adam_step<double>(params2, grads2, state2, lr);
  CHECK_THAT(params2[0] - 1.0, Catch::Matchers::WithinRel(lr, 1e-3));
}

TEST_CASE("three adam steps match a hand-rolled scalar oracle") {
  // Oracle: textbook update sequence computed step by step right here.
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double g[3] = {0.3, -0.7, 0.12};
  double theta = 2.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    m = b1 * m + (1 - b1) * g[t - 1];
    v = b2 * v + (1 - b2) * g[t - 1] * g[t - 1];
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }

  std::vector<double> params{2.0};
  AdamState<double> state(1);
  for (int t = 0; t < 3; ++t) {
    std::vector<double> grads{g[t]};
    adam_step<double>(params, grads, state, lr);
  }
  CHECK_THAT(params[0], Catch::Matchers::WithinAbs(theta, 1e-10));
}

TEST_CASE("adam rejects size mismatches") {
  std::vector<double> params{1.0, 2.0};
  std::vector<double> grads{1.0};
  AdamState<double> state(2);
  REQUIRE_THROWS_AS(adam_step<double>(params, grads, state, 0.1), ShapeError);
}
