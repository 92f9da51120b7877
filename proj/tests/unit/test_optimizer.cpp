#include "doctest.h"

#include <cmath>

#include "cemb/optimizer.hpp"
#include "oracles.hpp"

using namespace cemb;

TEST_CASE("zero learning rate leaves parameters untouched") {
  Rng rng(1);
  const std::vector<std::size_t> widths{3, 4, 2};
  const std::vector<Activation> acts{Activation::relu, Activation::identity};
  auto net = oracle::random_network(rng, widths, acts);
  const auto before = net;
  Adam adam(net);
  const auto cache = forward(net, Vector{1, 2, 3});
  const auto g = backward(net, cache, Vector{1, -1});
  for (int i = 0; i < 5; ++i) adam.step(net, g, 0.0);
  CHECK(net == before);
  CHECK(adam.steps() == 5);
}

TEST_CASE("first Adam step moves each parameter by lr against its gradient sign") {
  RealMatrix w(1, 2, {0.5, -0.5});
  DenseNetwork net({Layer{AffineLayer{w, Vector{0.0}}, Activation::identity}}, 0);
  Adam adam(net);
  Gradients g = Gradients::zeros_like(net);
  g.weights[0](0, 0) = 3.0;
  g.weights[0](0, 1) = -0.01;
  adam.step(net, g, 0.1);
  CHECK(net.layer(0).affine.weights(0, 0) == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(net.layer(0).affine.weights(0, 1) == doctest::Approx(-0.4).epsilon(1e-5));
  CHECK(net.layer(0).affine.bias[0] == 0.0);
}

TEST_CASE("Adam minimises a quadratic") {
  DenseNetwork net({Layer{AffineLayer{RealMatrix(1, 1, {5.0}), Vector{-3.0}}, Activation::identity}}, 0);
  Adam adam(net);
  for (int i = 0; i < 2000; ++i) {
    Gradients g = Gradients::zeros_like(net);
    g.weights[0](0, 0) = 2 * (net.layer(0).affine.weights(0, 0) - 1.0);
    g.bias[0][0] = 2 * (net.layer(0).affine.bias[0] - 2.0);
    adam.step(net, g, 0.01);
  }
  CHECK(net.layer(0).affine.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(net.layer(0).affine.bias[0] == doctest::Approx(2.0).epsilon(1e-3));
}
