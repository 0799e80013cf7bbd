#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "ibex/errors.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"
#include "ibex/piecewise.hpp"
#include "ibex/rng.hpp"
#include "ibex/scenarios.hpp"
#include "ibex/info.hpp"

using namespace ibex;

namespace {

double clip_ramp(double x, double a, double b) {
  return std::min(std::max(x - a, 0.0), b);
}

Network random_smooth_net(Rng& rng) {
  std::size_t in = 1 + rng.index(3);
  std::size_t hidden = 1 + rng.index(4);
  std::size_t out = 1 + rng.index(3);
  ActivationKind kinds[] = {ActivationKind::sigmoid, ActivationKind::tanh,
                            ActivationKind::softplus, ActivationKind::identity};
  auto layer = [&](std::size_t i, std::size_t o, ActivationKind k) {
    LayerParams l;
    l.in = i;
    l.out = o;
    l.weights.resize(i * o);
    l.biases.resize(o);
    for (double& w : l.weights) w = rng.uniform(-1.5, 1.5);
    for (double& b : l.biases) b = rng.uniform(-1.0, 1.0);
    l.activation = {k, 0.0};
    return l;
  };
  return Network({layer(in, hidden, kinds[rng.index(4)]),
                  layer(hidden, out, kinds[rng.index(4)])});
}

}  // namespace

TEST_CASE("fig1 network forward values") {
  Network net = fig1_network(1.0, 0.25);
  CHECK(output(net, std::vector<double>{1.1})[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(output(net, std::vector<double>{0.5})[0] == doctest::Approx(0.0));
  CHECK(output(net, std::vector<double>{3.0})[0] == doctest::Approx(0.25));
}

TEST_CASE("clip identity holds on a dense grid") {
  Network net = fig1_network(0.7, 0.25);
  for (int i = 0; i <= 2000; ++i) {
    double x = -1.0 + 7.0 * i / 2000.0;
    double expected = clip_ramp(x, 0.7, 0.25);
    CHECK(std::abs(output(net, std::vector<double>{x})[0] - expected) <= 1e-12);
  }
}

TEST_CASE("scalar profile of the fig1 network has three segments") {
  Network net = fig1_network(1.0, 0.25);
  PiecewiseLinear f = as_scalar_pwl(net, 0, {0.0, 5.0});
  REQUIRE(f.segment_count() == 3);
  CHECK(f.breakpoints()[0] == doctest::Approx(1.0));
  CHECK(f.breakpoints()[1] == doctest::Approx(1.25));
  CHECK(f.segments()[0].slope == doctest::Approx(0.0));
  CHECK(f.segments()[1].slope == doctest::Approx(1.0));
  CHECK(f.segments()[2].slope == doctest::Approx(0.0));
  CHECK(f.segments()[2].intercept == doctest::Approx(0.25));
}

TEST_CASE("identity single layer reduces to a single unit-slope segment") {
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {1.0};
  l.biases = {0.0};
  l.activation = Activation::identity();
  Network net({l});
  PiecewiseLinear f = as_scalar_pwl(net, 0, {-2.0, 2.0});
  REQUIRE(f.segment_count() == 1);
  CHECK(f.segments()[0].slope == doctest::Approx(1.0));
  CHECK(f.segments()[0].intercept == doctest::Approx(0.0));
}

TEST_CASE("step neuron gives two constant segments with the jump value") {
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {1.0};
  l.biases = {-2.0};
  l.activation = Activation::step();
  Network net({l});
  PiecewiseLinear f = as_scalar_pwl(net, 0, {0.0, 5.0});
  REQUIRE(f.segment_count() == 2);
  CHECK(f.breakpoints()[0] == doctest::Approx(2.0));
  // Dense-grid evaluation oracle against the raw forward pass.
  for (int i = 0; i <= 1000; ++i) {
    double x = 5.0 * i / 1000.0;
    CHECK(f(x) == doctest::Approx(output(net, std::vector<double>{x})[0]));
  }
  CHECK(f(2.0) == doctest::Approx(1.0));  // step fires exactly at the threshold
}

TEST_CASE("profiles agree with forward on a thousand grid points") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    double a = rng.uniform(0.0, 4.0);
    double b = rng.uniform(0.05, 1.0);
    Network net = fig1_network(a, b);
    PiecewiseLinear f = as_scalar_pwl(net, 0, {-1.0, 6.0});
    for (int i = 0; i <= 1000; ++i) {
      double x = -1.0 + 7.0 * i / 1000.0;
      CHECK(std::abs(f(x) - output(net, std::vector<double>{x})[0]) <= 1e-12);
    }
  }
}

TEST_CASE("profile extraction rejects unsupported networks") {
  LayerParams l;
  l.in = 2;
  l.out = 1;
  l.weights = {1.0, 0.5};
  l.biases = {0.0};
  l.activation = Activation::relu();
  Network mixed({l});
  CHECK_THROWS_AS(as_scalar_pwl(mixed, 0, {0.0, 1.0}), MultivariateDependence);

  LayerParams smooth = l;
  smooth.weights = {1.0, 0.0};
  smooth.activation = Activation::sigmoid();
  CHECK_THROWS_AS(as_scalar_pwl(Network({smooth}), 0, {0.0, 1.0}), SmoothActivation);

  LayerParams noisy = l;
  noisy.weights = {1.0, 0.0};
  noisy.noise = NoiseSpec::uniform(0.1);
  CHECK_THROWS_AS(as_scalar_pwl(Network({noisy}), 0, {0.0, 1.0}), StochasticLayer);
}

TEST_CASE("direction reduction recovers a sum readout") {
  Fig3Scenario fig = fig3_scenario();
  ScalarEncoder enc = reduce_to_scalar(fig.net_sum, {-1.0, 3.0});
  CHECK(enc.direction[0] == doctest::Approx(1.0));
  CHECK(enc.direction[1] == doctest::Approx(1.0));
  CHECK(enc(std::vector<double>{0.3, 0.4}) == doctest::Approx(0.7));
  CHECK(enc(std::vector<double>{-0.5, 0.2}) == doctest::Approx(0.0));
}

TEST_CASE("pushforward of discrete points through the fig1 ramp") {
  Scenario sc = fig1_scenario(Fig1Kind::discrete);
  Network net = fig1_network(1.5, 0.25);
  PiecewiseLinear f = as_scalar_pwl(net, 0, {0.0, 5.0});
  HybridMeasure out = pushforward(f, marginal(sc.joint));
  REQUIRE(out.points().size() == 3);
  CHECK(out.points()[0].location[0] == doctest::Approx(0.0));
  CHECK(out.points()[0].mass == doctest::Approx(0.2));
  CHECK(out.points()[1].location[0] == doctest::Approx(0.2));
  CHECK(out.points()[1].mass == doctest::Approx(0.4));
  CHECK(out.points()[2].location[0] == doctest::Approx(0.25));
  CHECK(out.points()[2].mass == doctest::Approx(0.4));
  // Matching entropy for this merge pattern.
  std::vector<double> probs{0.2, 0.4, 0.4};
  CHECK(entropy_bits(probs) == doctest::Approx(1.521928).epsilon(1e-6));
}

TEST_CASE("pushforward through the identity returns the measure") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  HybridMeasure mu = marginal(sc.joint);
  PiecewiseLinear id = PiecewiseLinear::identity(-1.0, 6.0);
  HybridMeasure out = pushforward(id, mu);
  REQUIRE(out.pieces().size() == mu.pieces().size());
  for (std::size_t i = 0; i < out.pieces().size(); ++i) {
    CHECK(out.pieces()[i].box[0].lo ==
          doctest::Approx(mu.pieces()[i].box[0].lo).epsilon(1e-12));
    CHECK(out.pieces()[i].mass == doctest::Approx(mu.pieces()[i].mass).epsilon(1e-12));
  }
}

TEST_CASE("pushforward of the continuous scenario collapses off the ramp") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  Network net = fig1_network(1.1, 0.25);
  PiecewiseLinear f = as_scalar_pwl(net, 0, {-0.5, 5.5});
  HybridMeasure out = pushforward(f, marginal(sc.joint));
  CHECK_FALSE(out.has_continuous_part());
  REQUIRE(out.points().size() == 2);
  CHECK(out.points()[0].location[0] == doctest::Approx(0.0));
  CHECK(out.points()[0].mass == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.points()[1].location[0] == doctest::Approx(0.25));
  CHECK(out.points()[1].mass == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pushforward conserves mass and stays non-negative") {
  Rng rng(5);
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  HybridMeasure mu = marginal(sc.joint);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = fig1_network(rng.uniform(0.0, 5.0), rng.uniform(0.05, 0.5));
    PiecewiseLinear f = as_scalar_pwl(net, 0, {-0.5, 5.5});
    HybridMeasure out = pushforward(f, mu);
    CHECK(out.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (const PointMass& p : out.points()) CHECK(p.mass > 0.0);
    for (const UniformPiece& q : out.pieces()) CHECK(q.mass > 0.0);
  }
}

TEST_CASE("strictly increasing profiles map pieces to pieces only") {
  std::vector<double> xs{0.0, 1.0, 2.0, 5.0};
  std::vector<double> vs{0.0, 0.5, 2.5, 4.0};
  PiecewiseLinear f = PiecewiseLinear::from_knots(xs, vs);
  REQUIRE(f.is_strictly_increasing());
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  HybridMeasure out = pushforward(f, marginal(sc.joint));
  CHECK(out.points().empty());
  CHECK(out.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("composition with a monotone map matches pointwise composition") {
  Network net = fig1_network(1.0, 0.25);
  PiecewiseLinear f = as_scalar_pwl(net, 0, {0.0, 5.0});
  std::vector<double> xs{-0.5, 0.1, 0.3};
  std::vector<double> vs{0.0, 0.35, 0.9};
  PiecewiseLinear g = PiecewiseLinear::from_knots(xs, vs);
  PiecewiseLinear gf = g.compose_after(f);
  for (int i = 0; i <= 500; ++i) {
    double x = 5.0 * i / 500.0;
    CHECK(gf(x) == doctest::Approx(g(f(x))).epsilon(1e-12));
  }
}

TEST_CASE("gradient of a linear neuron") {
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {2.0};
  l.biases = {0.0};
  l.activation = Activation::identity();
  Network net({l});
  std::vector<double> g =
      grad_params(net, std::vector<double>{3.0}, std::vector<double>{1.0});
  REQUIRE(g.size() == 2);
  CHECK(g[0] == doctest::Approx(3.0));  // dW
  CHECK(g[1] == doctest::Approx(1.0));  // db
}

TEST_CASE("gradient of a sigmoid neuron at zero input") {
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {0.0};
  l.biases = {0.0};
  l.activation = Activation::sigmoid();
  Network net({l});
  std::vector<double> g =
      grad_params(net, std::vector<double>{1.0}, std::vector<double>{1.0});
  CHECK(g[0] == doctest::Approx(0.25));
  CHECK(g[1] == doctest::Approx(0.25));
}

TEST_CASE("analytic gradients match central differences on smooth nets") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = random_smooth_net(rng);
    std::vector<double> x(net.input_width());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<double> upstream(net.output_width());
    for (double& v : upstream) v = rng.uniform(-1.0, 1.0);
    std::vector<double> analytic = grad_params(net, x, upstream);
    const double eps = 1e-5;
    Network probe = net;
    for (std::size_t k = 0; k < net.parameter_count(); ++k) {
      double theta = net.get_parameter(k);
      probe.set_parameter(k, theta + eps);
      std::vector<double> up = output(probe, x);
      probe.set_parameter(k, theta - eps);
      std::vector<double> down = output(probe, x);
      probe.set_parameter(k, theta);
      double fd = 0.0;
      for (std::size_t j = 0; j < up.size(); ++j) {
        fd += upstream[j] * (up[j] - down[j]);
      }
      fd /= 2.0 * eps;
      CHECK(std::abs(analytic[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("gradients through step activations are refused") {
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {1.0};
  l.biases = {0.0};
  l.activation = Activation::step();
  Network net({l});
  CHECK_THROWS_AS(
      grad_params(net, std::vector<double>{1.0}, std::vector<double>{1.0}),
      NonDifferentiable);
}

TEST_CASE("stochastic forward is seed-deterministic and unaffected elsewhere") {
  LayerParams l;
  l.in = 1;
  l.out = 2;
  l.weights = {1.0, 1.0};
  l.biases = {0.0, 0.0};
  l.activation = Activation::identity();
  l.noise = NoiseSpec::uniform(0.2);
  LayerParams head;
  head.in = 2;
  head.out = 1;
  head.weights = {1.0, 1.0};
  head.biases = {0.0};
  head.activation = Activation::identity();
  Network net({l, head});
  CHECK_THROWS_AS(output(net, std::vector<double>{1.0}), std::invalid_argument);
  double a = output(net, std::vector<double>{1.0}, 4)[0];
  double b = output(net, std::vector<double>{1.0}, 4)[0];
  double c = output(net, std::vector<double>{1.0}, 5)[0];
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("pathwise gradients with realized noise match the deterministic shift") {
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {1.5};
  l.biases = {0.2};
  l.activation = Activation::identity();
  l.noise = NoiseSpec::gaussian(0.3);
  Network net({l});
  // Additive noise leaves d(output)/d(params) unchanged.
  std::vector<double> g =
      grad_params(net, std::vector<double>{2.0}, std::vector<double>{1.0}, 9);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(1.0));
}

TEST_CASE("network serialization round trips at full precision") {
  Network net = fig1_network(1.2345678901234567, 0.25);
  std::string text = serialize_network(net);
  std::istringstream in(text);
  Network back = parse_network(in);
  REQUIRE(back.depth() == net.depth());
  for (std::size_t k = 0; k < net.parameter_count(); ++k) {
    CHECK(back.get_parameter(k) == net.get_parameter(k));
  }
  std::istringstream junk("layer bogus none 0 1 1 1 0\n");
  CHECK_THROWS(parse_network(junk));
}
