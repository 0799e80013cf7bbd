#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "ibex/errors.hpp"
#include "ibex/info.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"
#include "ibex/rng.hpp"
#include "ibex/scenarios.hpp"

using namespace ibex;

namespace {

ScalarPmf make_pmf(std::vector<std::pair<double, double>> atoms) {
  std::map<double, double> m(atoms.begin(), atoms.end());
  return ScalarPmf(std::move(m));
}

}  // namespace

TEST_CASE("entropy reference values") {
  std::vector<double> a{0.2, 0.8};
  CHECK(entropy_bits(a) == doctest::Approx(0.721928).epsilon(1e-6));
  std::vector<double> b{1.0};
  CHECK(entropy_bits(b) == doctest::Approx(0.0));
  std::vector<double> c{0.2, 0.4, 0.4};
  CHECK(entropy_bits(c) == doctest::Approx(1.521928).epsilon(1e-6));
}

TEST_CASE("renyi entropy of second order") {
  std::vector<double> u{0.25, 0.25, 0.25, 0.25};
  CHECK(renyi2_bits(u) == doctest::Approx(2.0));
  std::vector<double> one{1.0};
  CHECK(renyi2_bits(one) == doctest::Approx(0.0));
  std::vector<double> p{0.2, 0.4, 0.3, 0.1};
  // Direct formula oracle.
  double collision = 0.2 * 0.2 + 0.4 * 0.4 + 0.3 * 0.3 + 0.1 * 0.1;
  CHECK(renyi2_bits(p) == doctest::Approx(-std::log2(collision)).epsilon(1e-12));
  CHECK(renyi2_bits(p) == doctest::Approx(1.736966).epsilon(1e-5));
}

TEST_CASE("renyi2 never exceeds shannon and ties only when uniform") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.index(6);
    std::vector<double> p(n);
    double total = 0.0;
    for (double& v : p) {
      v = rng.uniform(0.01, 1.0);
      total += v;
    }
    for (double& v : p) v /= total;
    double h = entropy_bits(p);
    double h2 = renyi2_bits(p);
    CHECK(h2 <= h + 1e-12);
    double spread = 0.0;
    for (double v : p) spread = std::max(spread, std::abs(v - 1.0 / n));
    if (spread > 1e-3) CHECK(h2 < h - 1e-9);
  }
  std::vector<double> uniform(5, 0.2);
  CHECK(renyi2_bits(uniform) == doctest::Approx(entropy_bits(uniform)).epsilon(1e-12));
}

TEST_CASE("quantizer puts a point mass in its cube") {
  HybridMeasure mu({PointMass{{0.37}, 1.0}}, {});
  CubePmf pmf = quantize_measure(mu, QuantizerSpec{10, {}});
  REQUIRE(pmf.atoms().size() == 1);
  CHECK(pmf.atoms()[0].first[0] == 3);
  CHECK(pmf.atoms()[0].second == doctest::Approx(1.0));
}

TEST_CASE("quantizer splits a uniform interval evenly") {
  HybridMeasure mu({}, {UniformPiece{{{0.0, 1.0}}, 1.0}});
  CubePmf pmf = quantize_measure(mu, QuantizerSpec{4, {}});
  REQUIRE(pmf.atoms().size() == 4);
  for (const auto& [cube, p] : pmf.atoms()) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("quantizer masses match a direct interval-intersection oracle") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  HybridMeasure mu = marginal(sc.joint);
  const std::int64_t m = 2;
  CubePmf pmf = quantize_measure(mu, QuantizerSpec{m, {}});
  // Oracle: intersect every piece with every half-open cell directly.
  std::map<std::int64_t, double> expected;
  for (const UniformPiece& q : mu.pieces()) {
    double lo = q.box[0].lo, hi = q.box[0].hi;
    for (std::int64_t z = static_cast<std::int64_t>(std::floor(lo * m));
         z <= static_cast<std::int64_t>(std::floor(hi * m)); ++z) {
      double cell_lo = static_cast<double>(z) / m;
      double cell_hi = static_cast<double>(z + 1) / m;
      double ov = std::min(hi, cell_hi) - std::max(lo, cell_lo);
      if (ov > 0.0) expected[z] += q.mass * ov / (hi - lo);
    }
  }
  REQUIRE(pmf.atoms().size() == expected.size());
  for (const auto& [cube, p] : pmf.atoms()) {
    CHECK(p == doctest::Approx(expected.at(cube[0])).epsilon(1e-12));
  }
  double total = 0.0;
  for (const auto& [cube, p] : pmf.atoms()) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("refining the quantizer never loses entropy") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  HybridMeasure mu = marginal(sc.joint);
  double prev = -1.0;
  for (std::int64_t m : {2, 4, 8, 16, 32}) {
    double h = quantize_measure(mu, QuantizerSpec{m, {}}).entropy();
    CHECK(h >= prev - 1e-12);
    prev = h;
  }
}

TEST_CASE("representation MI is finite on discrete input") {
  Scenario sc = fig1_scenario(Fig1Kind::discrete);
  Network net = fig1_network(2.0, 0.25);
  PiecewiseLinear f = as_scalar_pwl(net, 0, {-0.5, 5.5});
  InfoValue v = mi_input_representation(marginal(sc.joint), f);
  REQUIRE_FALSE(v.is_infinite());
  CHECK(v.bits() == doctest::Approx(0.970951).epsilon(1e-6));
}

TEST_CASE("representation MI goes infinite when the ramp cuts a piece") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  Network net = fig1_network(2.0, 0.25);
  PiecewiseLinear f = as_scalar_pwl(net, 0, {-0.5, 5.5});
  InfoValue v = mi_input_representation(marginal(sc.joint), f);
  CHECK(v.is_infinite());
  CHECK(v.to_csv() == "inf");
}

TEST_CASE("infinite exactly when the open ramp meets a piece interior") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  HybridMeasure mu = marginal(sc.joint);
  const double b = 0.25;
  for (int i = 0; i <= 100; ++i) {
    double a = 0.05 * i;
    Network net = fig1_network(a, b);
    PiecewiseLinear f = as_scalar_pwl(net, 0, {-0.5, 5.5});
    bool infinite = mi_input_representation(mu, f).is_infinite();
    bool geometric = false;
    for (const UniformPiece& q : mu.pieces()) {
      double lo = std::max(q.box[0].lo, a);
      double hi = std::min(q.box[0].hi, a + b);
      if (hi - lo > 1e-9) geometric = true;
    }
    CHECK(infinite == geometric);
  }
}

TEST_CASE("constant representation carries no information") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  PiecewiseLinear f = PiecewiseLinear::constant(-1.0, 6.0, 3.0);
  InfoValue v = mi_input_representation(marginal(sc.joint), f);
  REQUIRE_FALSE(v.is_infinite());
  CHECK(v.bits() == doctest::Approx(0.0));
}

TEST_CASE("discrete label-representation MI basics") {
  ScalarPmf same = make_pmf({{0.0, 0.5}, {1.0, 0.5}});
  std::vector<ClassPmf<double>> indep{{0, 0.5, same}, {1, 0.5, same}};
  CHECK(mi_discrete<double>(indep) == doctest::Approx(0.0));

  std::vector<ClassPmf<double>> ident{{0, 0.5, make_pmf({{0.0, 1.0}})},
                                      {1, 0.5, make_pmf({{1.0, 1.0}})}};
  CHECK(mi_discrete<double>(ident) == doctest::Approx(1.0));
}

TEST_CASE("discrete MI is bounded and tight only for disjoint supports") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    double prior = rng.uniform(0.2, 0.8);
    bool disjoint = trial % 2 == 0;
    ScalarPmf p0 = make_pmf({{0.0, 0.6}, {1.0, 0.4}});
    ScalarPmf p1 = disjoint ? make_pmf({{2.0, 0.3}, {3.0, 0.7}})
                            : make_pmf({{1.0, 0.3}, {2.0, 0.7}});
    std::vector<ClassPmf<double>> classes{{0, prior, p0}, {1, 1.0 - prior, p1}};
    double mi = mi_discrete<double>(classes);
    std::vector<double> priors{prior, 1.0 - prior};
    double hy = entropy_bits(priors);
    CHECK(mi <= hy + 1e-12);
    if (disjoint) {
      CHECK(mi == doctest::Approx(hy).epsilon(1e-12));
    } else {
      CHECK(mi < hy - 1e-6);
    }
  }
}

TEST_CASE("relabeling atoms by an injection leaves MI unchanged") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto random_pmf = [&] {
      std::map<double, double> atoms;
      double total = 0.0;
      std::size_t n = 2 + rng.index(3);
      for (std::size_t k = 0; k < n; ++k) {
        double w = rng.uniform(0.1, 1.0);
        atoms[static_cast<double>(k)] = w;
        total += w;
      }
      for (auto& [k, v] : atoms) v /= total;
      return ScalarPmf(std::move(atoms));
    };
    double prior = rng.uniform(0.2, 0.8);
    ScalarPmf a = random_pmf(), b = random_pmf();
    std::vector<ClassPmf<double>> before{{0, prior, a}, {1, 1.0 - prior, b}};
    // Injection: k -> 100 - 7k, order-reversing.
    auto relabel = [](const ScalarPmf& p) {
      std::map<double, double> atoms;
      for (const auto& [k, v] : p.atoms()) atoms[100.0 - 7.0 * k] = v;
      return ScalarPmf(std::move(atoms));
    };
    std::vector<ClassPmf<double>> after{{0, prior, relabel(a)},
                                        {1, 1.0 - prior, relabel(b)}};
    CHECK(mi_discrete<double>(before) ==
          doctest::Approx(mi_discrete<double>(after)).epsilon(1e-12));
  }
}

TEST_CASE("coarsening the representation never gains information") {
  Rng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    auto random_pmf = [&](std::size_t support) {
      std::map<double, double> atoms;
      double total = 0.0;
      for (std::size_t k = 0; k < support; ++k) {
        double w = rng.uniform(0.05, 1.0);
        atoms[static_cast<double>(k)] = w;
        total += w;
      }
      for (auto& [k, v] : atoms) v /= total;
      return ScalarPmf(std::move(atoms));
    };
    const std::size_t support = 5;
    double prior = rng.uniform(0.2, 0.8);
    ScalarPmf a = random_pmf(support), b = random_pmf(support);
    // Random surjection onto a smaller alphabet.
    std::vector<double> target(support);
    for (double& t : target) t = static_cast<double>(rng.index(3));
    auto coarsen = [&](const ScalarPmf& p) {
      std::map<double, double> atoms;
      for (const auto& [k, v] : p.atoms()) {
        atoms[target[static_cast<std::size_t>(k)]] += v;
      }
      return ScalarPmf(std::move(atoms));
    };
    std::vector<ClassPmf<double>> fine{{0, prior, a}, {1, 1.0 - prior, b}};
    std::vector<ClassPmf<double>> coarse{{0, prior, coarsen(a)},
                                         {1, 1.0 - prior, coarsen(b)}};
    CHECK(mi_discrete<double>(coarse) <= mi_discrete<double>(fine) + 1e-12);
  }
}

TEST_CASE("mixed MI separates singular parts and overlapping densities") {
  // Atom against a density: mutually singular, so the label is decidable.
  HybridMeasure atom({PointMass{{0.5}, 1.0}}, {});
  HybridMeasure unif({}, {UniformPiece{{{0.0, 1.0}}, 1.0}});
  std::vector<double> priors{0.5, 0.5};
  std::vector<HybridMeasure> reps{atom, unif};
  CHECK(mi_label_mixed(priors, reps) == doctest::Approx(1.0).epsilon(1e-12));

  // Half-overlapping uniform classes: I = H(Y) - P(overlap) = 0.5 bits.
  HybridMeasure left({}, {UniformPiece{{{0.0, 1.0}}, 1.0}});
  HybridMeasure right({}, {UniformPiece{{{0.5, 1.5}}, 1.0}});
  std::vector<HybridMeasure> reps2{left, right};
  CHECK(mi_label_mixed(priors, reps2) == doctest::Approx(0.5).epsilon(1e-12));

  // Identical class representations carry nothing.
  std::vector<HybridMeasure> reps3{unif, unif};
  CHECK(mi_label_mixed(priors, reps3) == doctest::Approx(0.0));
}

TEST_CASE("dimension slopes of the planar uniform are exactly two") {
  HybridMeasure mu({}, {UniformPiece{{{0.0, 1.0}, {0.0, 1.0}}, 1.0}});
  std::vector<std::int64_t> ms{2, 4, 8, 16, 32, 64};
  for (const DimensionRow& row : dimension_slopes(mu, ms)) {
    CHECK(row.shannon_slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(row.renyi2_slope == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("dimension slopes of a point mass are zero") {
  HybridMeasure mu({PointMass{{0.3, 0.7}, 1.0}}, {});
  std::vector<std::int64_t> ms{2, 16, 128};
  for (const DimensionRow& row : dimension_slopes(mu, ms)) {
    CHECK(row.shannon_slope == doctest::Approx(0.0));
    CHECK(row.renyi2_slope == doctest::Approx(0.0));
  }
}

TEST_CASE("leaky profile keeps the slope near one at fine resolution") {
  // One leaky unit with its kink near the edge of [0,1].
  LayerParams l;
  l.in = 1;
  l.out = 1;
  l.weights = {1.0};
  l.biases = {-0.1};
  l.activation = Activation::leaky_relu(0.1);
  Network net({l});
  PiecewiseLinear f = as_scalar_pwl(net, 0, {0.0, 1.0});
  HybridMeasure mu({}, {UniformPiece{{{0.0, 1.0}}, 1.0}});
  HybridMeasure image = pushforward(f, mu);
  std::vector<std::int64_t> ms{1024};
  std::vector<DimensionRow> rows = dimension_slopes(image, ms);
  CHECK(std::abs(rows[0].renyi2_slope - 1.0) < 0.1);

  // Independent oracle: collision mass from the known two-band density,
  // integrated cell by cell.
  double h2_expected;
  {
    const std::int64_t m = 1024;
    std::map<std::int64_t, double> cells;
    auto add_band = [&](double lo, double hi, double density) {
      for (std::int64_t z = static_cast<std::int64_t>(std::floor(lo * m));
           z <= static_cast<std::int64_t>(std::floor(hi * m)); ++z) {
        double ov = std::min(hi, static_cast<double>(z + 1) / m) -
                    std::max(lo, static_cast<double>(z) / m);
        if (ov > 0.0) cells[z] += density * ov;
      }
    };
    add_band(-0.01, 0.0, 10.0);  // compressed leaky branch
    add_band(0.0, 0.9, 1.0);     // pass-through branch
    double collision = 0.0;
    for (const auto& [z, p] : cells) collision += p * p;
    h2_expected = -std::log2(collision);
  }
  CHECK(rows[0].renyi2_slope ==
        doctest::Approx(h2_expected / std::log2(1024.0)).epsilon(1e-9));
}

TEST_CASE("joint quantized MI of the identity map is the grid entropy") {
  HybridMeasure mu({}, {UniformPiece{{{0.0, 1.0}}, 1.0}});
  PiecewiseLinear id = PiecewiseLinear::identity(0.0, 1.0);
  for (std::int64_t m : {4, 16, 64}) {
    double mi = mi_quantized_joint(mu, id, QuantizerSpec{m, {}}, QuantizerSpec{m, {}});
    CHECK(mi == doctest::Approx(std::log2(static_cast<double>(m))).epsilon(1e-9));
  }
}

TEST_CASE("info values format to six digits or the inf literal") {
  CHECK(InfoValue::finite(0.721928123).to_csv() == "0.721928");
  CHECK(InfoValue::finite(0.0).to_csv() == "0.000000");
  CHECK(InfoValue::infinite().to_csv() == "inf");
  CHECK_THROWS_AS(InfoValue::infinite().bits(), std::domain_error);
  CHECK_THROWS_AS(InfoValue::finite(-0.5), std::invalid_argument);
}
