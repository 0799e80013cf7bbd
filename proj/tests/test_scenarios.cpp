#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "ibex/cost.hpp"
#include "ibex/info.hpp"
#include "ibex/measure.hpp"
#include "ibex/scenarios.hpp"

using namespace ibex;

TEST_CASE("fig1 scenario marginals carry the documented entropies") {
  Scenario discrete = fig1_scenario(Fig1Kind::discrete);
  InfoValue h = representation_entropy(marginal(discrete.joint));
  // H(0.2, 0.4, 0.3, 0.1) computed directly.
  double expected = -(0.2 * std::log2(0.2) + 0.4 * std::log2(0.4) +
                      0.3 * std::log2(0.3) + 0.1 * std::log2(0.1));
  CHECK(h.bits() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(h.bits() == doctest::Approx(1.846439).epsilon(1e-6));

  Scenario dataset = fig1_scenario(Fig1Kind::dataset);
  CHECK(representation_entropy(marginal(dataset.joint)).bits() ==
        doctest::Approx(4.169925).epsilon(1e-6));

  Scenario continuous = fig1_scenario(Fig1Kind::continuous);
  CHECK(marginal(continuous.joint).total_mass() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fig1 network clip behaviour at the caption parameters") {
  CHECK(output(fig1_network(1.0, 0.25), std::vector<double>{1.1})[0] ==
        doctest::Approx(0.1).epsilon(1e-12));
  CHECK(output(fig1_network(0.0, 0.25), std::vector<double>{-1.0})[0] ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(fig1_network(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("grid values are inclusive and evenly spaced") {
  GridSpec grid{0.0, 5.0, 0.05};
  std::vector<double> v = grid.values();
  REQUIRE(v.size() == 101);
  CHECK(v.front() == doctest::Approx(0.0));
  CHECK(v.back() == doctest::Approx(5.0));
}

TEST_CASE("sweep spot values against the plotted plateaus") {
  Scenario sc = fig1_scenario(Fig1Kind::discrete);
  CostSpec spec;
  SweepResult result = sweep(
      sc, [](double a) { return fig1_network(a, 0.25); }, {0.0, 5.0, 0.05}, spec);
  REQUIRE(result.rows.size() == 101);
  auto at = [&](double a) -> const CostReport& {
    for (const SweepRow& row : result.rows) {
      if (std::abs(row.param - a) < 1e-9) return row.report;
    }
    FAIL("missing grid point");
    return result.rows.front().report;
  };
  CHECK(at(0.0).compression.bits() == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(at(0.5).compression.bits() == doctest::Approx(0.721928).epsilon(1e-6));
  CHECK(at(1.55).compression.bits() == doctest::Approx(1.521928).epsilon(1e-6));
  CHECK(at(2.0).compression.bits() == doctest::Approx(0.970951).epsilon(1e-6));
  CHECK(at(3.0).compression.bits() == doctest::Approx(1.295462).epsilon(1e-6));
  CHECK(at(3.1).compression.bits() == doctest::Approx(0.468996).epsilon(1e-6));
  CHECK(at(4.75).compression.bits() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("dataset sweep reproduces its plotted spot values") {
  Scenario sc = fig1_scenario(Fig1Kind::dataset);
  CostSpec spec;
  SweepResult result = sweep(
      sc, [](double a) { return fig1_network(a, 0.25); }, {0.0, 5.0, 0.05}, spec);
  auto comp = [&](std::size_t i) { return result.rows[i].report.compression.bits(); };
  CHECK(comp(0) == doctest::Approx(0.914183).epsilon(1e-6));    // a = 0
  CHECK(comp(34) == doctest::Approx(1.679429).epsilon(1e-6));   // a = 1.70
  CHECK(comp(42) == doctest::Approx(1.503258).epsilon(1e-6));   // a = 2.10
  for (std::size_t i = 88; i <= 100; ++i) {                     // a >= 4.40
    CHECK(comp(i) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("continuous sweep alternates finite and infinite correctly") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  CostSpec spec;
  SweepResult result = sweep(
      sc, [](double a) { return fig1_network(a, 0.25); }, {0.0, 5.0, 0.05}, spec);
  auto at = [&](std::size_t i) { return result.rows[i].report.compression; };
  CHECK(at(72).bits() == doctest::Approx(0.468996).epsilon(1e-6));  // a = 3.60
  CHECK(at(76).is_infinite());                                      // a = 3.80
  CHECK(at(19).is_infinite());                                      // a = 0.95
  CHECK(at(20).bits() == doctest::Approx(0.721928).epsilon(1e-6));  // a = 1.00
}

TEST_CASE("fig2 banded encoders tie on the raw objective") {
  Fig2Scenario fig = fig2_scenario();
  CostReport r1 = ib_raw(fig.scenario.joint, fig.encoders.at("disc1"), 2.0);
  CostReport r2 = ib_raw(fig.scenario.joint, fig.encoders.at("disc2"), 2.0);
  CHECK(r1.compression.bits() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r2.compression.bits() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r1.precision.bits() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2.precision.bits() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r1.compression.bits() - r2.compression.bits()) <= 1e-12);
  CHECK(std::abs(r1.precision.bits() - r2.precision.bits()) <= 1e-12);
}

TEST_CASE("disc1 and disc2 are a relabeling of the same atom masses") {
  Fig2Scenario fig = fig2_scenario();
  HybridMeasure m1 = pushforward(fig.encoders.at("disc1").profile,
                                 project(marginal(fig.scenario.joint),
                                         fig.encoders.at("disc1").direction));
  HybridMeasure m2 = pushforward(fig.encoders.at("disc2").profile,
                                 project(marginal(fig.scenario.joint),
                                         fig.encoders.at("disc2").direction));
  REQUIRE(m1.points().size() == 4);
  REQUIRE(m2.points().size() == 4);
  std::multiset<double> mass1, mass2, loc1, loc2;
  for (const PointMass& p : m1.points()) {
    mass1.insert(p.mass);
    loc1.insert(p.location[0]);
  }
  for (const PointMass& p : m2.points()) {
    mass2.insert(p.mass);
    loc2.insert(p.location[0]);
  }
  CHECK(mass1 == mass2);
  CHECK(loc1 == loc2);
}

TEST_CASE("fig3 readouts tie exactly on the raw objective") {
  Fig3Scenario fig = fig3_scenario();
  CostReport sum = ib_raw(fig.scenario.joint, fig.net_sum, 2.0);
  CostReport axis = ib_raw(fig.scenario.joint, fig.net_axis, 2.0);
  CHECK(sum.compression.is_infinite());
  CHECK(axis.compression.is_infinite());
  CHECK(sum.precision.bits() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(axis.precision.bits() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(sum.precision.bits() - axis.precision.bits()) <= 1e-12);
}

TEST_CASE("the probe point fools the sum readout but not the axis readout") {
  Fig3Scenario fig = fig3_scenario();
  double sum_value = output(fig.net_sum, fig.probe_point)[0];
  double axis_value = output(fig.net_axis, fig.probe_point)[0];
  // The probe is a noisy class-1 input.
  CHECK_FALSE(sum_value > fig.threshold_sum);   // decided as label 0: wrong
  CHECK(axis_value > fig.threshold_axis);       // decided as label 1: right
}

TEST_CASE("vanishing slab thickness keeps the classes separable") {
  for (double eps : {0.05, 0.01, 0.001}) {
    LabeledJoint joint({
        {0, 0.5, HybridMeasure({}, {UniformPiece{{{0.0, 0.5}, {0.0, 0.0}}, 1.0}})},
        {1, 0.5, HybridMeasure({}, {UniformPiece{{{0.0, 0.0}, {0.5, 1.0}}, 1.0}})},
    });
    Fig3Scenario fig = fig3_scenario();
    CostReport r = ib_raw(joint, fig.net_sum, 2.0);
    CHECK(r.precision.bits() == doctest::Approx(1.0).epsilon(1e-12));
    (void)eps;
  }
}

TEST_CASE("robustness probe is clean without noise") {
  Fig3Scenario fig = fig3_scenario();
  ProbeResult r = robustness_probe(fig.scenario, fig.net_axis,
                                   DecisionRule::threshold(0, fig.threshold_axis),
                                   NoiseSpec::none(), 2000, 3);
  CHECK(r.rate == doctest::Approx(0.0));
}

TEST_CASE("the axis readout is more robust than the sum readout") {
  Fig3Scenario fig = fig3_scenario();
  NoiseSpec noise = NoiseSpec::uniform(0.2);
  ProbeResult sum = robustness_probe(fig.scenario, fig.net_sum,
                                     DecisionRule::threshold(0, fig.threshold_sum),
                                     noise, 100000, 3);
  ProbeResult axis = robustness_probe(fig.scenario, fig.net_axis,
                                      DecisionRule::threshold(0, fig.threshold_axis),
                                      noise, 100000, 3);
  double pooled = std::sqrt(sum.se * sum.se + axis.se * axis.se);
  CHECK(axis.rate < sum.rate - 3.0 * pooled);
}

TEST_CASE("sharp out-of-band transitions cost robustness on fig2") {
  Fig2Scenario fig = fig2_scenario();
  NoiseSpec noise = NoiseSpec::gaussian(0.05);
  DecisionRule rule = DecisionRule::threshold(0, 0.5);
  ProbeResult smooth =
      robustness_probe(fig.scenario, fig.encoders.at("disc1"), rule, noise, 100000, 5);
  ProbeResult sharp =
      robustness_probe(fig.scenario, fig.encoders.at("disc3"), rule, noise, 100000, 5);
  double pooled = std::sqrt(smooth.se * smooth.se + sharp.se * sharp.se);
  CHECK(smooth.rate < sharp.rate - 3.0 * pooled);
}

TEST_CASE("probe misclassification grows with the noise width") {
  Fig3Scenario fig = fig3_scenario();
  double last = -1.0;
  for (double w : {0.05, 0.1, 0.2}) {
    ProbeResult r = robustness_probe(fig.scenario, fig.net_sum,
                                     DecisionRule::threshold(0, fig.threshold_sum),
                                     NoiseSpec::uniform(w), 100000, 7);
    CHECK(r.rate >= last - 3.0 * r.se);
    last = r.rate;
  }
  ProbeResult clean = robustness_probe(fig.scenario, fig.net_sum,
                                       DecisionRule::threshold(0, fig.threshold_sum),
                                       NoiseSpec::none(), 100000, 7);
  CHECK(clean.rate == doctest::Approx(0.0));
}

TEST_CASE("sweep results format as csv with the inf literal") {
  Scenario sc = fig1_scenario(Fig1Kind::continuous);
  CostSpec spec;
  SweepResult result = sweep(
      sc, [](double a) { return fig1_network(a, 0.25); }, {1.0, 1.4, 0.2}, spec);
  std::string csv = result.to_csv();
  CHECK(csv.find("param,compression,precision,total\n") == 0);
  CHECK(csv.find("1.000000,0.721928,") != std::string::npos);
  CHECK(csv.find("inf") != std::string::npos);
}
