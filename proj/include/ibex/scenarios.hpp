#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ibex/cost.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"

namespace ibex {

// A named problem instance: the feature/label joint plus the input direction
// along which every built-in encoder acts, so exact pushforwards apply.
struct Scenario {
  std::string name;
  LabeledJoint joint;
  std::vector<double> direction;
  std::string doc;
};

enum class Fig1Kind { discrete, dataset, continuous };

// One-dimensional two-class families on [0,5]: four weighted support points,
// the 18-point dataset read off the same layout, and four uniform intervals
// carrying the same masses as the points.
Scenario fig1_scenario(Fig1Kind kind);

// Two ReLU units and a differencing output realizing clip(x - a, 0, b).
Network fig1_network(double a, double b = 0.25);

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.1;
  std::vector<double> values() const;
};

struct SweepRow {
  double param = 0.0;
  CostReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // CSV: param,compression,precision,total with the literal `inf`.
  std::string to_csv() const;
};

// One cost report per grid point for a parameterized network family;
// Infinite entries are preserved.
SweepResult sweep(const Scenario& scenario,
                  const std::function<Network(double)>& family, const GridSpec& grid,
                  const CostSpec& spec);

// Binary classification on four disjoint X1 bands with alternating labels,
// X2 independent and uninformative; six reference encoders keyed
// disc1/disc2/disc3 (banded constants) and cont1/cont2/cont3 (banded ramps).
struct Fig2Scenario {
  Scenario scenario;
  std::map<std::string, ScalarEncoder> encoders;
};
Fig2Scenario fig2_scenario();

// Two axis-hugging class segments and two single-neuron encoders that tie on
// the raw objective but differ in robustness: one reads the coordinate sum,
// one reads the informative coordinate alone.
struct Fig3Scenario {
  Scenario scenario;
  Network net_sum;       // relu(x1 + x2)
  Network net_axis;      // relu(x2)
  double threshold_sum = 0.5;
  double threshold_axis = 0.25;
  std::vector<double> probe_point;  // a noisy class-1 input
  double epsilon = 0.05;
};
Fig3Scenario fig3_scenario();

struct ProbeResult {
  double rate = 0.0;  // misclassification probability estimate
  double se = 0.0;
};

// Monte Carlo estimate of P(rule(encoder(X + noise)) != Y) with per-
// coordinate i.i.d. noise; NoiseFamily::none probes the clean inputs.
ProbeResult robustness_probe(const Scenario& scenario, const ScalarEncoder& encoder,
                             const DecisionRule& rule, const NoiseSpec& noise,
                             std::size_t n, std::uint64_t seed);
ProbeResult robustness_probe(const Scenario& scenario, const Network& net,
                             const DecisionRule& rule, const NoiseSpec& noise,
                             std::size_t n, std::uint64_t seed);

// Scalar reduction of a network against a scenario, with the profile domain
// sized to the scenario support plus a noise margin.
ScalarEncoder scenario_encoder(const Scenario& scenario, const Network& net,
                               double extra_margin = 0.0);

// Reference trainable classifier for the band scenario: four leaky units with
// hinges spread over the band gaps, a noisy bottleneck of width 0.05, and a
// sigmoid readout initialized to the alternating label pattern. Trains to a
// clean separation under plain SGD at rate 0.05.
Network fig2_training_network(std::uint64_t seed);

}  // namespace ibex
