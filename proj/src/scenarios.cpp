#include "ibex/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ibex/errors.hpp"
#include "ibex/rng.hpp"

namespace ibex {

namespace {

HybridMeasure atoms_1d(std::vector<std::pair<double, double>> loc_mass) {
  std::vector<PointMass> points;
  for (auto& [loc, mass] : loc_mass) points.push_back({{loc}, mass});
  return HybridMeasure(std::move(points), {});
}

HybridMeasure pieces_1d(std::vector<std::array<double, 3>> lo_hi_mass) {
  std::vector<UniformPiece> pieces;
  for (auto& [lo, hi, mass] : lo_hi_mass) pieces.push_back({{{lo, hi}}, mass});
  return HybridMeasure({}, std::move(pieces));
}

}  // namespace

Scenario fig1_scenario(Fig1Kind kind) {
  switch (kind) {
    case Fig1Kind::discrete: {
      LabeledJoint joint({
          {0, 0.6, atoms_1d({{0.3, 0.2 / 0.6}, {1.7, 0.4 / 0.6}})},
          {1, 0.4, atoms_1d({{3.1, 0.3 / 0.4}, {4.5, 0.1 / 0.4}})},
      });
      return {"fig1-discrete", std::move(joint), {1.0},
              "four weighted support points, two per class"};
    }
    case Fig1Kind::dataset: {
      const std::vector<double> red = {0.1, 0.15, 0.2, 0.5, 1.7,
                                       1.8, 1.85, 1.9, 2.2, 2.3};
      const std::vector<double> black = {3.0, 3.1, 3.15, 3.3, 4.2, 4.3, 4.35, 4.4};
      std::vector<std::pair<double, double>> red_atoms, black_atoms;
      for (double x : red) red_atoms.push_back({x, 1.0 / 10.0});
      for (double x : black) black_atoms.push_back({x, 1.0 / 8.0});
      LabeledJoint joint({
          {0, 10.0 / 18.0, atoms_1d(std::move(red_atoms))},
          {1, 8.0 / 18.0, atoms_1d(std::move(black_atoms))},
      });
      return {"fig1-dataset", std::move(joint), {1.0},
              "empirical joint of an 18-point sample"};
    }
    case Fig1Kind::continuous: {
      LabeledJoint joint({
          {0, 0.6, pieces_1d({{0.0, 1.0, 0.2 / 0.6}, {1.5, 2.5, 0.4 / 0.6}})},
          {1, 0.4, pieces_1d({{3.0, 3.5, 0.3 / 0.4}, {4.0, 4.75, 0.1 / 0.4}})},
      });
      return {"fig1-continuous", std::move(joint), {1.0},
              "four uniform intervals carrying the point masses"};
    }
  }
  throw std::invalid_argument("unknown fig1 kind");
}

Network fig1_network(double a, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
  LayerParams hidden;
  hidden.in = 1;
  hidden.out = 2;
  hidden.weights = {1.0, 1.0};
  hidden.biases = {-a, -a - b};
  hidden.activation = Activation::relu();
  LayerParams out;
  out.in = 2;
  out.out = 1;
  out.weights = {1.0, -1.0};
  out.biases = {0.0};
  out.activation = Activation::identity();
  return Network({hidden, out});
}

std::vector<double> GridSpec::values() const {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("bad grid");
  std::vector<double> v;
  for (std::size_t i = 0;; ++i) {
    double x = lo + step * static_cast<double>(i);
    if (x > hi + 0.5 * step) break;
    v.push_back(std::min(x, hi));
    if (v.size() > 1000000) throw std::invalid_argument("grid too fine");
  }
  return v;
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << "param,compression,precision,total\n";
  char buf[32];
  for (const SweepRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.param);
    out << buf << ',' << row.report.compression.to_csv() << ','
        << row.report.precision.to_csv() << ',' << row.report.total.to_csv() << '\n';
  }
  return out.str();
}

SweepResult sweep(const Scenario& scenario,
                  const std::function<Network(double)>& family, const GridSpec& grid,
                  const CostSpec& spec) {
  SweepResult result;
  for (double a : grid.values()) {
    result.rows.push_back({a, evaluate_cost(scenario.joint, family(a), spec)});
  }
  return result;
}

namespace {

ScalarEncoder knot_encoder(std::vector<double> direction, std::vector<double> xs,
                           std::vector<double> values) {
  return {std::move(direction), PiecewiseLinear::from_knots(xs, values)};
}

}  // namespace

Fig2Scenario fig2_scenario() {
  // Bands on X1 with alternating labels; the masses P(X in S_i) = 1/4 are the
  // contract, the exact endpoints are a drawing convention.
  const double x2_lo = 0.0, x2_hi = 2.0;
  auto band = [&](double lo, double hi) {
    return UniformPiece{{{lo, hi}, {x2_lo, x2_hi}}, 0.5};
  };
  LabeledJoint joint({
      {0, 0.5, HybridMeasure({}, {band(1.0, 1.9), band(4.2, 4.8)})},
      {1, 0.5, HybridMeasure({}, {band(2.5, 3.6), band(5.9, 7.1)})},
  });
  Fig2Scenario fig{{"fig2", std::move(joint), {1.0, 0.0},
                    "four alternating-label bands in X1; X2 carries no label "
                    "information"},
                   {}};
  const std::vector<double> dir = {1.0, 0.0};
  fig.encoders.emplace(
      "disc1", knot_encoder(dir, {0.0, 1.9, 2.5, 3.6, 4.2, 4.8, 5.9, 8.5},
                            {0.2, 0.2, 0.6, 0.6, 0.4, 0.4, 0.8, 0.8}));
  fig.encoders.emplace(
      "disc2", knot_encoder(dir, {0.0, 1.9, 2.5, 3.6, 4.2, 4.8, 5.9, 8.5},
                            {0.2, 0.2, 0.4, 0.4, 0.6, 0.6, 0.8, 0.8}));
  fig.encoders.emplace(
      "disc3",
      knot_encoder(dir, {0.0, 1.9, 1.91, 3.6, 3.61, 4.8, 4.81, 8.5},
                   {0.2, 0.2, 0.6, 0.6, 0.4, 0.4, 0.8, 0.8}));
  fig.encoders.emplace(
      "cont1",
      knot_encoder(dir, {0.0, 1.0, 1.9, 2.5, 3.6, 4.2, 4.8, 5.9, 7.1, 8.5},
                   {0.0, 0.0, 0.25, 0.5, 0.75, 0.25, 0.5, 0.75, 1.0, 1.0}));
  fig.encoders.emplace(
      "cont2",
      knot_encoder(dir, {0.0, 1.0, 1.9, 2.5, 3.6, 4.2, 4.8, 5.9, 7.1, 8.5},
                   {0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0}));
  fig.encoders.emplace(
      "cont3",
      knot_encoder(dir,
                   {0.0, 1.0, 1.9, 1.91, 2.5, 3.6, 3.61, 4.2, 4.8, 4.81, 5.9, 7.1,
                    8.5},
                   {0.0, 0.0, 0.125, 0.75, 0.75, 0.875, 0.125, 0.125, 0.25, 0.875,
                    0.875, 1.0, 1.0}));
  return fig;
}

Fig3Scenario fig3_scenario() {
  // The class supports hug the axes: label 0 varies in x1 at x2 = 0, label 1
  // varies in x2 at x1 = 0. epsilon parameterizes the probe geometry.
  LabeledJoint joint({
      {0, 0.5, HybridMeasure({}, {UniformPiece{{{0.0, 0.5}, {0.0, 0.0}}, 1.0}})},
      {1, 0.5, HybridMeasure({}, {UniformPiece{{{0.0, 0.0}, {0.5, 1.0}}, 1.0}})},
  });
  const double epsilon = 0.05;
  LayerParams sum_layer;
  sum_layer.in = 2;
  sum_layer.out = 1;
  sum_layer.weights = {1.0, 1.0};
  sum_layer.biases = {0.0};
  sum_layer.activation = Activation::relu();
  LayerParams axis_layer = sum_layer;
  axis_layer.weights = {0.0, 1.0};
  return Fig3Scenario{{"fig3", std::move(joint), {0.0, 1.0},
                       "axis-aligned class segments; a sum readout and an axis "
                       "readout tie on the raw objective"},
                      Network({sum_layer}),
                      Network({axis_layer}),
                      0.5,
                      0.25,
                      {epsilon, 0.5 - epsilon},
                      epsilon};
}

ScalarEncoder scenario_encoder(const Scenario& scenario, const Network& net,
                               double extra_margin) {
  // Domain of t = <u, x> over the scenario support, padded for noise probes.
  const LayerParams& first = net.layer(0);
  std::vector<double> u(first.in, 0.0);
  double best = 0.0;
  std::size_t ref = first.out;
  for (std::size_t j = 0; j < first.out; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < first.in; ++i) norm += std::abs(first.weight(i, j));
    if (norm > best) {
      best = norm;
      ref = j;
    }
  }
  if (ref == first.out) {
    u[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < first.in; ++i) u[i] = first.weight(i, ref);
  }
  double t_lo = 0.0, t_hi = 0.0;
  bool started = false;
  for (const LabeledClass& c : scenario.joint.classes()) {
    std::vector<Interval> hull = c.conditional.support_hull();
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < hull.size(); ++j) {
      lo += std::min(u[j] * hull[j].lo, u[j] * hull[j].hi);
      hi += std::max(u[j] * hull[j].lo, u[j] * hull[j].hi);
    }
    if (!started) {
      t_lo = lo;
      t_hi = hi;
      started = true;
    } else {
      t_lo = std::min(t_lo, lo);
      t_hi = std::max(t_hi, hi);
    }
  }
  double scale = 0.0;
  for (double v : u) scale += std::abs(v);
  double margin = 1e-9 + 0.01 * std::max(1.0, t_hi - t_lo) + extra_margin * scale;
  return reduce_to_scalar(net, {t_lo - margin, t_hi + margin});
}

Network fig2_training_network(std::uint64_t seed) {
  Rng rng(seed);
  LayerParams hidden;
  hidden.in = 2;
  hidden.out = 4;
  hidden.weights.resize(8);
  hidden.biases.resize(4);
  LayerParams head;
  head.in = 4;
  head.out = 1;
  head.weights.assign(4, 0.0);
  // Hinges at the gaps between bands; head signs follow the alternating
  // labels so descent sharpens the boundaries instead of collapsing them.
  const double hinge[4] = {0.5, 2.2, 3.9, 5.35};
  const double readout[4] = {0.0, 2.0, -3.0, 3.5};
  for (std::size_t j = 0; j < 4; ++j) {
    double w1 = 1.0 + rng.uniform(-0.1, 0.1);
    hidden.weight(0, j) = w1;
    hidden.weight(1, j) = rng.uniform(-0.05, 0.05);
    hidden.biases[j] = -w1 * hinge[j] + rng.uniform(-0.05, 0.05);
    head.weights[j] = readout[j] + rng.uniform(-0.2, 0.2);
  }
  head.biases = {-1.2};
  hidden.activation = Activation::leaky_relu(0.1);
  hidden.noise = NoiseSpec::uniform(0.05);
  head.activation = Activation::sigmoid();
  return Network({hidden, head});
}

namespace {

double noise_margin(const NoiseSpec& noise) {
  switch (noise.family) {
    case NoiseFamily::none: return 0.0;
    case NoiseFamily::uniform: return 0.5 * noise.param;
    case NoiseFamily::gaussian: return 9.0 * noise.param;
  }
  return 0.0;
}

}  // namespace

ProbeResult robustness_probe(const Scenario& scenario, const ScalarEncoder& encoder,
                             const DecisionRule& rule, const NoiseSpec& noise,
                             std::size_t n, std::uint64_t seed) {
  if (n < 1000) throw std::invalid_argument("probe needs n >= 1000");
  Dataset data = sample(scenario.joint, n, seed);
  Rng rng(seed ^ 0xc2b2ae3d27d4eb4full);
  std::vector<int> labels;
  for (const LabeledClass& c : scenario.joint.classes()) labels.push_back(c.label);
  std::size_t miss = 0;
  std::vector<double> x;
  for (const Sample& s : data.samples) {
    x = s.x;
    for (double& xi : x) {
      if (noise.family == NoiseFamily::uniform) {
        xi += rng.uniform(-0.5 * noise.param, 0.5 * noise.param);
      } else if (noise.family == NoiseFamily::gaussian) {
        xi += rng.normal(0.0, noise.param);
      }
    }
    double value = encoder(x);
    std::size_t idx = rule.decide_index(std::span<const double>(&value, 1),
                                        labels.size());
    if (labels[idx] != s.label) ++miss;
  }
  double rate = static_cast<double>(miss) / static_cast<double>(n);
  double se = std::sqrt(std::max(rate * (1.0 - rate), 1.0 / static_cast<double>(n)) /
                        static_cast<double>(n));
  return {rate, se};
}

ProbeResult robustness_probe(const Scenario& scenario, const Network& net,
                             const DecisionRule& rule, const NoiseSpec& noise,
                             std::size_t n, std::uint64_t seed) {
  ScalarEncoder enc = scenario_encoder(scenario, net, noise_margin(noise));
  return robustness_probe(scenario, enc, rule, noise, n, seed);
}

}  // namespace ibex
