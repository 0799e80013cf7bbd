#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ibex/cost.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"

namespace ibex {

struct TrainConfig {
  std::size_t steps = 1000;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::size_t noise_draws = 1;  // representation samples per input
  std::uint64_t seed = 0;
  // Either the cross-entropy surrogate or an IB-style cost from CostSpec.
  bool use_cross_entropy = true;
  CostSpec spec;
  // Every eval_every steps an evaluated CostReport is appended to the trace;
  // 0 disables evaluation rows.
  std::size_t eval_every = 0;
  std::size_t eval_samples = 20000;  // Monte Carlo size for stochastic nets
};

struct TrainTrace {
  std::vector<double> losses;  // surrogate loss per step, in bits
  std::vector<std::pair<std::size_t, CostReport>> evals;

  // CSV: step,loss,compression,precision,total (evaluation columns only
  // where computed).
  std::string to_csv() const;
};

// Central finite differences of a scalar cost over every network parameter.
// Doubles as the gradient oracle and as the piecewise-constancy detector: on
// a plateau the difference is exactly zero. Throws InfiniteCost if the cost
// is Infinite at any probe point.
std::vector<double> finite_diff_grad(
    const std::function<InfoValue(const Network&)>& costfn, const Network& net,
    double epsilon);

// Monte Carlo estimate of a noisy or probabilistic cost with standard errors,
// deterministic for a given seed. Stochastic layers are integrated by
// noise_draws realizations per input.
CostReport mc_cost(const LabeledJoint& joint, const Network& net, const CostSpec& spec,
                   std::size_t n, std::uint64_t seed, std::size_t noise_draws = 8);

// Monte Carlo estimate of I(Y; rule(output)) in bits.
double decision_mi_mc(const LabeledJoint& joint, const Network& net,
                      const DecisionRule& rule, std::size_t n, std::uint64_t seed);

// Plain stochastic gradient descent with a fixed rate. The cross-entropy
// surrogate trains by backpropagation (stochastic layers use the additive
// reparameterization); CostSpec objectives train by central differences on
// the exact cost and therefore require a deterministic network. Throws
// Diverged when the loss passes 1e6.
std::pair<Network, TrainTrace> train_sgd(const LabeledJoint& joint, Network net,
                                         const TrainConfig& cfg);

}  // namespace ibex
