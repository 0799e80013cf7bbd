#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibex/info.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"

namespace ibex {

// A fixed simple map from network outputs to a class estimate.
struct DecisionRule {
  enum class Kind { threshold, argmax };
  Kind kind = Kind::threshold;
  std::size_t coordinate = 0;
  double level = 0.5;  // "greater than" orientation

  static DecisionRule threshold(std::size_t coordinate, double level);
  static DecisionRule argmax() { return {Kind::argmax, 0, 0.0}; }

  // Maps an output vector to an index into the sorted label list. argmax ties
  // break toward the lowest index.
  std::size_t decide_index(std::span<const double> output, std::size_t n_labels) const;
};

struct CostReport {
  std::string variant;
  double beta = 0.0;
  InfoValue compression;
  InfoValue precision;
  InfoValue total;
  std::optional<double> compression_se;
  std::optional<double> precision_se;

  // CSV row: variant,beta,compression,precision,total,comp_se,prec_se with
  // empty standard-error fields for exact variants.
  std::string to_csv_row() const;
};

// Cost selector used by the sweep harness and the CLI. beta must exceed 1.
struct CostSpec {
  enum class Variant { raw, decision, probabilistic, quantized, noisy };
  Variant variant = Variant::raw;
  double beta = 2.0;
  // Layer whose representation is costed; SIZE_MAX means the network output.
  std::size_t layer = static_cast<std::size_t>(-1);
  DecisionRule rule = DecisionRule::threshold(0, 0.5);
  std::optional<QuantizerSpec> q_x;  // nullopt: identity (no input quantization)
  QuantizerSpec q_l{4, {}};
  QuantizerSpec q_l_prime{2, {}};
  NoiseSpec eta{NoiseFamily::uniform, 0.05};
  NoiseSpec eta_prime{NoiseFamily::uniform, 0.05};
  std::size_t n_mc = 20000;
  std::uint64_t seed = 0;
};

// Exact per-class pushforward distributions of the encoder output.
std::vector<HybridMeasure> class_representations(const LabeledJoint& joint,
                                                 const ScalarEncoder& encoder);

// Raw objective I(X;L) - beta I(Y;L) for a deterministic encoder. The
// compression term is the representation entropy and is Infinite exactly when
// the pushforward keeps a continuous component; the precision term is always
// finite.
CostReport ib_raw(const LabeledJoint& joint, const ScalarEncoder& encoder, double beta);
CostReport ib_raw(const LabeledJoint& joint, const Network& net, double beta);

// Objective after a hard decision rule: both terms are computed on the
// discrete class estimate.
CostReport ib_decision(const LabeledJoint& joint, const ScalarEncoder& encoder,
                       const DecisionRule& rule, double beta);

// Soft-decision objective: a scalar output in [0,1] is read as the
// probability of the higher label. Conditional-entropy integrals over
// continuous output pieces use adaptive quadrature at 1e-9.
CostReport ib_probabilistic(const LabeledJoint& joint, const ScalarEncoder& encoder,
                            double beta);

// Quantized objective I(Q_x(X); Q_l(L)) - beta I(Y; Q'_l(L)); with q_x empty
// the input is left unquantized, which for a deterministic encoder makes the
// compression term H(Q_l(L)).
CostReport ib_quantized(const LabeledJoint& joint, const ScalarEncoder& encoder,
                        const std::optional<QuantizerSpec>& q_x,
                        const QuantizerSpec& q_l, const QuantizerSpec& q_l_prime,
                        double beta);

// Noisy objective I(X; L+eta) - beta I(Y; L+eta'). Noise is integrated
// analytically through exact mixture densities; Monte Carlo over inputs kicks
// in only past 10^4 mixture components, in which case standard errors are
// reported.
CostReport ib_noisy(const LabeledJoint& joint, const ScalarEncoder& encoder,
                    const NoiseSpec& eta, const NoiseSpec& eta_prime, double beta,
                    std::size_t n_mc, std::uint64_t seed);

CostReport evaluate_cost(const LabeledJoint& joint, const ScalarEncoder& encoder,
                         const CostSpec& spec);
CostReport evaluate_cost(const LabeledJoint& joint, const Network& net,
                         const CostSpec& spec);

struct Divergences {
  double kl_bits = 0.0;
  double cross_entropy_bits = 0.0;
};

// D(p||q) and C(p||q) over aligned atom vectors; q must be positive wherever
// p is.
Divergences divergences(std::span<const double> p, std::span<const double> q);

struct BoundReport {
  double i_y_l = 0.0;
  double i_y_ytilde = 0.0;
  double h_y = 0.0;
  double cross_entropy_l = 0.0;
  double cross_entropy_ytilde = 0.0;
  double lower_bound = 0.0;  // h_y - cross_entropy_l
};

// Exact evaluation of the variational precision-bound chain on finite
// alphabets. joint_yl[y][l] is the joint distribution, decoder_lt[l][t] the
// (possibly stochastic) decoder kernel, qrule_ty[t][y] a strictly positive
// conditional over labels. For a deterministic decoder the two cross-entropy
// fields coincide.
BoundReport precision_bound_report(const std::vector<std::vector<double>>& joint_yl,
                                   const std::vector<std::vector<double>>& decoder_lt,
                                   const std::vector<std::vector<double>>& qrule_ty);

}  // namespace ibex
