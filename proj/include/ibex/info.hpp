#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ibex/measure.hpp"
#include "ibex/piecewise.hpp"

namespace ibex {

// A quantity in bits: either a finite non-negative real or the distinguished
// value Infinite. Every mutual-information computation lands here.
class InfoValue {
 public:
  static InfoValue finite(double bits) {
    if (bits < -1e-9) throw std::invalid_argument("negative information");
    InfoValue v;
    v.bits_ = bits < 0.0 ? 0.0 : bits;
    return v;
  }
  // Signed variant for combined objectives, which are costs rather than
  // information quantities and may be negative.
  static InfoValue signed_value(double bits) {
    InfoValue v;
    v.bits_ = bits;
    return v;
  }
  static InfoValue infinite() {
    InfoValue v;
    v.inf_ = true;
    return v;
  }

  bool is_infinite() const { return inf_; }
  double bits() const {
    if (inf_) throw std::domain_error("value is infinite");
    return bits_;
  }
  // CSV form: 6 fractional digits, or the literal "inf".
  std::string to_csv() const;

  friend bool operator==(const InfoValue& a, const InfoValue& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.bits_ == b.bits_);
  }

 private:
  double bits_ = 0.0;
  bool inf_ = false;
};

// Shannon entropy in bits of a probability vector (zeros are ignored).
double entropy_bits(std::span<const double> probs);
// Second-order Renyi entropy -log2 sum p^2.
double renyi2_bits(std::span<const double> probs);
double binary_entropy(double p);

// Finite probability mass function over opaque atom identifiers.
template <class Key>
class Pmf {
 public:
  Pmf() = default;
  explicit Pmf(std::map<Key, double> atoms) {
    double total = 0.0;
    for (const auto& [k, p] : atoms) {
      if (p < 0.0) throw std::invalid_argument("negative probability");
      if (p > 0.0) {
        atoms_.emplace_back(k, p);
        total += p;
      }
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("pmf mass is " + std::to_string(total));
    }
  }

  const std::vector<std::pair<Key, double>>& atoms() const { return atoms_; }
  std::vector<double> probabilities() const {
    std::vector<double> p;
    p.reserve(atoms_.size());
    for (const auto& [k, v] : atoms_) p.push_back(v);
    return p;
  }
  double entropy() const {
    auto p = probabilities();
    return entropy_bits(p);
  }
  double renyi2() const {
    auto p = probabilities();
    return renyi2_bits(p);
  }

 private:
  std::vector<std::pair<Key, double>> atoms_;  // sorted by key, p > 0
};

using CubeIndex = std::vector<std::int64_t>;
using CubePmf = Pmf<CubeIndex>;
using ScalarPmf = Pmf<double>;

// Grid quantizer [x]_m: coordinate j maps to cube floor(m*(x_j - origin_j)).
// The origin broadcasts if it has fewer entries than the dimension.
struct QuantizerSpec {
  std::int64_t resolution = 1;
  std::vector<double> origin;  // empty means all zeros

  double origin_at(std::size_t j) const {
    if (origin.empty()) return 0.0;
    return origin.size() == 1 ? origin[0] : origin.at(j);
  }
  std::int64_t cell(double x, std::size_t j = 0) const {
    return static_cast<std::int64_t>(
        std::floor(static_cast<double>(resolution) * (x - origin_at(j))));
  }
};

// Exact quantized pmf of a bounded hybrid measure: points land in their cube,
// uniform pieces integrate by per-coordinate overlap ratios. Dimension is
// capped at 4 to keep the cube enumeration exact and small.
CubePmf quantize_measure(const HybridMeasure& mu, const QuantizerSpec& q);

// I(X; L) for a deterministic scalar representation L = f(X). Any continuous
// component in the pushforward makes the value Infinite; the decision is
// symbolic, never a numeric threshold. Otherwise the value is the entropy of
// the induced atom pmf.
InfoValue mi_input_representation(const HybridMeasure& mu_x, const PiecewiseLinear& f);

// Entropy of a hybrid measure viewed as a representation distribution:
// Infinite when a continuous component exists, else the atom entropy.
InfoValue representation_entropy(const HybridMeasure& mu);

template <class Key>
struct ClassPmf {
  int label = 0;
  double prior = 0.0;
  Pmf<Key> pmf;
};

// I(Y; L) = H(L) - sum_y prior_y H(L | Y=y) over the union atom set.
template <class Key>
double mi_discrete(std::span<const ClassPmf<Key>> classes) {
  if (classes.empty()) throw std::invalid_argument("mi_discrete needs classes");
  std::map<Key, double> mix;
  double total_prior = 0.0;
  for (const ClassPmf<Key>& c : classes) {
    total_prior += c.prior;
    for (const auto& [k, p] : c.pmf.atoms()) mix[k] += c.prior * p;
  }
  if (std::abs(total_prior - 1.0) > 1e-9) {
    throw std::invalid_argument("class priors must sum to 1");
  }
  std::vector<double> mix_p;
  for (const auto& [k, p] : mix) mix_p.push_back(p);
  double h_mix = entropy_bits(mix_p);
  double h_cond = 0.0;
  for (const ClassPmf<Key>& c : classes) h_cond += c.prior * c.pmf.entropy();
  return std::max(0.0, h_mix - h_cond);
}

// Exact I(Y; L) when the class representations are scalar hybrid measures.
// Atom and density parts decompose against the prior-weighted mixture.
double mi_label_mixed(std::span<const double> priors,
                      std::span<const HybridMeasure> class_reps);

struct DimensionRow {
  std::int64_t m = 0;
  double shannon_slope = 0.0;
  double renyi2_slope = 0.0;
};

// Finite-resolution dimension table: per m, the exact quantized entropies
// divided by log2 m. No extrapolation is performed.
std::vector<DimensionRow> dimension_slopes(const HybridMeasure& mu,
                                           std::span<const std::int64_t> m_list);

// Exact I(Q_x(X); Q_l(f(X))) for a scalar hybrid measure. The support is
// partitioned at quantizer boundaries, profile breakpoints, and the preimages
// of the L-grid levels, so each cell carries a single joint outcome.
double mi_quantized_joint(const HybridMeasure& mu_scalar, const PiecewiseLinear& f,
                          const QuantizerSpec& q_x, const QuantizerSpec& q_l);

}  // namespace ibex
