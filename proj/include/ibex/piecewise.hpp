#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ibex/measure.hpp"

namespace ibex {

struct LinearSegment {
  double slope = 0.0;
  double intercept = 0.0;
  double at(double x) const { return slope * x + intercept; }
};

// A real function on a closed interval, affine between finitely many
// breakpoints. Segments are open at the breakpoints; the function value at
// each breakpoint is stored explicitly, so jump discontinuities (from step
// activations) are exact. For continuous functions the stored value agrees
// with both one-sided limits.
class PiecewiseLinear {
 public:
  PiecewiseLinear(double lo, double hi, std::vector<double> breakpoints,
                  std::vector<LinearSegment> segments,
                  std::vector<double> break_values);

  static PiecewiseLinear constant(double lo, double hi, double value);
  static PiecewiseLinear affine(double lo, double hi, double slope, double intercept);
  static PiecewiseLinear identity(double lo, double hi) {
    return affine(lo, hi, 1.0, 0.0);
  }
  // Interpolates the given (x, value) knots; x strictly increasing, domain
  // [x.front(), x.back()].
  static PiecewiseLinear from_knots(std::span<const double> xs,
                                    std::span<const double> values);

  double domain_lo() const { return lo_; }
  double domain_hi() const { return hi_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<LinearSegment>& segments() const { return segments_; }
  const std::vector<double>& break_values() const { return break_values_; }
  std::size_t segment_count() const { return segments_.size(); }

  // Evaluation; throws SupportOutsideDomain off the domain.
  double operator()(double x) const;

  // Segment index whose open interval contains x (breakpoints resolve to the
  // right segment; irrelevant for measure-level work since breakpoints carry
  // no length).
  std::size_t segment_index(double x) const;
  std::pair<double, double> segment_bounds(std::size_t i) const;

  bool is_continuous(double tol = 1e-12) const;
  bool is_strictly_increasing() const;
  std::pair<double, double> range() const;

  // Drops breakpoints between segments that share the same line and whose
  // stored value lies on it.
  PiecewiseLinear simplified() const;

  // this(inner(x)); requires this to be continuous and inner's range to lie
  // inside this->domain.
  PiecewiseLinear compose_after(const PiecewiseLinear& inner) const;

  // Pointwise affine combination sum_k coef[k]*f[k] + constant of functions
  // sharing one domain.
  static PiecewiseLinear affine_combination(std::span<const PiecewiseLinear> fs,
                                            std::span<const double> coefs,
                                            double constant);

 private:
  double lo_, hi_;
  std::vector<double> breaks_;
  std::vector<LinearSegment> segments_;   // breaks_.size() + 1
  std::vector<double> break_values_;      // one per breakpoint
};

// Exact distribution of f(X) for a scalar hybrid measure supported inside
// f's domain. Point masses map through f exactly; uniform pieces split at
// the breakpoints, with zero-slope spans becoming atoms at the level value
// and sloped spans becoming uniform pieces on the image interval. The result
// is canonical (atoms merged, overlapping images recombined).
HybridMeasure pushforward(const PiecewiseLinear& f, const HybridMeasure& mu);

}  // namespace ibex
