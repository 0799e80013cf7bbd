#include "ibex/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ibex/errors.hpp"

namespace ibex {

PiecewiseLinear::PiecewiseLinear(double lo, double hi,
                                 std::vector<double> breakpoints,
                                 std::vector<LinearSegment> segments,
                                 std::vector<double> break_values)
    : lo_(lo),
      hi_(hi),
      breaks_(std::move(breakpoints)),
      segments_(std::move(segments)),
      break_values_(std::move(break_values)) {
  if (!(lo_ < hi_)) throw std::invalid_argument("empty domain");
  if (segments_.size() != breaks_.size() + 1) {
    throw std::invalid_argument("segment/breakpoint count mismatch");
  }
  if (break_values_.size() != breaks_.size()) {
    throw std::invalid_argument("break value count mismatch");
  }
  double prev = lo_;
  for (double b : breaks_) {
    if (!(b > prev) || !(b < hi_)) {
      throw std::invalid_argument("breakpoints must be strictly increasing inside the domain");
    }
    prev = b;
  }
}

PiecewiseLinear PiecewiseLinear::constant(double lo, double hi, double value) {
  return PiecewiseLinear(lo, hi, {}, {LinearSegment{0.0, value}}, {});
}

PiecewiseLinear PiecewiseLinear::affine(double lo, double hi, double slope,
                                        double intercept) {
  return PiecewiseLinear(lo, hi, {}, {LinearSegment{slope, intercept}}, {});
}

PiecewiseLinear PiecewiseLinear::from_knots(std::span<const double> xs,
                                            std::span<const double> values) {
  if (xs.size() != values.size() || xs.size() < 2) {
    throw std::invalid_argument("need matching knot arrays of length >= 2");
  }
  std::vector<double> breaks(xs.begin() + 1, xs.end() - 1);
  std::vector<double> bvals(values.begin() + 1, values.end() - 1);
  std::vector<LinearSegment> segs;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double dx = xs[i + 1] - xs[i];
    if (!(dx > 0.0)) throw std::invalid_argument("knots must be strictly increasing");
    double s = (values[i + 1] - values[i]) / dx;
    segs.push_back({s, values[i] - s * xs[i]});
  }
  return PiecewiseLinear(xs.front(), xs.back(), std::move(breaks), std::move(segs),
                         std::move(bvals));
}

std::size_t PiecewiseLinear::segment_index(double x) const {
  std::size_t i =
      static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) -
                               breaks_.begin());
  return i;
}

std::pair<double, double> PiecewiseLinear::segment_bounds(std::size_t i) const {
  double a = i == 0 ? lo_ : breaks_[i - 1];
  double b = i == segments_.size() - 1 ? hi_ : breaks_[i];
  return {a, b};
}

double PiecewiseLinear::operator()(double x) const {
  if (x < lo_ || x > hi_) {
    throw SupportOutsideDomain("evaluation outside the function domain");
  }
  for (std::size_t k = 0; k < breaks_.size(); ++k) {
    if (x == breaks_[k]) return break_values_[k];
  }
  return segments_[segment_index(x)].at(x);
}

bool PiecewiseLinear::is_continuous(double tol) const {
  for (std::size_t k = 0; k < breaks_.size(); ++k) {
    double left = segments_[k].at(breaks_[k]);
    double right = segments_[k + 1].at(breaks_[k]);
    if (std::abs(left - right) > tol) return false;
    if (std::abs(break_values_[k] - left) > tol) return false;
  }
  return true;
}

bool PiecewiseLinear::is_strictly_increasing() const {
  if (!is_continuous()) {
    // Jumps are allowed as long as they jump upward.
    for (std::size_t k = 0; k < breaks_.size(); ++k) {
      double left = segments_[k].at(breaks_[k]);
      double right = segments_[k + 1].at(breaks_[k]);
      if (right < left) return false;
    }
  }
  for (const LinearSegment& s : segments_) {
    if (!(s.slope > 0.0)) return false;
  }
  return true;
}

std::pair<double, double> PiecewiseLinear::range() const {
  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    auto [a, b] = segment_bounds(i);
    mn = std::min({mn, segments_[i].at(a), segments_[i].at(b)});
    mx = std::max({mx, segments_[i].at(a), segments_[i].at(b)});
  }
  for (double v : break_values_) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {mn, mx};
}

PiecewiseLinear PiecewiseLinear::simplified() const {
  std::vector<double> breaks;
  std::vector<double> bvals;
  std::vector<LinearSegment> segs{segments_.front()};
  for (std::size_t k = 0; k < breaks_.size(); ++k) {
    const LinearSegment& prev = segs.back();
    const LinearSegment& next = segments_[k + 1];
    double x = breaks_[k];
    bool same_line = prev.slope == next.slope && prev.intercept == next.intercept;
    bool value_on_line = std::abs(break_values_[k] - prev.at(x)) <= 1e-15 *
                             std::max({1.0, std::abs(break_values_[k]), std::abs(prev.at(x))});
    if (same_line && value_on_line) continue;
    breaks.push_back(x);
    bvals.push_back(break_values_[k]);
    segs.push_back(next);
  }
  return PiecewiseLinear(lo_, hi_, std::move(breaks), std::move(segs), std::move(bvals));
}

PiecewiseLinear PiecewiseLinear::affine_combination(
    std::span<const PiecewiseLinear> fs, std::span<const double> coefs,
    double constant) {
  if (fs.empty() || fs.size() != coefs.size()) {
    throw std::invalid_argument("affine combination needs matching arrays");
  }
  const double lo = fs.front().lo_;
  const double hi = fs.front().hi_;
  std::vector<double> breaks;
  for (const PiecewiseLinear& f : fs) {
    if (f.lo_ != lo || f.hi_ != hi) {
      throw std::invalid_argument("affine combination needs one shared domain");
    }
    breaks.insert(breaks.end(), f.breaks_.begin(), f.breaks_.end());
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<LinearSegment> segs(breaks.size() + 1);
  for (std::size_t i = 0; i <= breaks.size(); ++i) {
    double a = i == 0 ? lo : breaks[i - 1];
    double b = i == breaks.size() ? hi : breaks[i];
    double mid = 0.5 * (a + b);
    LinearSegment acc{0.0, constant};
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const LinearSegment& s = fs[k].segments_[fs[k].segment_index(mid)];
      acc.slope += coefs[k] * s.slope;
      acc.intercept += coefs[k] * s.intercept;
    }
    segs[i] = acc;
  }
  std::vector<double> bvals(breaks.size());
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    double v = constant;
    for (std::size_t j = 0; j < fs.size(); ++j) v += coefs[j] * fs[j](breaks[k]);
    bvals[k] = v;
  }
  return PiecewiseLinear(lo, hi, std::move(breaks), std::move(segs), std::move(bvals))
      .simplified();
}

PiecewiseLinear PiecewiseLinear::compose_after(const PiecewiseLinear& inner) const {
  if (!is_continuous()) {
    throw std::invalid_argument("composition requires a continuous outer function");
  }
  auto [rmin, rmax] = inner.range();
  if (rmin < lo_ - 1e-12 || rmax > hi_ + 1e-12) {
    throw SupportOutsideDomain("inner range escapes outer domain");
  }
  // Refine inner's breakpoints with the preimages of the outer breakpoints.
  std::vector<double> cuts = inner.breaks_;
  for (std::size_t i = 0; i < inner.segments_.size(); ++i) {
    auto [a, b] = inner.segment_bounds(i);
    const LinearSegment& s = inner.segments_[i];
    if (s.slope == 0.0) continue;
    for (double ob : breaks_) {
      double x = (ob - s.intercept) / s.slope;
      if (x > a && x < b) cuts.push_back(x);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return b - a <= 1e-15; }),
             cuts.end());

  std::vector<LinearSegment> segs;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    double a = i == 0 ? inner.lo_ : cuts[i - 1];
    double b = i == cuts.size() ? inner.hi_ : cuts[i];
    double mid = 0.5 * (a + b);
    const LinearSegment& si = inner.segments_[inner.segment_index(mid)];
    double y = si.at(mid);
    y = std::min(std::max(y, lo_), hi_);
    const LinearSegment& so = segments_[segment_index(y)];
    segs.push_back({so.slope * si.slope, so.slope * si.intercept + so.intercept});
  }
  std::vector<double> bvals;
  for (double c : cuts) bvals.push_back((*this)(std::min(std::max(inner(c), lo_), hi_)));
  return PiecewiseLinear(inner.lo_, inner.hi_, std::move(cuts), std::move(segs),
                         std::move(bvals))
      .simplified();
}

HybridMeasure pushforward(const PiecewiseLinear& f, const HybridMeasure& mu) {
  if (mu.dimension() != 1) {
    throw std::invalid_argument("pushforward needs a one-dimensional measure");
  }
  std::vector<ScalarAtom> atoms;
  std::vector<ScalarPiece> out_pieces;
  for (const PointMass& p : mu.points()) {
    atoms.push_back({f(p.location[0]), p.mass});
  }
  for (const UniformPiece& q : mu.pieces()) {
    const double lo = q.box[0].lo;
    const double hi = q.box[0].hi;
    if (lo < f.domain_lo() - kMergeTol || hi > f.domain_hi() + kMergeTol) {
      throw SupportOutsideDomain("measure support escapes the function domain");
    }
    if (q.box[0].degenerate()) {
      atoms.push_back({f(std::min(std::max(lo, f.domain_lo()), f.domain_hi())), q.mass});
      continue;
    }
    // Breakpoints strictly inside the piece; values within kMergeTol of an
    // endpoint are snapped away so no degenerate sliver is created.
    std::vector<double> cuts{lo};
    for (double b : f.breakpoints()) {
      if (b > lo + kMergeTol && b < hi - kMergeTol) cuts.push_back(b);
    }
    cuts.push_back(hi);
    const double density = q.mass / (hi - lo);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double a = cuts[i];
      double b = cuts[i + 1];
      double m = density * (b - a);
      const LinearSegment& s = f.segments()[f.segment_index(0.5 * (a + b))];
      if (s.slope == 0.0) {
        atoms.push_back({s.intercept, m});
      } else {
        double ya = s.at(a);
        double yb = s.at(b);
        out_pieces.push_back({std::min(ya, yb), std::max(ya, yb), m});
      }
    }
  }
  return make_scalar_measure(std::move(atoms), std::move(out_pieces));
}

}  // namespace ibex
