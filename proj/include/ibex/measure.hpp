#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ibex {

// Absolute tolerance on probability mass bookkeeping. All golden scenario
// masses are exact small rationals, so a tight tolerance is safe.
inline constexpr double kMassTol = 1e-12;
// Locations closer than this are the same support point.
inline constexpr double kMergeTol = 1e-12;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool degenerate() const { return hi - lo <= kMergeTol; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct PointMass {
  std::vector<double> location;
  double mass = 0.0;
};

// Uniform probability on an axis-aligned box. Coordinates may be degenerate
// (lo == hi), in which case the piece is supported on a lower-dimensional
// slice; at least one coordinate must have positive extent.
struct UniformPiece {
  std::vector<Interval> box;
  double mass = 0.0;

  // Volume over the non-degenerate coordinates.
  double volume() const;
  std::size_t free_coordinate_count() const;
};

// Exact mixture of finitely many point masses and uniform box pieces; the
// total mass is one. Point masses that coincide (within kMergeTol) are merged
// at construction; interior-overlapping pieces of the same shape are rejected
// rather than split.
class HybridMeasure {
 public:
  HybridMeasure(std::vector<PointMass> points, std::vector<UniformPiece> pieces);

  std::size_t dimension() const { return dim_; }
  const std::vector<PointMass>& points() const { return points_; }
  const std::vector<UniformPiece>& pieces() const { return pieces_; }

  double total_mass() const;
  bool has_continuous_part() const { return !pieces_.empty(); }
  std::vector<Interval> support_hull() const;

  // Scalar-only helpers (dimension() == 1).
  double scalar_mean() const;
  double mass_above(double level) const;  // P(X > level), strict inequality

 private:
  std::size_t dim_ = 0;
  std::vector<PointMass> points_;
  std::vector<UniformPiece> pieces_;
};

struct ScalarAtom {
  double location = 0.0;
  double mass = 0.0;
};

struct ScalarPiece {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
};

// Builds a one-dimensional HybridMeasure in canonical form: atoms merged,
// zero-length pieces converted to atoms, overlapping pieces split on the
// common endpoint grid and recombined into disjoint constant-density runs.
HybridMeasure make_scalar_measure(std::vector<ScalarAtom> atoms,
                                  std::vector<ScalarPiece> pieces);

// Exact distribution of <direction, X>. Each piece may have at most one
// coordinate that is both non-degenerate and carries a nonzero direction
// weight; otherwise the projection is not piecewise uniform and
// MultivariateDependence is thrown.
HybridMeasure project(const HybridMeasure& mu, std::span<const double> direction);

struct LabeledClass {
  int label = 0;
  double prior = 0.0;
  HybridMeasure conditional;
};

// Class priors with per-class feature conditionals; priors sum to one and
// labels are distinct.
class LabeledJoint {
 public:
  explicit LabeledJoint(std::vector<LabeledClass> classes);

  const std::vector<LabeledClass>& classes() const { return classes_; }
  std::size_t class_count() const { return classes_.size(); }
  std::size_t dimension() const;
  double label_entropy() const;  // H(Y) in bits

 private:
  std::vector<LabeledClass> classes_;
};

struct Sample {
  std::vector<double> x;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t size() const { return samples.size(); }
};

// Prior-weighted mixture of the class conditionals.
HybridMeasure marginal(const LabeledJoint& joint);

// n i.i.d. draws, deterministic for a given seed. The class is drawn by
// prior, then the location from the class conditional.
Dataset sample(const LabeledJoint& joint, std::size_t n, std::uint64_t seed);

// Empirical joint of a dataset: duplicated (x, label) rows merge into one
// point of proportional mass, priors are label frequencies.
LabeledJoint empirical_joint(const Dataset& data);

// Scenario file format: one record per line, '#' starts a comment.
//   point <mass> <x1> ... <xN> <label>
//   box <mass> <lo1> <hi1> ... <loN> <hiN> <label>
// The dimension is inferred from the first record; records of mixed arity
// raise ParseError with the offending line number.
LabeledJoint parse_scenario(std::istream& in);
LabeledJoint load_scenario_file(const std::string& path);
std::string format_scenario(const LabeledJoint& joint);

}  // namespace ibex
