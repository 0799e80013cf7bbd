#include "ibex/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ibex/errors.hpp"
#include "ibex/rng.hpp"

namespace ibex {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool locations_coincide(std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kMergeTol) return false;
  }
  return true;
}

// Pieces conflict only when they have the same degeneracy pattern and overlap
// with positive extent in every free coordinate (and coincide in the
// degenerate ones). Pieces with different patterns are mutually singular.
bool pieces_conflict(const UniformPiece& a, const UniformPiece& b) {
  for (std::size_t j = 0; j < a.box.size(); ++j) {
    const Interval& ia = a.box[j];
    const Interval& ib = b.box[j];
    if (ia.degenerate() != ib.degenerate()) return false;
    if (ia.degenerate()) {
      if (std::abs(ia.lo - ib.lo) > kMergeTol) return false;
    } else {
      double ov = std::min(ia.hi, ib.hi) - std::max(ia.lo, ib.lo);
      if (ov <= kMergeTol) return false;
    }
  }
  return true;
}

}  // namespace

double UniformPiece::volume() const {
  double v = 1.0;
  for (const Interval& iv : box) {
    if (!iv.degenerate()) v *= iv.length();
  }
  return v;
}

std::size_t UniformPiece::free_coordinate_count() const {
  std::size_t n = 0;
  for (const Interval& iv : box) {
    if (!iv.degenerate()) ++n;
  }
  return n;
}

HybridMeasure::HybridMeasure(std::vector<PointMass> points,
                             std::vector<UniformPiece> pieces) {
  if (points.empty() && pieces.empty()) {
    throw std::invalid_argument("measure needs at least one component");
  }
  dim_ = points.empty() ? pieces.front().box.size() : points.front().location.size();
  if (dim_ == 0) throw std::invalid_argument("zero-dimensional measure");

  for (const PointMass& p : points) {
    if (p.location.size() != dim_) {
      throw std::invalid_argument("point dimension mismatch");
    }
    if (!(p.mass > 0.0) || !std::isfinite(p.mass)) {
      throw std::invalid_argument("point mass must be positive and finite");
    }
    if (!all_finite(p.location)) {
      throw std::invalid_argument("point location must be finite");
    }
  }
  for (const UniformPiece& q : pieces) {
    if (q.box.size() != dim_) {
      throw std::invalid_argument("piece dimension mismatch");
    }
    if (!(q.mass > 0.0) || !std::isfinite(q.mass)) {
      throw std::invalid_argument("piece mass must be positive and finite");
    }
    std::size_t free_coords = 0;
    for (const Interval& iv : q.box) {
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.hi < iv.lo) {
        throw std::invalid_argument("piece interval must be finite with hi >= lo");
      }
      if (!iv.degenerate()) ++free_coords;
    }
    if (free_coords == 0) {
      throw std::invalid_argument("piece with no extent; use a point mass");
    }
  }

  // Merge coincident point masses.
  for (PointMass& p : points) {
    bool merged = false;
    for (PointMass& kept : points_) {
      if (locations_coincide(kept.location, p.location)) {
        // Mass-weighted location keeps the merge order-independent.
        double total = kept.mass + p.mass;
        for (std::size_t j = 0; j < dim_; ++j) {
          kept.location[j] =
              (kept.location[j] * kept.mass + p.location[j] * p.mass) / total;
        }
        kept.mass = total;
        merged = true;
        break;
      }
    }
    if (!merged) points_.push_back(std::move(p));
  }
  std::sort(points_.begin(), points_.end(),
            [](const PointMass& a, const PointMass& b) {
              return a.location < b.location;
            });

  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (std::size_t k = i + 1; k < pieces.size(); ++k) {
      if (pieces_conflict(pieces[i], pieces[k])) {
        throw std::invalid_argument("uniform pieces overlap in the interior");
      }
    }
  }
  pieces_ = std::move(pieces);
  std::sort(pieces_.begin(), pieces_.end(),
            [](const UniformPiece& a, const UniformPiece& b) {
              return a.box.front().lo < b.box.front().lo;
            });

  double mass = total_mass();
  if (std::abs(mass - 1.0) > kMassTol) {
    throw std::invalid_argument("total mass is " + std::to_string(mass) +
                                ", expected 1");
  }
}

double HybridMeasure::total_mass() const {
  double m = 0.0;
  for (const PointMass& p : points_) m += p.mass;
  for (const UniformPiece& q : pieces_) m += q.mass;
  return m;
}

std::vector<Interval> HybridMeasure::support_hull() const {
  std::vector<Interval> hull(dim_);
  bool first = true;
  auto absorb = [&](std::size_t j, double lo, double hi) {
    if (first) {
      hull[j] = {lo, hi};
    } else {
      hull[j].lo = std::min(hull[j].lo, lo);
      hull[j].hi = std::max(hull[j].hi, hi);
    }
  };
  for (const PointMass& p : points_) {
    for (std::size_t j = 0; j < dim_; ++j) absorb(j, p.location[j], p.location[j]);
    first = false;
  }
  for (const UniformPiece& q : pieces_) {
    for (std::size_t j = 0; j < dim_; ++j) absorb(j, q.box[j].lo, q.box[j].hi);
    first = false;
  }
  return hull;
}

double HybridMeasure::scalar_mean() const {
  if (dim_ != 1) throw std::invalid_argument("scalar_mean needs dimension 1");
  double m = 0.0;
  for (const PointMass& p : points_) m += p.mass * p.location[0];
  for (const UniformPiece& q : pieces_) {
    m += q.mass * 0.5 * (q.box[0].lo + q.box[0].hi);
  }
  return m;
}

double HybridMeasure::mass_above(double level) const {
  if (dim_ != 1) throw std::invalid_argument("mass_above needs dimension 1");
  double m = 0.0;
  for (const PointMass& p : points_) {
    if (p.location[0] > level) m += p.mass;
  }
  for (const UniformPiece& q : pieces_) {
    const Interval& iv = q.box[0];
    if (iv.degenerate()) {
      if (iv.lo > level) m += q.mass;
    } else {
      double above = std::min(iv.hi, std::max(iv.lo, level));
      m += q.mass * (iv.hi - above) / iv.length();
    }
  }
  return m;
}

HybridMeasure make_scalar_measure(std::vector<ScalarAtom> atoms,
                                  std::vector<ScalarPiece> pieces) {
  // Zero-length pieces carry their mass as atoms.
  std::vector<ScalarPiece> live;
  for (const ScalarPiece& p : pieces) {
    if (p.hi - p.lo <= kMergeTol) {
      atoms.push_back({0.5 * (p.lo + p.hi), p.mass});
    } else {
      live.push_back(p);
    }
  }

  std::vector<PointMass> out_points;
  std::sort(atoms.begin(), atoms.end(),
            [](const ScalarAtom& a, const ScalarAtom& b) {
              return a.location < b.location;
            });
  for (const ScalarAtom& a : atoms) {
    if (!out_points.empty() &&
        a.location - out_points.back().location[0] <= kMergeTol) {
      PointMass& last = out_points.back();
      double total = last.mass + a.mass;
      last.location[0] = (last.location[0] * last.mass + a.location * a.mass) / total;
      last.mass = total;
    } else {
      out_points.push_back({{a.location}, a.mass});
    }
  }

  // Split overlapping pieces on the shared endpoint grid and re-merge runs of
  // equal density.
  std::vector<UniformPiece> out_pieces;
  if (!live.empty()) {
    std::vector<double> cuts;
    for (const ScalarPiece& p : live) {
      cuts.push_back(p.lo);
      cuts.push_back(p.hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return b - a <= kMergeTol; }),
               cuts.end());
    std::vector<double> density(cuts.size() - 1, 0.0);
    for (const ScalarPiece& p : live) {
      double d = p.mass / (p.hi - p.lo);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (mid > p.lo && mid < p.hi) density[i] += d;
      }
    }
    std::size_t i = 0;
    while (i + 1 < cuts.size()) {
      if (density[i] <= 0.0) {
        ++i;
        continue;
      }
      std::size_t k = i;
      while (k + 1 < density.size() && density[k + 1] == density[i] &&
             cuts[k + 1] - cuts[k] > 0.0) {
        ++k;
      }
      double lo = cuts[i];
      double hi = cuts[k + 1];
      out_pieces.push_back({{{lo, hi}}, density[i] * (hi - lo)});
      i = k + 1;
    }
  }
  return HybridMeasure(std::move(out_points), std::move(out_pieces));
}

HybridMeasure project(const HybridMeasure& mu, std::span<const double> direction) {
  if (direction.size() != mu.dimension()) {
    throw std::invalid_argument("direction dimension mismatch");
  }
  std::vector<ScalarAtom> atoms;
  std::vector<ScalarPiece> pieces;
  for (const PointMass& p : mu.points()) {
    double t = 0.0;
    for (std::size_t j = 0; j < direction.size(); ++j) {
      t += direction[j] * p.location[j];
    }
    atoms.push_back({t, p.mass});
  }
  for (const UniformPiece& q : mu.pieces()) {
    double base = 0.0;
    int active = -1;
    for (std::size_t j = 0; j < direction.size(); ++j) {
      const Interval& iv = q.box[j];
      if (direction[j] == 0.0 || iv.degenerate()) {
        base += direction[j] * iv.lo;
        continue;
      }
      if (active >= 0) {
        throw MultivariateDependence(
            "projection mixes two continuous coordinates");
      }
      active = static_cast<int>(j);
    }
    if (active < 0) {
      atoms.push_back({base, q.mass});
    } else {
      double c = direction[static_cast<std::size_t>(active)];
      double a = base + c * q.box[static_cast<std::size_t>(active)].lo;
      double b = base + c * q.box[static_cast<std::size_t>(active)].hi;
      pieces.push_back({std::min(a, b), std::max(a, b), q.mass});
    }
  }
  return make_scalar_measure(std::move(atoms), std::move(pieces));
}

LabeledJoint::LabeledJoint(std::vector<LabeledClass> classes)
    : classes_(std::move(classes)) {
  if (classes_.empty()) throw std::invalid_argument("joint needs classes");
  double total = 0.0;
  std::size_t dim = classes_.front().conditional.dimension();
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const LabeledClass& c = classes_[i];
    if (!(c.prior > 0.0)) throw std::invalid_argument("prior must be positive");
    if (c.conditional.dimension() != dim) {
      throw std::invalid_argument("class conditional dimension mismatch");
    }
    for (std::size_t k = i + 1; k < classes_.size(); ++k) {
      if (classes_[k].label == c.label) {
        throw std::invalid_argument("duplicate class label");
      }
    }
    total += c.prior;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw std::invalid_argument("priors sum to " + std::to_string(total));
  }
  std::sort(classes_.begin(), classes_.end(),
            [](const LabeledClass& a, const LabeledClass& b) {
              return a.label < b.label;
            });
}

std::size_t LabeledJoint::dimension() const {
  return classes_.front().conditional.dimension();
}

double LabeledJoint::label_entropy() const {
  double h = 0.0;
  for (const LabeledClass& c : classes_) {
    h -= c.prior * std::log2(c.prior);
  }
  return std::max(0.0, h);
}

HybridMeasure marginal(const LabeledJoint& joint) {
  const std::size_t dim = joint.dimension();
  if (dim == 1) {
    std::vector<ScalarAtom> atoms;
    std::vector<ScalarPiece> pieces;
    for (const LabeledClass& c : joint.classes()) {
      for (const PointMass& p : c.conditional.points()) {
        atoms.push_back({p.location[0], c.prior * p.mass});
      }
      for (const UniformPiece& q : c.conditional.pieces()) {
        pieces.push_back({q.box[0].lo, q.box[0].hi, c.prior * q.mass});
      }
    }
    return make_scalar_measure(std::move(atoms), std::move(pieces));
  }
  std::vector<PointMass> points;
  std::vector<UniformPiece> pieces;
  for (const LabeledClass& c : joint.classes()) {
    for (PointMass p : c.conditional.points()) {
      p.mass *= c.prior;
      points.push_back(std::move(p));
    }
    for (UniformPiece q : c.conditional.pieces()) {
      q.mass *= c.prior;
      pieces.push_back(std::move(q));
    }
  }
  return HybridMeasure(std::move(points), std::move(pieces));
}

Dataset sample(const LabeledJoint& joint, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample size must be at least 1");
  Rng rng(seed);
  Dataset data;
  data.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform01();
    const LabeledClass* chosen = &joint.classes().back();
    double acc = 0.0;
    for (const LabeledClass& c : joint.classes()) {
      acc += c.prior;
      if (u < acc) {
        chosen = &c;
        break;
      }
    }
    const HybridMeasure& mu = chosen->conditional;
    double v = rng.uniform01();
    double acc2 = 0.0;
    Sample s;
    s.label = chosen->label;
    bool placed = false;
    for (const PointMass& p : mu.points()) {
      acc2 += p.mass;
      if (v < acc2) {
        s.x = p.location;
        placed = true;
        break;
      }
    }
    if (!placed) {
      const UniformPiece* piece = &mu.pieces().back();
      for (const UniformPiece& q : mu.pieces()) {
        acc2 += q.mass;
        if (v < acc2) {
          piece = &q;
          break;
        }
      }
      s.x.resize(mu.dimension());
      for (std::size_t j = 0; j < mu.dimension(); ++j) {
        const Interval& iv = piece->box[j];
        s.x[j] = iv.degenerate() ? iv.lo : rng.uniform(iv.lo, iv.hi);
      }
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

LabeledJoint empirical_joint(const Dataset& data) {
  if (data.samples.empty()) throw std::invalid_argument("empty dataset");
  const std::size_t dim = data.samples.front().x.size();
  for (const Sample& s : data.samples) {
    if (s.x.size() != dim) throw std::invalid_argument("sample dimension mismatch");
  }
  std::map<int, std::map<std::vector<double>, std::size_t>> by_label;
  for (const Sample& s : data.samples) {
    by_label[s.label][s.x] += 1;
  }
  const double n = static_cast<double>(data.samples.size());
  std::vector<LabeledClass> classes;
  for (const auto& [label, locs] : by_label) {
    std::size_t count = 0;
    for (const auto& [loc, c] : locs) count += c;
    std::vector<PointMass> points;
    for (const auto& [loc, c] : locs) {
      points.push_back({loc, static_cast<double>(c) / static_cast<double>(count)});
    }
    classes.push_back({label, static_cast<double>(count) / n,
                       HybridMeasure(std::move(points), {})});
  }
  return LabeledJoint(std::move(classes));
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream iss(line);
  std::string t;
  while (iss >> t) {
    if (t.front() == '#') break;
    toks.push_back(t);
  }
  return toks;
}

double parse_real(const std::string& tok, int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + tok + "'", line_no);
  }
}

int parse_label(const std::string& tok, int line_no) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad label '" + tok + "'", line_no);
  }
}

}  // namespace

LabeledJoint parse_scenario(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::size_t dim = 0;
  struct Record {
    bool is_point;
    double mass;
    std::vector<double> values;
    int label;
  };
  std::vector<Record> records;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& kind = toks.front();
    if (kind != "point" && kind != "box") {
      throw ParseError("unknown record '" + kind + "'", line_no);
    }
    bool is_point = kind == "point";
    if (toks.size() < 4) throw ParseError("truncated record", line_no);
    std::size_t value_count = toks.size() - 3;  // minus kind, mass, label
    std::size_t record_dim = is_point ? value_count : value_count / 2;
    if (!is_point && value_count % 2 != 0) {
      throw ParseError("box record needs lo/hi pairs", line_no);
    }
    if (dim == 0) {
      dim = record_dim;
    } else if (record_dim != dim) {
      throw ParseError("record arity differs from first record", line_no);
    }
    Record r;
    r.is_point = is_point;
    r.mass = parse_real(toks[1], line_no);
    for (std::size_t i = 2; i + 1 < toks.size(); ++i) {
      r.values.push_back(parse_real(toks[i], line_no));
    }
    r.label = parse_label(toks.back(), line_no);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ParseError("no records", line_no == 0 ? 1 : line_no);

  std::map<int, std::pair<std::vector<PointMass>, std::vector<UniformPiece>>> by_label;
  std::map<int, double> label_mass;
  for (const Record& r : records) {
    label_mass[r.label] += r.mass;
    auto& [pts, pcs] = by_label[r.label];
    if (r.is_point) {
      pts.push_back({r.values, r.mass});
    } else {
      UniformPiece q;
      q.mass = r.mass;
      for (std::size_t j = 0; j < dim; ++j) {
        q.box.push_back({r.values[2 * j], r.values[2 * j + 1]});
      }
      pcs.push_back(std::move(q));
    }
  }
  std::vector<LabeledClass> classes;
  for (auto& [label, parts] : by_label) {
    double prior = label_mass[label];
    auto& [pts, pcs] = parts;
    for (PointMass& p : pts) p.mass /= prior;
    for (UniformPiece& q : pcs) q.mass /= prior;
    classes.push_back({label, prior, HybridMeasure(std::move(pts), std::move(pcs))});
  }
  return LabeledJoint(std::move(classes));
}

LabeledJoint load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file: " + path);
  return parse_scenario(in);
}

std::string format_scenario(const LabeledJoint& joint) {
  std::ostringstream out;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out << buf;
  };
  for (const LabeledClass& c : joint.classes()) {
    for (const PointMass& p : c.conditional.points()) {
      out << "point";
      put(c.prior * p.mass);
      for (double x : p.location) put(x);
      out << ' ' << c.label << '\n';
    }
    for (const UniformPiece& q : c.conditional.pieces()) {
      out << "box";
      put(c.prior * q.mass);
      for (const Interval& iv : q.box) {
        put(iv.lo);
        put(iv.hi);
      }
      out << ' ' << c.label << '\n';
    }
  }
  return out.str();
}

}  // namespace ibex
