#include "ibex/info.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ibex/errors.hpp"

namespace ibex {

std::string InfoValue::to_csv() const {
  if (inf_) return "inf";
  char buf[32];
  double v = bits_ == 0.0 ? 0.0 : bits_;  // avoid "-0.000000"
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

namespace {

// Sums in ascending order so the result depends only on the multiset of
// terms; keeps plateau comparisons exactly reproducible.
double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

double entropy_bits(std::span<const double> probs) {
  std::vector<double> terms;
  terms.reserve(probs.size());
  for (double p : probs) {
    if (p > 0.0) terms.push_back(-p * std::log2(p));
  }
  return std::max(0.0, canonical_sum(terms));
}

double renyi2_bits(std::span<const double> probs) {
  std::vector<double> terms;
  terms.reserve(probs.size());
  for (double p : probs) terms.push_back(p * p);
  double s = canonical_sum(terms);
  if (s <= 0.0) throw std::invalid_argument("empty pmf");
  return std::max(0.0, -std::log2(s));
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

// Per-coordinate overlap masses of an interval against the quantizer grid.
// Returns (cell index, fraction of the interval length) pairs.
std::vector<std::pair<std::int64_t, double>> interval_cells(const Interval& iv,
                                                            const QuantizerSpec& q,
                                                            std::size_t coord) {
  std::vector<std::pair<std::int64_t, double>> cells;
  if (iv.degenerate()) {
    cells.emplace_back(q.cell(iv.lo, coord), 1.0);
    return cells;
  }
  const double m = static_cast<double>(q.resolution);
  const double o = q.origin_at(coord);
  std::int64_t first = q.cell(iv.lo, coord);
  std::int64_t last = q.cell(iv.hi, coord);
  for (std::int64_t z = first; z <= last; ++z) {
    double cell_lo = o + static_cast<double>(z) / m;
    double cell_hi = o + static_cast<double>(z + 1) / m;
    double ov = std::min(iv.hi, cell_hi) - std::max(iv.lo, cell_lo);
    if (ov > 0.0) cells.emplace_back(z, ov / iv.length());
  }
  return cells;
}

}  // namespace

CubePmf quantize_measure(const HybridMeasure& mu, const QuantizerSpec& q) {
  if (q.resolution < 1) throw std::invalid_argument("resolution must be >= 1");
  if (mu.dimension() > 4) {
    throw std::invalid_argument("exact quantization supports dimension <= 4");
  }
  for (const Interval& iv : mu.support_hull()) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
      throw std::invalid_argument("unbounded support");
    }
  }
  std::map<CubeIndex, double> cubes;
  for (const PointMass& p : mu.points()) {
    CubeIndex z(mu.dimension());
    for (std::size_t j = 0; j < mu.dimension(); ++j) z[j] = q.cell(p.location[j], j);
    cubes[z] += p.mass;
  }
  for (const UniformPiece& piece : mu.pieces()) {
    // Product measure over the box: enumerate the cross product of the
    // per-coordinate cell overlaps.
    std::vector<std::vector<std::pair<std::int64_t, double>>> per_coord;
    for (std::size_t j = 0; j < mu.dimension(); ++j) {
      per_coord.push_back(interval_cells(piece.box[j], q, j));
    }
    CubeIndex z(mu.dimension());
    std::vector<std::size_t> idx(mu.dimension(), 0);
    while (true) {
      double frac = 1.0;
      for (std::size_t j = 0; j < mu.dimension(); ++j) {
        z[j] = per_coord[j][idx[j]].first;
        frac *= per_coord[j][idx[j]].second;
      }
      cubes[z] += piece.mass * frac;
      std::size_t j = 0;
      while (j < mu.dimension() && ++idx[j] == per_coord[j].size()) {
        idx[j] = 0;
        ++j;
      }
      if (j == mu.dimension()) break;
    }
  }
  return CubePmf(std::move(cubes));
}

InfoValue representation_entropy(const HybridMeasure& mu) {
  if (mu.has_continuous_part()) return InfoValue::infinite();
  std::vector<double> probs;
  probs.reserve(mu.points().size());
  for (const PointMass& p : mu.points()) probs.push_back(p.mass);
  return InfoValue::finite(entropy_bits(probs));
}

InfoValue mi_input_representation(const HybridMeasure& mu_x,
                                  const PiecewiseLinear& f) {
  return representation_entropy(pushforward(f, mu_x));
}

double mi_label_mixed(std::span<const double> priors,
                      std::span<const HybridMeasure> class_reps) {
  if (priors.size() != class_reps.size() || priors.empty()) {
    throw std::invalid_argument("priors/representations mismatch");
  }
  const std::size_t n = priors.size();
  // Atom part: merge the class atom locations onto one tolerance grid.
  std::vector<std::pair<double, std::size_t>> tagged;  // location, class
  std::vector<double> masses;
  for (std::size_t c = 0; c < n; ++c) {
    if (class_reps[c].dimension() != 1) {
      throw std::invalid_argument("mixed MI needs scalar representations");
    }
    for (const PointMass& p : class_reps[c].points()) {
      tagged.emplace_back(p.location[0], c);
      masses.push_back(p.mass);
    }
  }
  std::vector<std::size_t> order(tagged.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tagged[a].first < tagged[b].first;
  });

  std::vector<double> info_terms;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t k = i;
    while (k + 1 < order.size() &&
           tagged[order[k + 1]].first - tagged[order[k]].first <= kMergeTol) {
      ++k;
    }
    std::vector<double> per_class(n, 0.0);
    for (std::size_t t = i; t <= k; ++t) {
      per_class[tagged[order[t]].second] += masses[order[t]];
    }
    double mix = 0.0;
    for (std::size_t c = 0; c < n; ++c) mix += priors[c] * per_class[c];
    for (std::size_t c = 0; c < n; ++c) {
      if (per_class[c] > 0.0) {
        info_terms.push_back(priors[c] * per_class[c] *
                             std::log2(per_class[c] / mix));
      }
    }
    i = k + 1;
  }

  // Density part: overlay all piece endpoints and integrate the piecewise
  // constant integrand in closed form.
  std::vector<double> cuts;
  for (const HybridMeasure& rep : class_reps) {
    for (const UniformPiece& q : rep.pieces()) {
      cuts.push_back(q.box[0].lo);
      cuts.push_back(q.box[0].hi);
    }
  }
  if (!cuts.empty()) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return b - a <= kMergeTol; }),
               cuts.end());
    for (std::size_t e = 0; e + 1 < cuts.size(); ++e) {
      double mid = 0.5 * (cuts[e] + cuts[e + 1]);
      double len = cuts[e + 1] - cuts[e];
      if (len <= 0.0) continue;
      std::vector<double> density(n, 0.0);
      for (std::size_t c = 0; c < n; ++c) {
        for (const UniformPiece& q : class_reps[c].pieces()) {
          if (mid > q.box[0].lo && mid < q.box[0].hi) {
            density[c] += q.mass / q.box[0].length();
          }
        }
      }
      double mix = 0.0;
      for (std::size_t c = 0; c < n; ++c) mix += priors[c] * density[c];
      if (mix <= 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (density[c] > 0.0) {
          info_terms.push_back(priors[c] * density[c] * len *
                               std::log2(density[c] / mix));
        }
      }
    }
  }
  std::sort(info_terms.begin(), info_terms.end());
  double info = 0.0;
  for (double t : info_terms) info += t;
  return std::max(0.0, info);
}

std::vector<DimensionRow> dimension_slopes(const HybridMeasure& mu,
                                           std::span<const std::int64_t> m_list) {
  std::vector<DimensionRow> rows;
  std::int64_t prev = 0;
  for (std::int64_t m : m_list) {
    if (m < 2) throw std::invalid_argument("dimension slopes need m >= 2");
    if (m <= prev) throw std::invalid_argument("m_list must be increasing");
    prev = m;
    CubePmf pmf = quantize_measure(mu, QuantizerSpec{m, {}});
    double denom = std::log2(static_cast<double>(m));
    rows.push_back({m, pmf.entropy() / denom, pmf.renyi2() / denom});
  }
  return rows;
}

double mi_quantized_joint(const HybridMeasure& mu_scalar, const PiecewiseLinear& f,
                          const QuantizerSpec& q_x, const QuantizerSpec& q_l) {
  if (mu_scalar.dimension() != 1) {
    throw std::invalid_argument("joint quantization needs a scalar measure");
  }
  std::map<std::pair<std::int64_t, std::int64_t>, double> joint;
  for (const PointMass& p : mu_scalar.points()) {
    joint[{q_x.cell(p.location[0]), q_l.cell(f(p.location[0]))}] += p.mass;
  }
  const double ml = static_cast<double>(q_l.resolution);
  const double ol = q_l.origin_at(0);
  for (const UniformPiece& piece : mu_scalar.pieces()) {
    const Interval& iv = piece.box[0];
    if (iv.degenerate()) {
      joint[{q_x.cell(iv.lo), q_l.cell(f(iv.lo))}] += piece.mass;
      continue;
    }
    std::vector<double> cuts{iv.lo, iv.hi};
    // X-grid boundaries.
    const double mx = static_cast<double>(q_x.resolution);
    const double ox = q_x.origin_at(0);
    for (std::int64_t z = q_x.cell(iv.lo) + 1; z <= q_x.cell(iv.hi); ++z) {
      double b = ox + static_cast<double>(z) / mx;
      if (b > iv.lo && b < iv.hi) cuts.push_back(b);
    }
    // Profile breakpoints.
    for (double b : f.breakpoints()) {
      if (b > iv.lo && b < iv.hi) cuts.push_back(b);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    // Refine each affine span at the preimages of the L-grid levels.
    std::vector<double> refined;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      refined.push_back(cuts[i]);
      const LinearSegment& s = f.segments()[f.segment_index(0.5 * (cuts[i] + cuts[i + 1]))];
      if (s.slope == 0.0) continue;
      double ya = s.at(cuts[i]);
      double yb = s.at(cuts[i + 1]);
      std::int64_t z_lo = q_l.cell(std::min(ya, yb));
      std::int64_t z_hi = q_l.cell(std::max(ya, yb));
      for (std::int64_t z = z_lo + 1; z <= z_hi; ++z) {
        double level = ol + static_cast<double>(z) / ml;
        double x = (level - s.intercept) / s.slope;
        if (x > cuts[i] && x < cuts[i + 1]) refined.push_back(x);
      }
    }
    refined.push_back(cuts.back());
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());
    const double density = piece.mass / iv.length();
    for (std::size_t i = 0; i + 1 < refined.size(); ++i) {
      double mid = 0.5 * (refined[i] + refined[i + 1]);
      double mass = density * (refined[i + 1] - refined[i]);
      if (mass <= 0.0) continue;
      const LinearSegment& s = f.segments()[f.segment_index(mid)];
      joint[{q_x.cell(mid), q_l.cell(s.at(mid))}] += mass;
    }
  }
  std::map<std::int64_t, double> px, pl;
  std::vector<double> pj;
  for (const auto& [key, p] : joint) {
    px[key.first] += p;
    pl[key.second] += p;
    pj.push_back(p);
  }
  std::vector<double> vx, vl;
  for (const auto& [k, p] : px) vx.push_back(p);
  for (const auto& [k, p] : pl) vl.push_back(p);
  return std::max(0.0, entropy_bits(vx) + entropy_bits(vl) - entropy_bits(pj));
}

}  // namespace ibex
