#include "ibex/cost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ibex/errors.hpp"
#include "ibex/quadrature.hpp"
#include "ibex/rng.hpp"

namespace ibex {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
// Past this many mixture components the noisy terms switch to Monte Carlo.
constexpr std::size_t kExactComponentLimit = 10000;

void check_beta(double beta) {
  if (!(beta > 1.0)) throw std::invalid_argument("beta must exceed 1");
}

std::vector<double> priors_of(const LabeledJoint& joint) {
  std::vector<double> out;
  for (const LabeledClass& c : joint.classes()) out.push_back(c.prior);
  return out;
}

CostReport finish_report(std::string variant, double beta, InfoValue compression,
                         InfoValue precision) {
  CostReport r;
  r.variant = std::move(variant);
  r.beta = beta;
  r.compression = compression;
  r.precision = precision;
  // Infinite never cancels against the finite term.
  if (compression.is_infinite() || precision.is_infinite()) {
    r.total = InfoValue::infinite();
  } else {
    r.total = InfoValue::signed_value(compression.bits() - beta * precision.bits());
  }
  return r;
}

HybridMeasure mixture_representation(const LabeledJoint& joint,
                                     std::span<const HybridMeasure> reps) {
  std::vector<ScalarAtom> atoms;
  std::vector<ScalarPiece> pieces;
  for (std::size_t c = 0; c < reps.size(); ++c) {
    double prior = joint.classes()[c].prior;
    for (const PointMass& p : reps[c].points()) {
      atoms.push_back({p.location[0], prior * p.mass});
    }
    for (const UniformPiece& q : reps[c].pieces()) {
      pieces.push_back({q.box[0].lo, q.box[0].hi, prior * q.mass});
    }
  }
  return make_scalar_measure(std::move(atoms), std::move(pieces));
}

}  // namespace

DecisionRule DecisionRule::threshold(std::size_t coordinate, double level) {
  if (!std::isfinite(level)) throw std::invalid_argument("threshold must be finite");
  return {Kind::threshold, coordinate, level};
}

std::size_t DecisionRule::decide_index(std::span<const double> output,
                                       std::size_t n_labels) const {
  if (kind == Kind::threshold) {
    if (coordinate >= output.size()) {
      throw std::invalid_argument("rule coordinate out of range");
    }
    if (n_labels != 2) {
      throw std::invalid_argument("threshold rule needs a binary problem");
    }
    return output[coordinate] > level ? 1 : 0;
  }
  if (output.size() != n_labels) {
    throw std::invalid_argument("argmax rule needs one output per label");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < output.size(); ++i) {
    if (output[i] > output[best]) best = i;  // ties stay at the lowest index
  }
  return best;
}

std::string CostReport::to_csv_row() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", beta);
  out << variant << ',' << buf << ',' << compression.to_csv() << ','
      << precision.to_csv() << ',' << total.to_csv() << ',';
  if (compression_se) {
    std::snprintf(buf, sizeof(buf), "%.6f", *compression_se);
    out << buf;
  }
  out << ',';
  if (precision_se) {
    std::snprintf(buf, sizeof(buf), "%.6f", *precision_se);
    out << buf;
  }
  return out.str();
}

std::vector<HybridMeasure> class_representations(const LabeledJoint& joint,
                                                 const ScalarEncoder& encoder) {
  std::vector<HybridMeasure> reps;
  reps.reserve(joint.class_count());
  for (const LabeledClass& c : joint.classes()) {
    reps.push_back(
        pushforward(encoder.profile, project(c.conditional, encoder.direction)));
  }
  return reps;
}

CostReport ib_raw(const LabeledJoint& joint, const ScalarEncoder& encoder,
                  double beta) {
  check_beta(beta);
  std::vector<HybridMeasure> reps = class_representations(joint, encoder);
  InfoValue compression = representation_entropy(mixture_representation(joint, reps));
  InfoValue precision = InfoValue::finite(mi_label_mixed(priors_of(joint), reps));
  return finish_report("raw", beta, compression, precision);
}

namespace {

// Fallback for networks with no scalar reduction: with purely atomic class
// conditionals the representation is a finite set of output tuples, merged at
// kMergeTol per coordinate.
CostReport ib_raw_atomic(const LabeledJoint& joint, const Network& net, double beta) {
  struct Cluster {
    std::vector<double> value;
    std::vector<double> class_mass;
  };
  std::vector<Cluster> clusters;
  auto near = [](std::span<const double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > kMergeTol) return false;
    }
    return true;
  };
  const std::size_t n_classes = joint.class_count();
  for (std::size_t c = 0; c < n_classes; ++c) {
    const LabeledClass& cls = joint.classes()[c];
    if (cls.conditional.has_continuous_part()) {
      throw MultivariateDependence(
          "no exact path: network is not scalar-reducible and the features are "
          "not discrete");
    }
    for (const PointMass& p : cls.conditional.points()) {
      std::vector<double> y = output(net, p.location);
      bool placed = false;
      for (Cluster& cl : clusters) {
        if (cl.value.size() == y.size() && near(cl.value, y)) {
          cl.class_mass[c] += p.mass;
          placed = true;
          break;
        }
      }
      if (!placed) {
        Cluster cl;
        cl.value = std::move(y);
        cl.class_mass.assign(n_classes, 0.0);
        cl.class_mass[c] = p.mass;
        clusters.push_back(std::move(cl));
      }
    }
  }
  std::vector<double> priors = priors_of(joint);
  std::vector<double> mix;
  double h_cond = 0.0;
  std::vector<std::vector<double>> per_class(n_classes);
  for (const Cluster& cl : clusters) {
    double m = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      m += priors[c] * cl.class_mass[c];
      per_class[c].push_back(cl.class_mass[c]);
    }
    mix.push_back(m);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    h_cond += priors[c] * entropy_bits(per_class[c]);
  }
  double h_mix = entropy_bits(mix);
  return finish_report("raw", beta, InfoValue::finite(h_mix),
                       InfoValue::finite(std::max(0.0, h_mix - h_cond)));
}

Interval direction_domain(const LabeledJoint& joint, std::span<const double> direction) {
  double t_lo = 0.0, t_hi = 0.0;
  bool first = true;
  for (const LabeledClass& c : joint.classes()) {
    std::vector<Interval> hull = c.conditional.support_hull();
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < hull.size(); ++j) {
      double a = direction[j] * hull[j].lo;
      double b = direction[j] * hull[j].hi;
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    if (first) {
      t_lo = lo;
      t_hi = hi;
      first = false;
    } else {
      t_lo = std::min(t_lo, lo);
      t_hi = std::max(t_hi, hi);
    }
  }
  double margin = 1e-9 + 0.005 * std::max(1.0, t_hi - t_lo);
  return {t_lo - margin, t_hi + margin};
}

std::vector<double> detect_direction(const Network& net) {
  const LayerParams& first = net.layer(0);
  std::vector<double> direction(first.in, 0.0);
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
    direction[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < first.in; ++i) direction[i] = first.weight(i, ref);
  }
  return direction;
}

}  // namespace

CostReport ib_raw(const LabeledJoint& joint, const Network& net, double beta) {
  if (net.output_width() == 1) {
    try {
      Interval dom = direction_domain(joint, detect_direction(net));
      return ib_raw(joint, reduce_to_scalar(net, dom), beta);
    } catch (const MultivariateDependence&) {
    } catch (const SmoothActivation&) {
    }
  }
  // Wide or irreducible representations still evaluate exactly when the
  // features are discrete: the representation is a finite set of tuples.
  return ib_raw_atomic(joint, net, beta);
}

CostReport ib_decision(const LabeledJoint& joint, const ScalarEncoder& encoder,
                       const DecisionRule& rule, double beta) {
  check_beta(beta);
  std::vector<HybridMeasure> reps = class_representations(joint, encoder);
  const std::size_t n_classes = joint.class_count();
  // P(estimate index | class) per class.
  std::vector<std::vector<double>> channel(n_classes);
  std::size_t n_outcomes = 0;
  if (rule.kind == DecisionRule::Kind::threshold) {
    if (n_classes != 2) {
      throw std::invalid_argument("threshold rule needs a binary problem");
    }
    n_outcomes = 2;
    for (std::size_t c = 0; c < n_classes; ++c) {
      double p1 = reps[c].mass_above(rule.level);
      channel[c] = {1.0 - p1, p1};
    }
  } else {
    // argmax over a single output always selects index 0.
    n_outcomes = 1;
    for (std::size_t c = 0; c < n_classes; ++c) channel[c] = {1.0};
  }
  std::vector<double> priors = priors_of(joint);
  std::vector<double> mix(n_outcomes, 0.0);
  double h_cond = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t k = 0; k < n_outcomes; ++k) mix[k] += priors[c] * channel[c][k];
    h_cond += priors[c] * entropy_bits(channel[c]);
  }
  double h_mix = entropy_bits(mix);
  // The estimate is a deterministic function of X, so I(X;estimate) = H(estimate).
  return finish_report("decision", beta, InfoValue::finite(h_mix),
                       InfoValue::finite(std::max(0.0, h_mix - h_cond)));
}

namespace {

// Mean of H_b over a uniform stretch of output values, by adaptive quadrature.
double mean_binary_entropy(double lo, double hi) {
  if (hi - lo <= 1e-15) return binary_entropy(0.5 * (lo + hi));
  double integral = adaptive_simpson([](double u) { return binary_entropy(u); }, lo,
                                     hi, 1e-10);
  return integral / (hi - lo);
}

}  // namespace

CostReport ib_probabilistic(const LabeledJoint& joint, const ScalarEncoder& encoder,
                            double beta) {
  check_beta(beta);
  if (joint.class_count() != 2) {
    throw NonProbabilisticOutput(
        "exact probabilistic costs need a binary problem with a scalar output");
  }
  std::vector<HybridMeasure> reps = class_representations(joint, encoder);
  // The scalar output is read as the probability of the higher label; it must
  // already live in [0,1], no silent renormalization.
  for (const HybridMeasure& rep : reps) {
    std::vector<Interval> hull = rep.support_hull();
    if (hull[0].lo < -1e-9 || hull[0].hi > 1.0 + 1e-9) {
      throw NonProbabilisticOutput("output support escapes [0,1]");
    }
  }
  std::vector<double> priors = priors_of(joint);
  double p1 = 0.0;
  double h_given_y = 0.0;
  double h_given_x = 0.0;
  for (std::size_t c = 0; c < reps.size(); ++c) {
    double mean_c = std::clamp(reps[c].scalar_mean(), 0.0, 1.0);
    p1 += priors[c] * mean_c;
    h_given_y += priors[c] * binary_entropy(mean_c);
    double hx = 0.0;
    for (const PointMass& p : reps[c].points()) {
      hx += p.mass * binary_entropy(std::clamp(p.location[0], 0.0, 1.0));
    }
    for (const UniformPiece& q : reps[c].pieces()) {
      double lo = std::clamp(q.box[0].lo, 0.0, 1.0);
      double hi = std::clamp(q.box[0].hi, 0.0, 1.0);
      hx += q.mass * mean_binary_entropy(lo, hi);
    }
    h_given_x += priors[c] * hx;
  }
  double h_est = binary_entropy(p1);
  InfoValue compression = InfoValue::finite(std::max(0.0, h_est - h_given_x));
  InfoValue precision = InfoValue::finite(std::max(0.0, h_est - h_given_y));
  return finish_report("probabilistic", beta, compression, precision);
}

namespace {

// Joint distribution of (input cube, quantized output) for one labeled class,
// accumulated into `joint_map`. The encoder depends on each piece through at
// most one free coordinate, so cube enumeration stays a product.
void accumulate_quantized_joint(const HybridMeasure& mu, const ScalarEncoder& enc,
                                const QuantizerSpec& q_x, const QuantizerSpec& q_l,
                                double scale,
                                std::map<std::pair<CubeIndex, std::int64_t>, double>& joint_map) {
  const std::size_t dim = mu.dimension();
  for (const PointMass& p : mu.points()) {
    CubeIndex z(dim);
    for (std::size_t j = 0; j < dim; ++j) z[j] = q_x.cell(p.location[j], j);
    double t = 0.0;
    for (std::size_t j = 0; j < dim; ++j) t += enc.direction[j] * p.location[j];
    joint_map[{z, q_l.cell(enc.profile(t))}] += scale * p.mass;
  }
  for (const UniformPiece& piece : mu.pieces()) {
    // Locate the single coordinate that drives the encoder.
    int active = -1;
    double base = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (enc.direction[j] != 0.0 && !piece.box[j].degenerate()) {
        if (active >= 0) {
          throw MultivariateDependence("piece drives the encoder through two coordinates");
        }
        active = static_cast<int>(j);
      } else {
        base += enc.direction[j] * piece.box[j].lo;
      }
    }
    // Cell lists for the passive coordinates.
    std::vector<std::vector<std::pair<std::int64_t, double>>> passive(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      if (static_cast<int>(j) == active) continue;
      const Interval& iv = piece.box[j];
      if (iv.degenerate()) {
        passive[j] = {{q_x.cell(iv.lo, j), 1.0}};
        continue;
      }
      std::int64_t z_lo = q_x.cell(iv.lo, j);
      std::int64_t z_hi = q_x.cell(iv.hi, j);
      const double m = static_cast<double>(q_x.resolution);
      const double o = q_x.origin_at(j);
      for (std::int64_t z = z_lo; z <= z_hi; ++z) {
        double ov = std::min(iv.hi, o + static_cast<double>(z + 1) / m) -
                    std::max(iv.lo, o + static_cast<double>(z) / m);
        if (ov > 0.0) passive[j].emplace_back(z, ov / iv.length());
      }
    }
    // Refined cells along the active coordinate with their output cell.
    struct ActiveCell {
      std::int64_t zx;
      std::int64_t zl;
      double frac;
    };
    std::vector<ActiveCell> active_cells;
    if (active < 0) {
      double t = std::clamp(base, enc.profile.domain_lo(), enc.profile.domain_hi());
      active_cells.push_back({0, q_l.cell(enc.profile(t)), 1.0});
    } else {
      const Interval& iv = piece.box[static_cast<std::size_t>(active)];
      const double u = enc.direction[static_cast<std::size_t>(active)];
      const double mx = static_cast<double>(q_x.resolution);
      const double ox = q_x.origin_at(static_cast<std::size_t>(active));
      std::vector<double> cuts{iv.lo, iv.hi};
      for (std::int64_t z = q_x.cell(iv.lo, static_cast<std::size_t>(active)) + 1;
           z <= q_x.cell(iv.hi, static_cast<std::size_t>(active)); ++z) {
        double b = ox + static_cast<double>(z) / mx;
        if (b > iv.lo && b < iv.hi) cuts.push_back(b);
      }
      for (double b : enc.profile.breakpoints()) {
        double x = (b - base) / u;
        if (x > iv.lo && x < iv.hi) cuts.push_back(x);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      // Split each affine stretch at the preimages of the output grid.
      std::vector<double> refined;
      const double ml = static_cast<double>(q_l.resolution);
      const double ol = q_l.origin_at(0);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        refined.push_back(cuts[i]);
        double t_mid = base + u * 0.5 * (cuts[i] + cuts[i + 1]);
        const LinearSegment& s =
            enc.profile.segments()[enc.profile.segment_index(t_mid)];
        double eff_slope = s.slope * u;
        if (eff_slope == 0.0) continue;
        double ya = s.at(base + u * cuts[i]);
        double yb = s.at(base + u * cuts[i + 1]);
        std::int64_t z_lo = q_l.cell(std::min(ya, yb));
        std::int64_t z_hi = q_l.cell(std::max(ya, yb));
        for (std::int64_t z = z_lo + 1; z <= z_hi; ++z) {
          double level = ol + static_cast<double>(z) / ml;
          double x = ((level - s.intercept) / s.slope - base) / u;
          if (x > cuts[i] && x < cuts[i + 1]) refined.push_back(x);
        }
      }
      refined.push_back(cuts.back());
      std::sort(refined.begin(), refined.end());
      refined.erase(std::unique(refined.begin(), refined.end()), refined.end());
      for (std::size_t i = 0; i + 1 < refined.size(); ++i) {
        double len = refined[i + 1] - refined[i];
        if (len <= 0.0) continue;
        double mid = 0.5 * (refined[i] + refined[i + 1]);
        double t_mid = base + u * mid;
        const LinearSegment& s =
            enc.profile.segments()[enc.profile.segment_index(t_mid)];
        active_cells.push_back({q_x.cell(mid, static_cast<std::size_t>(active)),
                                q_l.cell(s.at(t_mid)), len / iv.length()});
      }
    }
    // Cross product of passive cells with the refined active cells.
    std::vector<std::size_t> idx(dim, 0);
    CubeIndex z(dim);
    for (const ActiveCell& ac : active_cells) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        double frac = ac.frac;
        for (std::size_t j = 0; j < dim; ++j) {
          if (static_cast<int>(j) == active) {
            z[j] = ac.zx;
          } else {
            z[j] = passive[j][idx[j]].first;
            frac *= passive[j][idx[j]].second;
          }
        }
        joint_map[{z, ac.zl}] += scale * piece.mass * frac;
        std::size_t j = 0;
        while (j < dim) {
          if (static_cast<int>(j) == active) {
            ++j;
            continue;
          }
          if (++idx[j] < passive[j].size()) break;
          idx[j] = 0;
          ++j;
        }
        if (j == dim) break;
      }
    }
  }
}

}  // namespace

CostReport ib_quantized(const LabeledJoint& joint, const ScalarEncoder& encoder,
                        const std::optional<QuantizerSpec>& q_x,
                        const QuantizerSpec& q_l, const QuantizerSpec& q_l_prime,
                        double beta) {
  check_beta(beta);
  std::vector<HybridMeasure> reps = class_representations(joint, encoder);
  HybridMeasure mix = mixture_representation(joint, reps);

  InfoValue compression;
  if (!q_x.has_value()) {
    // Identity input quantizer: the quantized output is a deterministic
    // function of X, so the compression term is its entropy.
    compression = InfoValue::finite(quantize_measure(mix, q_l).entropy());
  } else {
    std::map<std::pair<CubeIndex, std::int64_t>, double> joint_map;
    for (const LabeledClass& c : joint.classes()) {
      accumulate_quantized_joint(c.conditional, encoder, *q_x, q_l, c.prior,
                                 joint_map);
    }
    std::map<CubeIndex, double> px;
    std::map<std::int64_t, double> pl;
    std::vector<double> pj;
    for (const auto& [key, p] : joint_map) {
      px[key.first] += p;
      pl[key.second] += p;
      pj.push_back(p);
    }
    std::vector<double> vx, vl;
    for (const auto& [k, p] : px) vx.push_back(p);
    for (const auto& [k, p] : pl) vl.push_back(p);
    compression = InfoValue::finite(
        std::max(0.0, entropy_bits(vx) + entropy_bits(vl) - entropy_bits(pj)));
  }

  std::vector<ClassPmf<CubeIndex>> class_pmfs;
  for (std::size_t c = 0; c < reps.size(); ++c) {
    class_pmfs.push_back({joint.classes()[c].label, joint.classes()[c].prior,
                          quantize_measure(reps[c], q_l_prime)});
  }
  InfoValue precision =
      InfoValue::finite(mi_discrete<CubeIndex>(class_pmfs));
  return finish_report("quantized", beta, compression, precision);
}

// ---------------------------------------------------------------------------
// Noisy costs: exact mixture densities of L + eta.

namespace {

struct ScalarMixture {
  std::vector<ScalarAtom> atoms;
  struct Box {
    double lo, hi, density;
  };
  std::vector<Box> boxes;

  double mass() const {
    double m = 0.0;
    for (const ScalarAtom& a : atoms) m += a.mass;
    for (const Box& b : boxes) m += b.density * (b.hi - b.lo);
    return m;
  }
};

ScalarMixture mixture_of(const HybridMeasure& mu, double scale) {
  ScalarMixture mix;
  for (const PointMass& p : mu.points()) mix.atoms.push_back({p.location[0], scale * p.mass});
  for (const UniformPiece& q : mu.pieces()) {
    mix.boxes.push_back({q.box[0].lo, q.box[0].hi, scale * q.mass / q.box[0].length()});
  }
  return mix;
}

// Differential entropy in bits of the mixture smoothed with centered uniform
// noise of width w. The smoothed density is piecewise linear, so the entropy
// integral has a closed form per stretch.
double uniform_smoothed_entropy(const ScalarMixture& mix, double w) {
  std::vector<double> cuts;
  for (const ScalarAtom& a : mix.atoms) {
    cuts.push_back(a.location - 0.5 * w);
    cuts.push_back(a.location + 0.5 * w);
  }
  for (const ScalarMixture::Box& b : mix.boxes) {
    cuts.push_back(b.lo - 0.5 * w);
    cuts.push_back(b.lo + 0.5 * w);
    cuts.push_back(b.hi - 0.5 * w);
    cuts.push_back(b.hi + 0.5 * w);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return b - a <= 1e-15; }),
             cuts.end());
  double h_nats = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double z0 = cuts[i], z1 = cuts[i + 1];
    double mid = 0.5 * (z0 + z1);
    // Accumulate the affine density A z + B on this stretch.
    double A = 0.0, B = 0.0;
    for (const ScalarAtom& a : mix.atoms) {
      if (mid > a.location - 0.5 * w && mid < a.location + 0.5 * w) {
        B += a.mass / w;
      }
    }
    for (const ScalarMixture::Box& b : mix.boxes) {
      if (mid <= b.lo - 0.5 * w || mid >= b.hi + 0.5 * w) continue;
      // (min(z + w/2, hi) - max(z - w/2, lo)) * density / w
      double su, cu, sl, cl;
      if (mid < b.hi - 0.5 * w) {
        su = 1.0;
        cu = 0.5 * w;
      } else {
        su = 0.0;
        cu = b.hi;
      }
      if (mid > b.lo + 0.5 * w) {
        sl = 1.0;
        cl = -0.5 * w;
      } else {
        sl = 0.0;
        cl = b.lo;
      }
      A += b.density / w * (su - sl);
      B += b.density / w * (cu - cl);
    }
    double ta = A * z0 + B;
    double tb = A * z1 + B;
    if (ta <= 0.0 && tb <= 0.0) continue;
    auto antider = [](double t) {
      // integral of t ln t dt
      return t <= 0.0 ? 0.0 : 0.25 * t * t * (2.0 * std::log(t) - 1.0);
    };
    if (std::abs(A) * (z1 - z0) <= 1e-14 * std::max(1.0, std::abs(B))) {
      double q = 0.5 * (ta + tb);
      if (q > 0.0) h_nats -= (z1 - z0) * q * std::log(q);
    } else {
      h_nats -= (antider(tb) - antider(ta)) / A;
    }
  }
  return h_nats / kLn2;
}

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

double gaussian_pdf(double x, double sigma) {
  double u = x / sigma;
  return std::exp(-0.5 * u * u) / (sigma * 2.5066282746310002);
}

double gaussian_smoothed_entropy(const ScalarMixture& mix, double sigma) {
  auto pdf = [&](double z) {
    double q = 0.0;
    for (const ScalarAtom& a : mix.atoms) q += a.mass * gaussian_pdf(z - a.location, sigma);
    for (const ScalarMixture::Box& b : mix.boxes) {
      q += b.density * (gaussian_cdf((b.hi - z) / sigma) - gaussian_cdf((b.lo - z) / sigma));
    }
    return q;
  };
  // Integrate between structure knots so narrow bumps are not missed.
  std::vector<double> knots;
  for (const ScalarAtom& a : mix.atoms) {
    for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
      knots.push_back(a.location + k * sigma);
    }
  }
  for (const ScalarMixture::Box& b : mix.boxes) {
    for (double edge : {b.lo, b.hi}) {
      for (double k : {-8.0, -4.0, 0.0, 4.0, 8.0}) knots.push_back(edge + k * sigma);
    }
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  double h_nats = 0.0;
  auto integrand = [&](double z) {
    double q = pdf(z);
    return q > 0.0 ? -q * std::log(q) : 0.0;
  };
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    h_nats += adaptive_simpson(integrand, knots[i], knots[i + 1], 1e-11);
  }
  return h_nats / kLn2;
}

double smoothed_entropy(const ScalarMixture& mix, const NoiseSpec& noise) {
  if (noise.family == NoiseFamily::uniform) {
    return uniform_smoothed_entropy(mix, noise.param);
  }
  return gaussian_smoothed_entropy(mix, noise.param);
}

double noise_entropy_bits(const NoiseSpec& noise) {
  if (noise.family == NoiseFamily::uniform) return std::log2(noise.param);
  // 0.5 log2(2 pi e sigma^2)
  return 0.5 * std::log2(2.0 * 3.14159265358979323846 * 2.718281828459045 *
                         noise.param * noise.param);
}

ScalarMixture merge_mixtures(std::span<const ScalarMixture> parts,
                             std::span<const double> weights) {
  ScalarMixture all;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (ScalarAtom a : parts[i].atoms) {
      a.mass *= weights[i];
      all.atoms.push_back(a);
    }
    for (ScalarMixture::Box b : parts[i].boxes) {
      b.density *= weights[i];
      all.boxes.push_back(b);
    }
  }
  return all;
}

struct NoisyTerms {
  double compression = 0.0;
  double precision = 0.0;
};

NoisyTerms noisy_terms_exact(std::span<const ScalarMixture> class_mixes,
                             std::span<const double> priors, const NoiseSpec& eta,
                             const NoiseSpec& eta_prime) {
  ScalarMixture mixture = merge_mixtures(class_mixes, priors);
  NoisyTerms t;
  // Deterministic encoder: the conditional entropy of L + eta given X is the
  // noise entropy, independent of x.
  t.compression =
      std::max(0.0, smoothed_entropy(mixture, eta) - noise_entropy_bits(eta));
  double h_mix_prime = smoothed_entropy(mixture, eta_prime);
  double h_cond = 0.0;
  for (std::size_t c = 0; c < class_mixes.size(); ++c) {
    if (priors[c] > 0.0) {
      h_cond += priors[c] * smoothed_entropy(class_mixes[c], eta_prime);
    }
  }
  t.precision = std::max(0.0, h_mix_prime - h_cond);
  return t;
}

}  // namespace

CostReport ib_noisy(const LabeledJoint& joint, const ScalarEncoder& encoder,
                    const NoiseSpec& eta, const NoiseSpec& eta_prime, double beta,
                    std::size_t n_mc, std::uint64_t seed) {
  check_beta(beta);
  if (!eta.active() || !eta_prime.active()) {
    throw std::invalid_argument("noisy costs need absolutely continuous noise");
  }
  std::vector<HybridMeasure> reps = class_representations(joint, encoder);
  std::vector<double> priors = priors_of(joint);
  std::size_t components = 0;
  for (const HybridMeasure& rep : reps) {
    components += rep.points().size() + rep.pieces().size();
  }
  if (components <= kExactComponentLimit) {
    std::vector<ScalarMixture> mixes;
    for (const HybridMeasure& rep : reps) mixes.push_back(mixture_of(rep, 1.0));
    NoisyTerms t = noisy_terms_exact(mixes, priors, eta, eta_prime);
    CostReport r = finish_report("noisy", beta, InfoValue::finite(t.compression),
                                 InfoValue::finite(t.precision));
    r.compression_se = 0.0;
    r.precision_se = 0.0;
    return r;
  }
  // Monte Carlo over inputs: split the draws into batches, estimate both
  // terms per batch from the empirical output atoms, and report spread.
  const std::size_t batches = 10;
  if (n_mc < batches * 10) throw std::invalid_argument("n_mc too small");
  Dataset data = sample(joint, n_mc, seed);
  std::map<int, std::size_t> label_to_class;
  for (std::size_t c = 0; c < joint.class_count(); ++c) {
    label_to_class[joint.classes()[c].label] = c;
  }
  std::vector<double> comp_vals, prec_vals;
  const std::size_t per = n_mc / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<ScalarMixture> mixes(joint.class_count());
    std::vector<std::size_t> counts(joint.class_count(), 0);
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      const Sample& s = data.samples[i];
      std::size_t c = label_to_class[s.label];
      mixes[c].atoms.push_back({encoder(s.x), 1.0});
      counts[c] += 1;
    }
    std::vector<double> weights(joint.class_count());
    for (std::size_t c = 0; c < joint.class_count(); ++c) {
      double total = static_cast<double>(per);
      weights[c] = static_cast<double>(counts[c]) / total;
      for (ScalarAtom& a : mixes[c].atoms) {
        a.mass = counts[c] ? 1.0 / static_cast<double>(counts[c]) : 0.0;
      }
    }
    NoisyTerms t = noisy_terms_exact(mixes, weights, eta, eta_prime);
    comp_vals.push_back(t.compression);
    prec_vals.push_back(t.precision);
  }
  auto mean_se = [](std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    return std::pair<double, double>(mean,
                                     std::sqrt(var / static_cast<double>(v.size())));
  };
  auto [cm, cse] = mean_se(comp_vals);
  auto [pm, pse] = mean_se(prec_vals);
  CostReport r = finish_report("noisy", beta, InfoValue::finite(std::max(0.0, cm)),
                               InfoValue::finite(std::max(0.0, pm)));
  r.compression_se = cse;
  r.precision_se = pse;
  return r;
}

CostReport evaluate_cost(const LabeledJoint& joint, const ScalarEncoder& encoder,
                         const CostSpec& spec) {
  switch (spec.variant) {
    case CostSpec::Variant::raw:
      return ib_raw(joint, encoder, spec.beta);
    case CostSpec::Variant::decision:
      return ib_decision(joint, encoder, spec.rule, spec.beta);
    case CostSpec::Variant::probabilistic:
      return ib_probabilistic(joint, encoder, spec.beta);
    case CostSpec::Variant::quantized:
      return ib_quantized(joint, encoder, spec.q_x, spec.q_l, spec.q_l_prime,
                          spec.beta);
    case CostSpec::Variant::noisy:
      return ib_noisy(joint, encoder, spec.eta, spec.eta_prime, spec.beta,
                      spec.n_mc, spec.seed);
  }
  throw std::invalid_argument("unknown cost variant");
}

CostReport evaluate_cost(const LabeledJoint& joint, const Network& net,
                         const CostSpec& spec) {
  const std::size_t depth = net.depth();
  std::size_t layer = spec.layer == static_cast<std::size_t>(-1) ? depth : spec.layer;
  if (layer < 1 || layer > depth) throw std::invalid_argument("layer out of range");
  Network prefix = net;
  if (layer < depth) {
    std::vector<LayerParams> layers(net.layers().begin(),
                                    net.layers().begin() + static_cast<long>(layer));
    prefix = Network(std::move(layers));
  }
  if (spec.variant == CostSpec::Variant::raw) {
    return ib_raw(joint, prefix, spec.beta);
  }
  Interval dom = direction_domain(joint, detect_direction(prefix));
  return evaluate_cost(joint, reduce_to_scalar(prefix, dom), spec);
}

Divergences divergences(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("pmf size mismatch");
  double kl = 0.0;
  double h = 0.0;
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("negative probability");
    sp += p[i];
    sq += q[i];
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) {
        throw AbsoluteContinuityViolation("q vanishes where p is positive");
      }
      kl += p[i] * std::log2(p[i] / q[i]);
      h -= p[i] * std::log2(p[i]);
    }
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw std::invalid_argument("pmfs must sum to 1");
  }
  return {std::max(0.0, kl), std::max(0.0, h) + std::max(0.0, kl)};
}

BoundReport precision_bound_report(const std::vector<std::vector<double>>& joint_yl,
                                   const std::vector<std::vector<double>>& decoder_lt,
                                   const std::vector<std::vector<double>>& qrule_ty) {
  const std::size_t ny = joint_yl.size();
  if (ny == 0) throw std::invalid_argument("empty joint");
  const std::size_t nl = joint_yl.front().size();
  if (nl == 0 || decoder_lt.size() != nl) {
    throw std::invalid_argument("decoder row count must match L alphabet");
  }
  const std::size_t nt = decoder_lt.front().size();
  if (qrule_ty.size() != nt) {
    throw std::invalid_argument("q rule row count must match decoder output");
  }
  double total = 0.0;
  for (const auto& row : joint_yl) {
    if (row.size() != nl) throw std::invalid_argument("ragged joint");
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("negative joint entry");
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("joint mass must be 1");
  for (const auto& row : decoder_lt) {
    if (row.size() != nt) throw std::invalid_argument("ragged decoder");
    double s = 0.0;
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("negative decoder entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("decoder rows must sum to 1");
  }
  for (const auto& row : qrule_ty) {
    if (row.size() != ny) throw std::invalid_argument("ragged q rule");
    double s = 0.0;
    for (double v : row) {
      if (!(v > 0.0)) {
        throw AbsoluteContinuityViolation("q rule must be strictly positive");
      }
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("q rows must sum to 1");
  }

  std::vector<double> py(ny, 0.0), pl(nl, 0.0);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t l = 0; l < nl; ++l) {
      py[y] += joint_yl[y][l];
      pl[l] += joint_yl[y][l];
    }
  }
  std::vector<std::vector<double>> joint_yt(ny, std::vector<double>(nt, 0.0));
  std::vector<double> pt(nt, 0.0);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t l = 0; l < nl; ++l) {
      for (std::size_t t = 0; t < nt; ++t) {
        joint_yt[y][t] += joint_yl[y][l] * decoder_lt[l][t];
      }
    }
    for (std::size_t t = 0; t < nt; ++t) pt[t] += joint_yt[y][t];
  }

  auto mi = [](const std::vector<std::vector<double>>& j, const std::vector<double>& pa,
               const std::vector<double>& pb) {
    double v = 0.0;
    for (std::size_t a = 0; a < pa.size(); ++a) {
      for (std::size_t b = 0; b < pb.size(); ++b) {
        if (j[a][b] > 0.0 && pa[a] > 0.0 && pb[b] > 0.0) {
          v += j[a][b] * std::log2(j[a][b] / (pa[a] * pb[b]));
        }
      }
    }
    return std::max(0.0, v);
  };

  BoundReport r;
  r.h_y = entropy_bits(py);
  r.i_y_l = mi(joint_yl, py, pl);
  r.i_y_ytilde = mi(joint_yt, py, pt);
  // Averaged variational posterior Q(y | l) = sum_t decoder(t|l) q(y|t).
  double ce_l = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t l = 0; l < nl; ++l) {
      if (joint_yl[y][l] <= 0.0) continue;
      double qy = 0.0;
      for (std::size_t t = 0; t < nt; ++t) qy += decoder_lt[l][t] * qrule_ty[t][y];
      ce_l -= joint_yl[y][l] * std::log2(qy);
    }
  }
  double ce_t = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t t = 0; t < nt; ++t) {
      if (joint_yt[y][t] > 0.0) ce_t -= joint_yt[y][t] * std::log2(qrule_ty[t][y]);
    }
  }
  r.cross_entropy_l = ce_l;
  r.cross_entropy_ytilde = ce_t;
  r.lower_bound = r.h_y - ce_l;
  return r;
}

}  // namespace ibex
