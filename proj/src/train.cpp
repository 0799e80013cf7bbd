#include "ibex/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ibex/errors.hpp"
#include "ibex/info.hpp"
#include "ibex/rng.hpp"

namespace ibex {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

std::map<int, std::size_t> label_index_map(const LabeledJoint& joint) {
  std::map<int, std::size_t> m;
  for (std::size_t c = 0; c < joint.class_count(); ++c) {
    m[joint.classes()[c].label] = c;
  }
  return m;
}

// Probability vector read off the network output: a scalar output is the
// probability of the higher label, wider outputs go through a softmax.
std::vector<double> output_probabilities(std::span<const double> out,
                                         std::size_t n_classes) {
  if (out.size() == 1) {
    if (n_classes != 2) {
      throw NonProbabilisticOutput("scalar output needs a binary problem");
    }
    double p = out[0];
    if (p < -1e-6 || p > 1.0 + 1e-6) {
      throw NonProbabilisticOutput("scalar output escapes [0,1]");
    }
    p = std::clamp(p, 0.0, 1.0);
    return {1.0 - p, p};
  }
  if (out.size() != n_classes) {
    throw NonProbabilisticOutput("output width must match the label count");
  }
  double mx = *std::max_element(out.begin(), out.end());
  std::vector<double> p(out.size());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    p[i] = std::exp(out[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(std::span<const double> v) {
  MeanSe r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - r.mean) * (x - r.mean);
  var /= static_cast<double>(v.size() - 1);
  r.se = std::sqrt(var / static_cast<double>(v.size()));
  return r;
}

}  // namespace

std::string TrainTrace::to_csv() const {
  std::ostringstream out;
  out << "step,loss,compression,precision,total\n";
  std::size_t next_eval = 0;
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f", i + 1, losses[i]);
    out << buf;
    if (next_eval < evals.size() && evals[next_eval].first == i + 1) {
      const CostReport& r = evals[next_eval].second;
      out << ',' << r.compression.to_csv() << ',' << r.precision.to_csv() << ','
          << r.total.to_csv();
      ++next_eval;
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<double> finite_diff_grad(
    const std::function<InfoValue(const Network&)>& costfn, const Network& net,
    double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  std::vector<double> grad(net.parameter_count(), 0.0);
  Network probe = net;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    double theta = net.get_parameter(k);
    probe.set_parameter(k, theta + epsilon);
    InfoValue up = costfn(probe);
    probe.set_parameter(k, theta - epsilon);
    InfoValue down = costfn(probe);
    probe.set_parameter(k, theta);
    if (up.is_infinite() || down.is_infinite()) {
      throw InfiniteCost("cost is infinite at a finite-difference probe");
    }
    grad[k] = (up.bits() - down.bits()) / (2.0 * epsilon);
  }
  return grad;
}

namespace {

// Smoothed-mixture helpers local to the Monte Carlo estimators: a batch of
// representation samples is treated as an equal-mass atom mixture.
double atom_mixture_entropy(std::span<const double> atoms, const NoiseSpec& noise);

double uniform_atoms_entropy(std::vector<double> locs, double w) {
  std::vector<double> cuts;
  cuts.reserve(2 * locs.size());
  for (double a : locs) {
    cuts.push_back(a - 0.5 * w);
    cuts.push_back(a + 0.5 * w);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return b - a <= 1e-15; }),
             cuts.end());
  std::sort(locs.begin(), locs.end());
  const double unit = 1.0 / (static_cast<double>(locs.size()) * w);
  double h_nats = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    auto lo = std::lower_bound(locs.begin(), locs.end(), mid - 0.5 * w);
    auto hi = std::upper_bound(locs.begin(), locs.end(), mid + 0.5 * w);
    double q = unit * static_cast<double>(hi - lo);
    if (q > 0.0) h_nats -= (cuts[i + 1] - cuts[i]) * q * std::log(q);
  }
  return h_nats / kLn2;
}

double gaussian_atoms_entropy(std::vector<double> locs, double sigma) {
  std::sort(locs.begin(), locs.end());
  const double n = static_cast<double>(locs.size());
  // -mean log q at a dense grid via trapezoid over knot spans; the density is
  // a sum of Gaussians, integrated numerically.
  auto pdf = [&](double z) {
    // Only atoms within 10 sigma matter.
    auto lo = std::lower_bound(locs.begin(), locs.end(), z - 10.0 * sigma);
    auto hi = std::upper_bound(locs.begin(), locs.end(), z + 10.0 * sigma);
    double q = 0.0;
    for (auto it = lo; it != hi; ++it) {
      double u = (z - *it) / sigma;
      q += std::exp(-0.5 * u * u);
    }
    return q / (n * sigma * 2.5066282746310002);
  };
  double lo = locs.front() - 8.0 * sigma;
  double hi = locs.back() + 8.0 * sigma;
  // Fixed fine grid; adequate for estimator work (the exact path lives in
  // ib_noisy).
  const std::size_t grid = 4096;
  double h_nats = 0.0;
  double step = (hi - lo) / static_cast<double>(grid);
  double prev = 0.0;
  for (std::size_t i = 0; i <= grid; ++i) {
    double z = lo + step * static_cast<double>(i);
    double q = pdf(z);
    double val = q > 0.0 ? -q * std::log(q) : 0.0;
    if (i > 0) h_nats += 0.5 * (prev + val) * step;
    prev = val;
  }
  return h_nats / kLn2;
}

double atom_mixture_entropy(std::span<const double> atoms, const NoiseSpec& noise) {
  std::vector<double> locs(atoms.begin(), atoms.end());
  if (noise.family == NoiseFamily::uniform) {
    return uniform_atoms_entropy(std::move(locs), noise.param);
  }
  return gaussian_atoms_entropy(std::move(locs), noise.param);
}

double noise_diff_entropy(const NoiseSpec& noise) {
  if (noise.family == NoiseFamily::uniform) return std::log2(noise.param);
  return 0.5 * std::log2(2.0 * 3.14159265358979323846 * 2.718281828459045 *
                         noise.param * noise.param);
}

// Miller-Madow support correction for the small-alphabet regime, where the
// smoothed empirical entropy reduces to a plug-in discrete entropy.
double support_correction(std::span<const double> atoms) {
  std::vector<double> locs(atoms.begin(), atoms.end());
  std::sort(locs.begin(), locs.end());
  std::size_t distinct = locs.empty() ? 0 : 1;
  for (std::size_t i = 1; i < locs.size(); ++i) {
    if (locs[i] - locs[i - 1] > 1e-9) ++distinct;
  }
  if (distinct == 0 || distinct > locs.size() / 10) return 0.0;
  return static_cast<double>(distinct - 1) /
         (2.0 * static_cast<double>(locs.size()) * kLn2);
}

// Delta-method bias correction for the entropy of estimated mean
// probabilities: E[H(p_hat)] ~ H(p) - sum_k Var(p_hat_k) / (2 p_k ln 2).
double mean_entropy_correction(std::span<const double> means,
                               std::span<const double> mean_variances) {
  double c = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k] > 1e-9) c += mean_variances[k] / (2.0 * means[k] * kLn2);
  }
  return c;
}

}  // namespace

CostReport mc_cost(const LabeledJoint& joint, const Network& net, const CostSpec& spec,
                   std::size_t n, std::uint64_t seed, std::size_t noise_draws) {
  if (spec.variant != CostSpec::Variant::noisy &&
      spec.variant != CostSpec::Variant::probabilistic) {
    throw std::invalid_argument("mc_cost handles noisy and probabilistic costs");
  }
  if (n < 100) throw std::invalid_argument("mc_cost needs n >= 100");
  if (noise_draws == 0) noise_draws = 1;
  if (!net.stochastic()) noise_draws = 1;
  const std::size_t batches = 10;
  const std::size_t per = n / batches;
  const std::size_t n_classes = joint.class_count();
  Dataset data = sample(joint, per * batches, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::map<int, std::size_t> to_class = label_index_map(joint);

  std::vector<double> comp_vals, prec_vals;
  for (std::size_t b = 0; b < batches; ++b) {
    if (spec.variant == CostSpec::Variant::noisy) {
      std::vector<std::vector<double>> class_atoms(n_classes);
      double h_cond_eta = 0.0;   // mean conditional entropy of L+eta given x
      double h_cond_eta2 = 0.0;  // unused unless the net is stochastic
      std::vector<double> all;
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
        const Sample& s = data.samples[i];
        std::vector<double> draws(noise_draws);
        for (std::size_t d = 0; d < noise_draws; ++d) {
          std::vector<double> out =
              net.stochastic() ? output(net, s.x, rng.next_u64()) : output(net, s.x);
          if (out.size() != 1) {
            throw std::invalid_argument("noisy Monte Carlo needs a scalar output");
          }
          draws[d] = out[0];
        }
        if (net.stochastic()) {
          h_cond_eta += atom_mixture_entropy(draws, spec.eta);
          h_cond_eta2 += atom_mixture_entropy(draws, spec.eta_prime);
        }
        for (double v : draws) {
          class_atoms[to_class[s.label]].push_back(v);
          all.push_back(v);
        }
      }
      double h_all_eta = atom_mixture_entropy(all, spec.eta) + support_correction(all);
      double h_all_eta2 =
          atom_mixture_entropy(all, spec.eta_prime) + support_correction(all);
      double cond_eta = net.stochastic() ? h_cond_eta / static_cast<double>(per)
                                         : noise_diff_entropy(spec.eta);
      comp_vals.push_back(std::max(0.0, h_all_eta - cond_eta));
      double h_cond_class = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        if (class_atoms[c].empty()) continue;
        double w = static_cast<double>(class_atoms[c].size()) /
                   static_cast<double>(all.size());
        h_cond_class += w * (atom_mixture_entropy(class_atoms[c], spec.eta_prime) +
                             support_correction(class_atoms[c]));
      }
      prec_vals.push_back(std::max(0.0, h_all_eta2 - h_cond_class));
      (void)h_cond_eta2;
    } else {
      std::vector<std::vector<double>> class_sum(n_classes,
                                                 std::vector<double>(n_classes, 0.0));
      std::vector<std::vector<double>> class_sumsq(
          n_classes, std::vector<double>(n_classes, 0.0));
      std::vector<double> all_sum(n_classes, 0.0), all_sumsq(n_classes, 0.0);
      std::vector<std::size_t> counts(n_classes, 0);
      double mean_h_given_x = 0.0;
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
        const Sample& s = data.samples[i];
        std::vector<double> p_acc(n_classes, 0.0);
        double h_inner = 0.0;
        for (std::size_t d = 0; d < noise_draws; ++d) {
          std::vector<double> out =
              net.stochastic() ? output(net, s.x, rng.next_u64()) : output(net, s.x);
          std::vector<double> p = output_probabilities(out, n_classes);
          for (std::size_t k = 0; k < n_classes; ++k) p_acc[k] += p[k];
          h_inner += entropy_bits(p);
        }
        for (double& v : p_acc) v /= static_cast<double>(noise_draws);
        mean_h_given_x += h_inner / static_cast<double>(noise_draws);
        std::size_t c = to_class[s.label];
        for (std::size_t k = 0; k < n_classes; ++k) {
          class_sum[c][k] += p_acc[k];
          class_sumsq[c][k] += p_acc[k] * p_acc[k];
          all_sum[k] += p_acc[k];
          all_sumsq[k] += p_acc[k] * p_acc[k];
        }
        counts[c] += 1;
      }
      mean_h_given_x /= static_cast<double>(per);
      auto mean_var = [](double sum, double sumsq, std::size_t n) {
        double mean = sum / static_cast<double>(n);
        if (n < 2) return std::pair<double, double>(mean, 0.0);
        double var = (sumsq - static_cast<double>(n) * mean * mean) /
                     static_cast<double>(n - 1);
        return std::pair<double, double>(mean, std::max(0.0, var) /
                                                   static_cast<double>(n));
      };
      std::vector<double> mix(n_classes, 0.0), mix_var(n_classes, 0.0);
      for (std::size_t k = 0; k < n_classes; ++k) {
        auto [m, v] = mean_var(all_sum[k], all_sumsq[k], per);
        mix[k] = m;
        mix_var[k] = v;
      }
      double h_given_y = 0.0;
      for (std::size_t c = 0; c < n_classes; ++c) {
        if (counts[c] == 0) continue;
        double w = static_cast<double>(counts[c]) / static_cast<double>(per);
        std::vector<double> mean_c(n_classes), var_c(n_classes);
        for (std::size_t k = 0; k < n_classes; ++k) {
          auto [m, v] = mean_var(class_sum[c][k], class_sumsq[c][k], counts[c]);
          mean_c[k] = m;
          var_c[k] = v;
        }
        h_given_y += w * (entropy_bits(mean_c) +
                          mean_entropy_correction(mean_c, var_c));
      }
      double h_est = entropy_bits(mix) + mean_entropy_correction(mix, mix_var);
      comp_vals.push_back(std::max(0.0, h_est - mean_h_given_x));
      prec_vals.push_back(std::max(0.0, h_est - h_given_y));
    }
  }
  MeanSe cm = mean_se(comp_vals);
  MeanSe pm = mean_se(prec_vals);
  CostReport r;
  r.variant = spec.variant == CostSpec::Variant::noisy ? "noisy" : "probabilistic";
  r.beta = spec.beta;
  r.compression = InfoValue::finite(std::max(0.0, cm.mean));
  r.precision = InfoValue::finite(std::max(0.0, pm.mean));
  r.total = InfoValue::signed_value(cm.mean - spec.beta * pm.mean);
  r.compression_se = cm.se;
  r.precision_se = pm.se;
  return r;
}

double decision_mi_mc(const LabeledJoint& joint, const Network& net,
                      const DecisionRule& rule, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("n must be positive");
  const std::size_t n_classes = joint.class_count();
  Dataset data = sample(joint, n, seed);
  Rng rng(seed ^ 0xa5a5a5a55a5a5a5aull);
  std::map<int, std::size_t> to_class = label_index_map(joint);
  std::map<std::size_t, std::map<std::size_t, double>> counts;
  std::vector<double> class_counts(n_classes, 0.0);
  for (const Sample& s : data.samples) {
    std::vector<double> out =
        net.stochastic() ? output(net, s.x, rng.next_u64()) : output(net, s.x);
    std::size_t idx = rule.decide_index(out, n_classes);
    std::size_t c = to_class[s.label];
    counts[c][idx] += 1.0;
    class_counts[c] += 1.0;
  }
  std::vector<ClassPmf<std::size_t>> pmfs;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (class_counts[c] == 0.0) continue;
    std::map<std::size_t, double> atoms;
    for (const auto& [idx, cnt] : counts[c]) atoms[idx] = cnt / class_counts[c];
    pmfs.push_back({joint.classes()[c].label,
                    class_counts[c] / static_cast<double>(n),
                    Pmf<std::size_t>(std::move(atoms))});
  }
  return mi_discrete<std::size_t>(pmfs);
}

namespace {

// Cross-entropy loss in bits and the gradient seed on the outputs.
double cross_entropy_upstream(std::span<const double> out, std::size_t class_index,
                              std::size_t n_classes, std::vector<double>& upstream) {
  upstream.assign(out.size(), 0.0);
  const double eps = 1e-12;
  if (out.size() == 1) {
    if (n_classes != 2) {
      throw NonProbabilisticOutput("scalar output needs a binary problem");
    }
    double p = std::clamp(out[0], eps, 1.0 - eps);
    if (class_index == 1) {
      upstream[0] = -1.0 / (p * kLn2);
      return -std::log2(p);
    }
    upstream[0] = 1.0 / ((1.0 - p) * kLn2);
    return -std::log2(1.0 - p);
  }
  // Softmax classification head on raw outputs.
  std::vector<double> p = output_probabilities(out, n_classes);
  for (std::size_t k = 0; k < p.size(); ++k) {
    upstream[k] = (p[k] - (k == class_index ? 1.0 : 0.0)) / kLn2;
  }
  return -std::log2(std::max(p[class_index], eps));
}

}  // namespace

std::pair<Network, TrainTrace> train_sgd(const LabeledJoint& joint, Network net,
                                         const TrainConfig& cfg) {
  if (cfg.steps == 0 || cfg.batch_size == 0 || cfg.noise_draws == 0) {
    throw std::invalid_argument("counts must be at least 1");
  }
  if (!(cfg.learning_rate >= 0.0)) {
    throw std::invalid_argument("learning rate must be non-negative");
  }
  for (const LayerParams& l : net.layers()) {
    if (l.activation.kind == ActivationKind::step) {
      throw NonDifferentiable("step activation blocks gradient training");
    }
  }
  if (!cfg.use_cross_entropy && net.stochastic()) {
    throw NonDifferentiable(
        "exact IB costs need a deterministic network; use the cross-entropy "
        "surrogate for stochastic training");
  }
  Rng rng(cfg.seed);
  TrainTrace trace;
  const std::size_t n_params = net.parameter_count();
  std::map<int, std::size_t> to_class = label_index_map(joint);
  std::vector<double> upstream;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    double loss = 0.0;
    std::vector<double> grad(n_params, 0.0);
    if (cfg.use_cross_entropy) {
      Dataset batch = sample(joint, cfg.batch_size, rng.next_u64());
      for (const Sample& s : batch.samples) {
        for (std::size_t d = 0; d < cfg.noise_draws; ++d) {
          LayerTrace t = net.stochastic() ? forward(net, s.x, rng.next_u64())
                                          : forward(net, s.x);
          loss += cross_entropy_upstream(t.output(), to_class[s.label],
                                         joint.class_count(), upstream);
          std::vector<double> g = grad_from_trace(net, t, upstream);
          for (std::size_t k = 0; k < n_params; ++k) grad[k] += g[k];
        }
      }
      double scale = 1.0 / static_cast<double>(cfg.batch_size * cfg.noise_draws);
      loss *= scale;
      for (double& g : grad) g *= scale;
    } else {
      // Exact objective, differentiated by central differences. Piecewise
      // constant variants yield zero gradients and simply do not move.
      auto costfn = [&](const Network& probe) {
        CostReport r = evaluate_cost(joint, probe, cfg.spec);
        return r.total;
      };
      CostReport here = evaluate_cost(joint, net, cfg.spec);
      if (here.total.is_infinite()) {
        throw InfiniteCost("objective is infinite at the current parameters");
      }
      loss = here.total.bits();
      grad = finite_diff_grad(costfn, net, 1e-4);
    }
    if (!(loss < 1e6)) throw Diverged("loss exceeded 1e6");
    for (std::size_t k = 0; k < n_params; ++k) {
      net.set_parameter(k, net.get_parameter(k) - cfg.learning_rate * grad[k]);
    }
    trace.losses.push_back(loss);
    if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0) {
      CostSpec eval_spec = cfg.spec;
      if (cfg.use_cross_entropy) {
        eval_spec.variant = CostSpec::Variant::probabilistic;
      }
      CostReport r = net.stochastic()
                         ? mc_cost(joint, net, eval_spec, cfg.eval_samples,
                                   rng.next_u64(), cfg.noise_draws)
                         : evaluate_cost(joint, net, eval_spec);
      trace.evals.emplace_back(step + 1, r);
    }
  }
  return {std::move(net), std::move(trace)};
}

}  // namespace ibex
