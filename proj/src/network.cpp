#include "ibex/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ibex/errors.hpp"
#include "ibex/rng.hpp"

namespace ibex {

Activation Activation::leaky_relu(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("leaky slope must lie in (0, 1)");
  }
  return {ActivationKind::leaky_relu, alpha};
}

bool is_smooth(ActivationKind k) {
  return k == ActivationKind::sigmoid || k == ActivationKind::tanh ||
         k == ActivationKind::softplus;
}

bool is_piecewise_linear_kind(ActivationKind k) {
  return k == ActivationKind::identity || k == ActivationKind::relu ||
         k == ActivationKind::leaky_relu || k == ActivationKind::step;
}

double apply_scalar(const Activation& act, double z) {
  switch (act.kind) {
    case ActivationKind::identity: return z;
    case ActivationKind::relu: return z > 0.0 ? z : 0.0;
    case ActivationKind::leaky_relu: return z > 0.0 ? z : act.alpha * z;
    case ActivationKind::step: return z >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::softplus:
      return z > 30.0 ? z : std::log1p(std::exp(z));
  }
  return z;
}

double derivative_scalar(const Activation& act, double z) {
  switch (act.kind) {
    case ActivationKind::identity: return 1.0;
    case ActivationKind::relu: return z > 0.0 ? 1.0 : 0.0;  // subgradient 0 at the kink
    case ActivationKind::leaky_relu: return z > 0.0 ? 1.0 : act.alpha;
    case ActivationKind::step:
      throw NonDifferentiable("step activation has no usable derivative");
    case ActivationKind::sigmoid: {
      double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case ActivationKind::tanh: {
      double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::softplus: return 1.0 / (1.0 + std::exp(-z));
  }
  return 1.0;
}

std::string activation_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::step: return "step";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::softplus: return "softplus";
  }
  return "identity";
}

ActivationKind activation_from_name(const std::string& name) {
  if (name == "identity") return ActivationKind::identity;
  if (name == "relu") return ActivationKind::relu;
  if (name == "leaky_relu") return ActivationKind::leaky_relu;
  if (name == "step") return ActivationKind::step;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "softplus") return ActivationKind::softplus;
  throw std::invalid_argument("unknown activation: " + name);
}

NoiseSpec NoiseSpec::uniform(double width) {
  if (!(width > 0.0)) throw std::invalid_argument("noise width must be positive");
  return {NoiseFamily::uniform, width};
}

NoiseSpec NoiseSpec::gaussian(double stddev) {
  if (!(stddev > 0.0)) throw std::invalid_argument("noise stddev must be positive");
  return {NoiseFamily::gaussian, stddev};
}

std::string noise_family_name(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::none: return "none";
    case NoiseFamily::uniform: return "uniform";
    case NoiseFamily::gaussian: return "gaussian";
  }
  return "none";
}

NoiseFamily noise_family_from_name(const std::string& name) {
  if (name == "none") return NoiseFamily::none;
  if (name == "uniform") return NoiseFamily::uniform;
  if (name == "gaussian") return NoiseFamily::gaussian;
  throw std::invalid_argument("unknown noise family: " + name);
}

Network::Network(std::vector<LayerParams> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerParams& l = layers_[i];
    if (l.in == 0 || l.out == 0) throw std::invalid_argument("zero-width layer");
    if (l.weights.size() != l.in * l.out) {
      throw std::invalid_argument("weight count mismatch");
    }
    if (l.biases.size() != l.out) throw std::invalid_argument("bias count mismatch");
    if (l.activation.kind == ActivationKind::leaky_relu &&
        !(l.activation.alpha > 0.0 && l.activation.alpha < 1.0)) {
      throw std::invalid_argument("leaky slope must lie in (0, 1)");
    }
    if (i + 1 < layers_.size() && layers_[i + 1].in != l.out) {
      throw std::invalid_argument("consecutive layer widths do not match");
    }
  }
}

bool Network::stochastic() const {
  for (const LayerParams& l : layers_) {
    if (l.noise.active()) return true;
  }
  return false;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const LayerParams& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

double Network::get_parameter(std::size_t k) const {
  for (const LayerParams& l : layers_) {
    if (k < l.weights.size()) return l.weights[k];
    k -= l.weights.size();
    if (k < l.biases.size()) return l.biases[k];
    k -= l.biases.size();
  }
  throw std::out_of_range("parameter index");
}

void Network::set_parameter(std::size_t k, double v) {
  for (LayerParams& l : layers_) {
    if (k < l.weights.size()) {
      l.weights[k] = v;
      return;
    }
    k -= l.weights.size();
    if (k < l.biases.size()) {
      l.biases[k] = v;
      return;
    }
    k -= l.biases.size();
  }
  throw std::out_of_range("parameter index");
}

LayerTrace forward(const Network& net, std::span<const double> x,
                   std::optional<std::uint64_t> seed) {
  if (x.size() != net.input_width()) {
    throw std::invalid_argument("input width mismatch");
  }
  if (net.stochastic() && !seed.has_value()) {
    throw std::invalid_argument("stochastic network requires a seed");
  }
  Rng rng(seed.value_or(0));
  LayerTrace trace;
  trace.input.assign(x.begin(), x.end());
  std::vector<double> cur = trace.input;
  for (const LayerParams& l : net.layers()) {
    std::vector<double> pre(l.out, 0.0);
    for (std::size_t j = 0; j < l.out; ++j) {
      double z = l.biases[j];
      for (std::size_t i = 0; i < l.in; ++i) z += l.weight(i, j) * cur[i];
      pre[j] = z;
    }
    std::vector<double> post(l.out);
    for (std::size_t j = 0; j < l.out; ++j) post[j] = apply_scalar(l.activation, pre[j]);
    std::vector<double> draws;
    if (l.noise.active()) {
      draws.resize(l.out);
      for (std::size_t j = 0; j < l.out; ++j) {
        draws[j] = l.noise.family == NoiseFamily::uniform
                       ? rng.uniform(-0.5 * l.noise.param, 0.5 * l.noise.param)
                       : rng.normal(0.0, l.noise.param);
        post[j] += draws[j];
      }
    }
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(post);
    trace.noise.push_back(std::move(draws));
    cur = std::move(post);
  }
  return trace;
}

std::vector<double> output(const Network& net, std::span<const double> x,
                           std::optional<std::uint64_t> seed) {
  return forward(net, x, seed).output();
}

std::vector<double> grad_from_trace(const Network& net, const LayerTrace& trace,
                                    std::span<const double> upstream) {
  if (upstream.size() != net.output_width()) {
    throw std::invalid_argument("upstream width mismatch");
  }
  for (const LayerParams& l : net.layers()) {
    if (l.activation.kind == ActivationKind::step) {
      throw NonDifferentiable("step activation in gradient path");
    }
  }
  std::vector<double> grads(net.parameter_count(), 0.0);
  // Additive noise shifts the output but not the derivative, so the backward
  // pass works on the stored pre-activations directly.
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::size_t offset = grads.size();
  for (std::size_t li = net.depth(); li-- > 0;) {
    const LayerParams& l = net.layer(li);
    offset -= l.weights.size() + l.biases.size();
    const std::vector<double>& pre = trace.pre[li];
    const std::vector<double>& below =
        li == 0 ? trace.input : trace.post[li - 1];
    std::vector<double> dz(l.out);
    for (std::size_t j = 0; j < l.out; ++j) {
      dz[j] = delta[j] * derivative_scalar(l.activation, pre[j]);
    }
    for (std::size_t i = 0; i < l.in; ++i) {
      for (std::size_t j = 0; j < l.out; ++j) {
        grads[offset + i * l.out + j] = below[i] * dz[j];
      }
    }
    for (std::size_t j = 0; j < l.out; ++j) {
      grads[offset + l.weights.size() + j] = dz[j];
    }
    std::vector<double> next(l.in, 0.0);
    for (std::size_t i = 0; i < l.in; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < l.out; ++j) acc += l.weight(i, j) * dz[j];
      next[i] = acc;
    }
    delta = std::move(next);
  }
  return grads;
}

std::vector<double> grad_params(const Network& net, std::span<const double> x,
                                std::span<const double> upstream,
                                std::optional<std::uint64_t> seed) {
  LayerTrace trace = forward(net, x, seed);
  return grad_from_trace(net, trace, upstream);
}

namespace {

// Applies a piecewise-linear activation to a profile, splitting segments at
// the zero crossings of the pre-activation.
PiecewiseLinear apply_activation_pwl(const PiecewiseLinear& f, const Activation& act) {
  if (act.kind == ActivationKind::identity) return f;
  const double lo = f.domain_lo();
  const double hi = f.domain_hi();
  std::vector<double> cuts = f.breakpoints();
  for (std::size_t i = 0; i < f.segment_count(); ++i) {
    const LinearSegment& s = f.segments()[i];
    if (s.slope == 0.0) continue;
    double x0 = -s.intercept / s.slope;
    auto [a, b] = f.segment_bounds(i);
    if (x0 > a && x0 < b) cuts.push_back(x0);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double a, double b) {
                           return b - a <= 1e-15 * std::max({1.0, std::abs(a), std::abs(b)});
                         }),
             cuts.end());
  // Keep cuts strictly inside the domain.
  while (!cuts.empty() && cuts.front() <= lo) cuts.erase(cuts.begin());
  while (!cuts.empty() && cuts.back() >= hi) cuts.pop_back();

  std::vector<LinearSegment> segs;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    double a = i == 0 ? lo : cuts[i - 1];
    double b = i == cuts.size() ? hi : cuts[i];
    double mid = 0.5 * (a + b);
    const LinearSegment& s = f.segments()[f.segment_index(mid)];
    double zmid = s.at(mid);
    switch (act.kind) {
      case ActivationKind::relu:
        segs.push_back(zmid > 0.0 ? s : LinearSegment{0.0, 0.0});
        break;
      case ActivationKind::leaky_relu:
        segs.push_back(zmid > 0.0 ? s
                                  : LinearSegment{act.alpha * s.slope,
                                                  act.alpha * s.intercept});
        break;
      case ActivationKind::step:
        segs.push_back(LinearSegment{0.0, zmid >= 0.0 ? 1.0 : 0.0});
        break;
      default:
        throw SmoothActivation("exact profile requires piecewise-linear activations");
    }
  }
  std::vector<double> bvals;
  for (double c : cuts) bvals.push_back(apply_scalar(act, f(c)));
  return PiecewiseLinear(lo, hi, std::move(cuts), std::move(segs), std::move(bvals))
      .simplified();
}

PiecewiseLinear compose_profile(const Network& net, const PiecewiseLinear& seed_profile,
                                std::span<const double> first_layer_scale) {
  for (const LayerParams& l : net.layers()) {
    if (!is_piecewise_linear_kind(l.activation.kind)) {
      throw SmoothActivation("exact profile requires piecewise-linear activations");
    }
    if (l.noise.active()) {
      throw StochasticLayer("exact profile requires a deterministic network");
    }
  }
  if (net.output_width() != 1) {
    throw std::invalid_argument("exact profile requires a single output");
  }
  std::vector<PiecewiseLinear> cur;
  {
    const LayerParams& l = net.layer(0);
    for (std::size_t j = 0; j < l.out; ++j) {
      PiecewiseLinear pre = PiecewiseLinear::affine(
          seed_profile.domain_lo(), seed_profile.domain_hi(),
          first_layer_scale[j], l.biases[j]);
      cur.push_back(apply_activation_pwl(pre, l.activation));
    }
  }
  for (std::size_t li = 1; li < net.depth(); ++li) {
    const LayerParams& l = net.layer(li);
    std::vector<PiecewiseLinear> next;
    for (std::size_t j = 0; j < l.out; ++j) {
      std::vector<double> coefs(l.in);
      for (std::size_t i = 0; i < l.in; ++i) coefs[i] = l.weight(i, j);
      PiecewiseLinear pre =
          PiecewiseLinear::affine_combination(cur, coefs, l.biases[j]);
      next.push_back(apply_activation_pwl(pre, l.activation));
    }
    cur = std::move(next);
  }
  return cur.front().simplified();
}

}  // namespace

PiecewiseLinear as_scalar_pwl(const Network& net, std::size_t input_coordinate,
                              Interval domain) {
  if (input_coordinate >= net.input_width()) {
    throw std::invalid_argument("input coordinate out of range");
  }
  const LayerParams& first = net.layer(0);
  for (std::size_t i = 0; i < first.in; ++i) {
    if (i == input_coordinate) continue;
    for (std::size_t j = 0; j < first.out; ++j) {
      if (first.weight(i, j) != 0.0) {
        throw MultivariateDependence("network depends on another input coordinate");
      }
    }
  }
  std::vector<double> scale(first.out);
  for (std::size_t j = 0; j < first.out; ++j) {
    scale[j] = first.weight(input_coordinate, j);
  }
  PiecewiseLinear seed = PiecewiseLinear::identity(domain.lo, domain.hi);
  return compose_profile(net, seed, scale);
}

double ScalarEncoder::operator()(std::span<const double> x) const {
  if (x.size() != direction.size()) {
    throw std::invalid_argument("encoder input width mismatch");
  }
  double t = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) t += direction[j] * x[j];
  t = std::min(std::max(t, profile.domain_lo()), profile.domain_hi());
  return profile(t);
}

ScalarEncoder reduce_to_scalar(const Network& net, Interval t_domain) {
  const LayerParams& first = net.layer(0);
  // Pick the largest-magnitude weight row as the direction, then require
  // every row to be an exact multiple of it.
  std::vector<double> direction(first.in, 0.0);
  std::size_t ref_unit = first.out;
  double best = 0.0;
  for (std::size_t j = 0; j < first.out; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < first.in; ++i) norm += std::abs(first.weight(i, j));
    if (norm > best) {
      best = norm;
      ref_unit = j;
    }
  }
  if (ref_unit == first.out) {
    // All-zero first layer: constant network, any direction works.
    direction.assign(first.in, 0.0);
    direction[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < first.in; ++i) {
      direction[i] = first.weight(i, ref_unit);
    }
  }
  std::vector<double> scale(first.out, 0.0);
  for (std::size_t j = 0; j < first.out; ++j) {
    // Find c with row_j = c * direction, exactly.
    double c = 0.0;
    for (std::size_t i = 0; i < first.in; ++i) {
      if (direction[i] != 0.0) {
        c = first.weight(i, j) / direction[i];
        break;
      }
    }
    for (std::size_t i = 0; i < first.in; ++i) {
      if (first.weight(i, j) != c * direction[i]) {
        throw MultivariateDependence("first-layer rows are not parallel");
      }
    }
    scale[j] = c;
  }
  PiecewiseLinear seed = PiecewiseLinear::identity(t_domain.lo, t_domain.hi);
  return ScalarEncoder{direction, compose_profile(net, seed, scale)};
}

std::string serialize_network(const Network& net) {
  std::ostringstream out;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out << buf;
  };
  for (const LayerParams& l : net.layers()) {
    out << "layer " << activation_name(l.activation.kind);
    if (l.activation.kind == ActivationKind::leaky_relu) {
      std::snprintf(buf, sizeof(buf), ":%.17g", l.activation.alpha);
      out << buf;
    }
    out << ' ' << noise_family_name(l.noise.family);
    put(l.noise.param);
    out << ' ' << l.in << ' ' << l.out;
    for (double w : l.weights) put(w);
    for (double b : l.biases) put(b);
    out << '\n';
  }
  return out.str();
}

Network parse_network(std::istream& in) {
  std::vector<LayerParams> layers;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream iss(line);
    std::string kind;
    if (!(iss >> kind)) continue;
    if (kind != "layer") throw ParseError("expected 'layer'", line_no);
    std::string act_name, noise_name;
    double noise_param;
    std::size_t rows, cols;
    if (!(iss >> act_name >> noise_name >> noise_param >> rows >> cols)) {
      throw ParseError("truncated layer header", line_no);
    }
    LayerParams l;
    l.in = rows;
    l.out = cols;
    auto colon = act_name.find(':');
    if (colon != std::string::npos) {
      l.activation = Activation::leaky_relu(std::stod(act_name.substr(colon + 1)));
      act_name = act_name.substr(0, colon);
      if (activation_from_name(act_name) != ActivationKind::leaky_relu) {
        throw ParseError("only leaky_relu takes a parameter", line_no);
      }
    } else {
      l.activation = {activation_from_name(act_name),
                      act_name == "leaky_relu" ? 0.01 : 0.0};
    }
    NoiseFamily fam = noise_family_from_name(noise_name);
    l.noise = fam == NoiseFamily::none
                  ? NoiseSpec::none()
                  : (fam == NoiseFamily::uniform ? NoiseSpec::uniform(noise_param)
                                                 : NoiseSpec::gaussian(noise_param));
    l.weights.resize(rows * cols);
    l.biases.resize(cols);
    for (double& w : l.weights) {
      if (!(iss >> w)) throw ParseError("missing weight", line_no);
    }
    for (double& b : l.biases) {
      if (!(iss >> b)) throw ParseError("missing bias", line_no);
    }
    layers.push_back(std::move(l));
  }
  if (layers.empty()) throw ParseError("no layers", 1);
  return Network(std::move(layers));
}

}  // namespace ibex
