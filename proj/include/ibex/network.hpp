#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibex/piecewise.hpp"

namespace ibex {

enum class ActivationKind { identity, relu, leaky_relu, step, sigmoid, tanh, softplus };

// leaky_relu carries its negative-side slope; other kinds ignore alpha.
struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double alpha = 0.0;

  static Activation identity() { return {ActivationKind::identity, 0.0}; }
  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double alpha);
  static Activation step() { return {ActivationKind::step, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }
  static Activation softplus() { return {ActivationKind::softplus, 0.0}; }
};

bool is_smooth(ActivationKind k);
bool is_piecewise_linear_kind(ActivationKind k);
double apply_scalar(const Activation& act, double z);
double derivative_scalar(const Activation& act, double z);  // throws for step
std::string activation_name(ActivationKind k);
ActivationKind activation_from_name(const std::string& name);

enum class NoiseFamily { none, uniform, gaussian };

// Additive noise applied to a layer's post-activation output. uniform noise
// is centered with total width `param`; gaussian noise has stddev `param`.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::none;
  double param = 0.0;

  static NoiseSpec none() { return {NoiseFamily::none, 0.0}; }
  static NoiseSpec uniform(double width);
  static NoiseSpec gaussian(double stddev);
  bool active() const { return family != NoiseFamily::none; }
};

std::string noise_family_name(NoiseFamily f);
NoiseFamily noise_family_from_name(const std::string& name);

// Weights are stored input-major: weights[i*out + j] connects input i to unit
// j, so the forward map is z_j = sum_i w_ij x_i + b_j.
struct LayerParams {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;
  Activation activation;
  NoiseSpec noise;

  double weight(std::size_t i, std::size_t j) const { return weights[i * out + j]; }
  double& weight(std::size_t i, std::size_t j) { return weights[i * out + j]; }
};

class Network {
 public:
  explicit Network(std::vector<LayerParams> layers);

  std::size_t depth() const { return layers_.size(); }
  std::size_t input_width() const { return layers_.front().in; }
  std::size_t output_width() const { return layers_.back().out; }
  const std::vector<LayerParams>& layers() const { return layers_; }
  const LayerParams& layer(std::size_t i) const { return layers_[i]; }
  LayerParams& layer(std::size_t i) { return layers_[i]; }
  bool stochastic() const;

  // Flat parameter view, layer by layer, weights then biases.
  std::size_t parameter_count() const;
  double get_parameter(std::size_t k) const;
  void set_parameter(std::size_t k, double v);

 private:
  std::vector<LayerParams> layers_;
};

// Per-layer record of one forward pass. pre[i] are the affine inputs of layer
// i, post[i] its outputs after activation and noise; noise[i] holds the
// realized draws (empty when the layer is deterministic).
struct LayerTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::vector<std::vector<double>> noise;

  const std::vector<double>& output() const { return post.back(); }
};

// A seed is required exactly when some layer carries noise; deterministic
// layers are unaffected by it.
LayerTrace forward(const Network& net, std::span<const double> x,
                   std::optional<std::uint64_t> seed = std::nullopt);
std::vector<double> output(const Network& net, std::span<const double> x,
                           std::optional<std::uint64_t> seed = std::nullopt);

// Gradient of <upstream, output> with respect to every weight and bias, in
// flat parameter order. Stochastic layers differentiate along the realized
// noise path (additive reparameterization).
std::vector<double> grad_params(const Network& net, std::span<const double> x,
                                std::span<const double> upstream,
                                std::optional<std::uint64_t> seed = std::nullopt);
std::vector<double> grad_from_trace(const Network& net, const LayerTrace& trace,
                                    std::span<const double> upstream);

// Exact piecewise-linear profile of a single-output network that depends on
// the input only through the given coordinate. All activations must be
// piecewise linear and all layers deterministic.
PiecewiseLinear as_scalar_pwl(const Network& net, std::size_t input_coordinate,
                              Interval domain);

// A scalar-reducible encoder: f(x) = profile(<direction, x>). This is the
// exact-analysis form of every encoder in the built-in scenarios.
struct ScalarEncoder {
  std::vector<double> direction;
  PiecewiseLinear profile;

  double operator()(std::span<const double> x) const;
};

// Detects a common direction u with every first-layer weight row proportional
// to u and returns the exact profile in t = <u, x> over the given t-domain.
// Throws MultivariateDependence when the rows are not parallel.
ScalarEncoder reduce_to_scalar(const Network& net, Interval t_domain);

// Plain-text serialization, one layer per line:
//   layer <activation> <noise-family> <noise-param> <rows> <cols> <w...> <b...>
// with row-major weights at full precision.
std::string serialize_network(const Network& net);
Network parse_network(std::istream& in);

}  // namespace ibex
