// Python bindings for the main operations: scenario construction, exact cost
// evaluation, sweeps, quantization, bound checks, training, and probes.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <variant>

#include "ibex/cost.hpp"
#include "ibex/errors.hpp"
#include "ibex/info.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"
#include "ibex/scenarios.hpp"
#include "ibex/train.hpp"

namespace py = pybind11;
using namespace ibex;

namespace {

// InfoValue converts to float('inf') on the python side.
py::object info_to_py(const InfoValue& v) {
  if (v.is_infinite()) {
    return py::float_(std::numeric_limits<double>::infinity());
  }
  return py::float_(v.bits());
}

py::dict report_to_py(const CostReport& r) {
  py::dict d;
  d["variant"] = r.variant;
  d["beta"] = r.beta;
  d["compression"] = info_to_py(r.compression);
  d["precision"] = info_to_py(r.precision);
  d["total"] = info_to_py(r.total);
  if (r.compression_se) d["compression_se"] = *r.compression_se;
  if (r.precision_se) d["precision_se"] = *r.precision_se;
  return d;
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "fig1-discrete") return fig1_scenario(Fig1Kind::discrete);
  if (name == "fig1-dataset") return fig1_scenario(Fig1Kind::dataset);
  if (name == "fig1-continuous") return fig1_scenario(Fig1Kind::continuous);
  if (name == "fig2") return fig2_scenario().scenario;
  if (name == "fig3") return fig3_scenario().scenario;
  throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Exact information-bottleneck cost evaluation over hybrid "
      "discrete/continuous feature distributions.";

  py::register_exception<Error>(m, "IbexError");

  py::class_<Interval>(m, "Interval")
      .def(py::init<double, double>())
      .def_readonly("lo", &Interval::lo)
      .def_readonly("hi", &Interval::hi);

  py::class_<HybridMeasure>(m, "HybridMeasure")
      .def("dimension", &HybridMeasure::dimension)
      .def("total_mass", &HybridMeasure::total_mass)
      .def("has_continuous_part", &HybridMeasure::has_continuous_part)
      .def("atoms",
           [](const HybridMeasure& mu) {
             py::list out;
             for (const PointMass& p : mu.points()) {
               out.append(py::make_tuple(p.location, p.mass));
             }
             return out;
           })
      .def("pieces", [](const HybridMeasure& mu) {
        py::list out;
        for (const UniformPiece& q : mu.pieces()) {
          py::list box;
          for (const Interval& iv : q.box) box.append(py::make_tuple(iv.lo, iv.hi));
          out.append(py::make_tuple(box, q.mass));
        }
        return out;
      });

  py::class_<LabeledJoint>(m, "LabeledJoint")
      .def("class_count", &LabeledJoint::class_count)
      .def("dimension", &LabeledJoint::dimension)
      .def("label_entropy", &LabeledJoint::label_entropy);

  py::class_<Network>(m, "Network")
      .def("depth", &Network::depth)
      .def("input_width", &Network::input_width)
      .def("output_width", &Network::output_width)
      .def("stochastic", &Network::stochastic)
      .def("parameters",
           [](const Network& net) {
             std::vector<double> p(net.parameter_count());
             for (std::size_t k = 0; k < p.size(); ++k) p[k] = net.get_parameter(k);
             return p;
           })
      .def("serialize", [](const Network& net) { return serialize_network(net); })
      .def("__call__", [](const Network& net, std::vector<double> x,
                          std::optional<std::uint64_t> seed) {
        return output(net, x, seed);
      }, py::arg("x"), py::arg("seed") = std::nullopt);

  py::class_<ScalarEncoder>(m, "ScalarEncoder")
      .def("__call__",
           [](const ScalarEncoder& enc, std::vector<double> x) { return enc(x); })
      .def_readonly("direction", &ScalarEncoder::direction);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("doc", &Scenario::doc)
      .def_readonly("direction", &Scenario::direction)
      .def_property_readonly("joint",
                             [](const Scenario& s) { return s.joint; });

  m.def("scenario", &scenario_by_name, py::arg("name"),
        "Built-in scenarios: fig1-discrete, fig1-dataset, fig1-continuous, "
        "fig2, fig3.");
  m.def("load_scenario", [](const std::string& path) {
    LabeledJoint joint = load_scenario_file(path);
    std::vector<double> dir(joint.dimension(), 0.0);
    dir[0] = 1.0;
    return Scenario{path, std::move(joint), std::move(dir), "file scenario"};
  });
  m.def("fig2_encoders", [] {
    py::dict d;
    for (auto& [name, enc] : fig2_scenario().encoders) {
      d[py::str(name)] = enc;
    }
    return d;
  });
  m.def("fig3_networks", [] {
    Fig3Scenario fig = fig3_scenario();
    return py::make_tuple(fig.net_sum, fig.net_axis, fig.probe_point);
  });
  m.def("ramp_network", &fig1_network, py::arg("a"), py::arg("b") = 0.25,
        "Two ReLU units and a differencing head realizing clip(x - a, 0, b).");
  m.def("training_network", &fig2_training_network, py::arg("seed"));

  m.def("marginal", &marginal);
  m.def("entropy", [](std::vector<double> p) { return entropy_bits(p); },
        "Shannon entropy in bits of a probability vector.");
  m.def("renyi2", [](std::vector<double> p) { return renyi2_bits(p); },
        "Second-order Renyi entropy in bits.");
  m.def("representation_entropy", [](const HybridMeasure& mu) {
    return info_to_py(representation_entropy(mu));
  });

  m.def(
      "quantize",
      [](const HybridMeasure& mu, std::int64_t m, std::vector<double> origin) {
        CubePmf pmf = quantize_measure(mu, QuantizerSpec{m, std::move(origin)});
        py::dict d;
        for (const auto& [cube, p] : pmf.atoms()) {
          d[py::tuple(py::cast(cube))] = p;
        }
        return d;
      },
      py::arg("measure"), py::arg("resolution"),
      py::arg("origin") = std::vector<double>{});

  m.def(
      "dimension_slopes",
      [](const HybridMeasure& mu, std::vector<std::int64_t> ms) {
        py::list rows;
        for (const DimensionRow& r : dimension_slopes(mu, ms)) {
          rows.append(py::make_tuple(r.m, r.shannon_slope, r.renyi2_slope));
        }
        return rows;
      },
      py::arg("measure"), py::arg("resolutions"));

  m.def(
      "encoder_for",
      [](const Scenario& sc, const Network& net, double margin) {
        return scenario_encoder(sc, net, margin);
      },
      py::arg("scenario"), py::arg("network"), py::arg("margin") = 0.0);

  m.def(
      "pushforward",
      [](const Scenario& sc, const ScalarEncoder& enc) {
        return pushforward(enc.profile, project(marginal(sc.joint), enc.direction));
      },
      "Exact output distribution of an encoder over a scenario marginal.");

  auto parse_spec = [](const std::string& variant, double beta, double level,
                       std::optional<std::int64_t> qx, std::int64_t ql,
                       std::int64_t ql2, const std::string& noise, double width,
                       std::size_t n_mc, std::uint64_t seed) {
    CostSpec spec;
    spec.beta = beta;
    spec.n_mc = n_mc;
    spec.seed = seed;
    if (variant == "raw") {
      spec.variant = CostSpec::Variant::raw;
    } else if (variant == "decision") {
      spec.variant = CostSpec::Variant::decision;
      spec.rule = DecisionRule::threshold(0, level);
    } else if (variant == "probabilistic") {
      spec.variant = CostSpec::Variant::probabilistic;
    } else if (variant == "quantized") {
      spec.variant = CostSpec::Variant::quantized;
      if (qx) spec.q_x = QuantizerSpec{*qx, {}};
      spec.q_l = QuantizerSpec{ql, {}};
      spec.q_l_prime = QuantizerSpec{ql2, {}};
    } else if (variant == "noisy") {
      spec.variant = CostSpec::Variant::noisy;
      spec.eta = noise == "gaussian" ? NoiseSpec::gaussian(width)
                                     : NoiseSpec::uniform(width);
      spec.eta_prime = spec.eta;
    } else {
      throw std::invalid_argument("unknown variant: " + variant);
    }
    return spec;
  };

  m.def(
      "evaluate",
      [parse_spec](const Scenario& sc, const ScalarEncoder& enc,
                   const std::string& variant, double beta, double level,
                   std::optional<std::int64_t> qx, std::int64_t ql, std::int64_t ql2,
                   const std::string& noise, double width, std::size_t n_mc,
                   std::uint64_t seed) {
        CostSpec spec =
            parse_spec(variant, beta, level, qx, ql, ql2, noise, width, n_mc, seed);
        return report_to_py(evaluate_cost(sc.joint, enc, spec));
      },
      py::arg("scenario"), py::arg("encoder"), py::arg("variant") = "raw",
      py::arg("beta") = 2.0, py::arg("level") = 0.5,
      py::arg("q_x") = std::nullopt, py::arg("q_l") = 4, py::arg("q_l_prime") = 2,
      py::arg("noise") = "uniform", py::arg("width") = 0.05,
      py::arg("n_mc") = 20000, py::arg("seed") = 0,
      "Evaluate one cost report for an encoder over a scenario.");

  m.def(
      "sweep",
      [parse_spec](const Scenario& sc, double lo, double hi, double step,
                   const std::string& variant, double beta, double b,
                   const std::string& noise, double width, std::uint64_t seed) {
        CostSpec spec = parse_spec(variant, beta, 0.5, std::nullopt, 4, 2, noise,
                                   width, 20000, seed);
        SweepResult result = sweep(
            sc, [b](double a) { return fig1_network(a, b); }, GridSpec{lo, hi, step},
            spec);
        py::list rows;
        for (const SweepRow& row : result.rows) {
          py::dict d = report_to_py(row.report);
          d["param"] = row.param;
          rows.append(d);
        }
        return rows;
      },
      py::arg("scenario"), py::arg("lo") = 0.0, py::arg("hi") = 5.0,
      py::arg("step") = 0.05, py::arg("variant") = "raw", py::arg("beta") = 2.0,
      py::arg("b") = 0.25, py::arg("noise") = "uniform", py::arg("width") = 0.05,
      py::arg("seed") = 0,
      "Sweep the ramp family over a parameter grid; one report per point.");

  m.def(
      "bound_report",
      [](std::vector<std::vector<double>> joint_yl,
         std::vector<std::vector<double>> decoder_lt,
         std::vector<std::vector<double>> qrule_ty) {
        BoundReport r = precision_bound_report(joint_yl, decoder_lt, qrule_ty);
        py::dict d;
        d["i_y_l"] = r.i_y_l;
        d["i_y_ytilde"] = r.i_y_ytilde;
        d["h_y"] = r.h_y;
        d["cross_entropy_l"] = r.cross_entropy_l;
        d["cross_entropy_ytilde"] = r.cross_entropy_ytilde;
        d["lower_bound"] = r.lower_bound;
        return d;
      },
      py::arg("joint_yl"), py::arg("decoder_lt"), py::arg("qrule_ty"));

  m.def(
      "divergences",
      [](std::vector<double> p, std::vector<double> q) {
        Divergences d = divergences(p, q);
        return py::make_tuple(d.kl_bits, d.cross_entropy_bits);
      },
      "Kullback-Leibler divergence and cross-entropy in bits.");

  m.def(
      "train",
      [](const Scenario& sc, std::size_t steps, double lr, std::size_t batch,
         std::size_t noise_draws, std::uint64_t seed, std::optional<Network> net) {
        TrainConfig cfg;
        cfg.steps = steps;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        cfg.noise_draws = noise_draws;
        cfg.seed = seed;
        Network start = net ? *net : fig2_training_network(seed);
        auto [trained, trace] = train_sgd(sc.joint, std::move(start), cfg);
        return py::make_tuple(trained, trace.losses);
      },
      py::arg("scenario"), py::arg("steps") = 5000, py::arg("lr") = 0.05,
      py::arg("batch") = 32, py::arg("noise_draws") = 1, py::arg("seed") = 11,
      py::arg("network") = std::nullopt,
      "Plain SGD on the cross-entropy surrogate; returns (network, losses).");

  m.def(
      "decision_information",
      [](const Scenario& sc, const Network& net, double level, std::size_t n,
         std::uint64_t seed) {
        return decision_mi_mc(sc.joint, net, DecisionRule::threshold(0, level), n,
                              seed);
      },
      py::arg("scenario"), py::arg("network"), py::arg("level") = 0.5,
      py::arg("n") = 100000, py::arg("seed") = 0,
      "Monte Carlo I(Y; thresholded output) in bits.");

  m.def(
      "probe",
      [](const Scenario& sc, const ScalarEncoder& enc, double level,
         const std::string& family, double param, std::size_t n,
         std::uint64_t seed) {
        NoiseSpec noise = family == "none"
                              ? NoiseSpec::none()
                              : (family == "gaussian" ? NoiseSpec::gaussian(param)
                                                      : NoiseSpec::uniform(param));
        ProbeResult r = robustness_probe(sc, enc, DecisionRule::threshold(0, level),
                                         noise, n, seed);
        return py::make_tuple(r.rate, r.se);
      },
      py::arg("scenario"), py::arg("encoder"), py::arg("level") = 0.5,
      py::arg("noise") = "uniform", py::arg("width") = 0.2, py::arg("n") = 100000,
      py::arg("seed") = 0,
      "Monte Carlo misclassification rate under input noise: (rate, se).");

  m.attr("__version__") = "0.1.0";
}
