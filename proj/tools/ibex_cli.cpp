// Command-line surface: evaluates, sweeps, trains, and probes the built-in
// scenarios, emitting CSV for external plotting.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ibex/cost.hpp"
#include "ibex/errors.hpp"
#include "ibex/info.hpp"
#include "ibex/measure.hpp"
#include "ibex/network.hpp"
#include "ibex/rng.hpp"
#include "ibex/scenarios.hpp"
#include "ibex/train.hpp"

namespace {

using namespace ibex;

constexpr int kExitUsage = 2;
constexpr int kExitScenarioParse = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario resolve_scenario(const std::string& name) {
  if (name == "fig1-discrete") return fig1_scenario(Fig1Kind::discrete);
  if (name == "fig1-dataset") return fig1_scenario(Fig1Kind::dataset);
  if (name == "fig1-continuous") return fig1_scenario(Fig1Kind::continuous);
  if (name == "fig2") return fig2_scenario().scenario;
  if (name == "fig3") return fig3_scenario().scenario;
  LabeledJoint joint = load_scenario_file(name);
  std::vector<double> direction(joint.dimension(), 0.0);
  direction[0] = 1.0;
  return Scenario{name, std::move(joint), std::move(direction),
                  "scenario loaded from " + name};
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::istringstream iss(s);
  std::string item;
  while (std::getline(iss, item, delim)) parts.push_back(item);
  return parts;
}

double parse_real(const std::string& tok) {
  std::size_t pos = 0;
  double v = std::stod(tok, &pos);
  if (pos != tok.size()) throw UsageError("bad number '" + tok + "'");
  return v;
}

// Cost syntax: raw | decision[:LEVEL] | prob | quantized[:QX:QL:QL2] |
// noisy[:FAMILY:PARAM[:FAMILY2:PARAM2]]; QX is a resolution or 'id'.
CostSpec parse_cost(const std::string& text, double beta, std::uint64_t seed) {
  CostSpec spec;
  spec.beta = beta;
  spec.seed = seed;
  std::vector<std::string> parts = split(text, ':');
  const std::string& kind = parts[0];
  if (kind == "raw") {
    spec.variant = CostSpec::Variant::raw;
  } else if (kind == "decision") {
    spec.variant = CostSpec::Variant::decision;
    double level = parts.size() > 1 ? parse_real(parts[1]) : 0.5;
    spec.rule = DecisionRule::threshold(0, level);
  } else if (kind == "prob" || kind == "probabilistic") {
    spec.variant = CostSpec::Variant::probabilistic;
  } else if (kind == "quantized") {
    spec.variant = CostSpec::Variant::quantized;
    if (parts.size() > 1) {
      if (parts[1] == "id") {
        spec.q_x.reset();
      } else {
        spec.q_x = QuantizerSpec{static_cast<std::int64_t>(parse_real(parts[1])), {}};
      }
    } else {
      spec.q_x.reset();
    }
    if (parts.size() > 2) {
      spec.q_l = QuantizerSpec{static_cast<std::int64_t>(parse_real(parts[2])), {}};
    }
    if (parts.size() > 3) {
      spec.q_l_prime =
          QuantizerSpec{static_cast<std::int64_t>(parse_real(parts[3])), {}};
    }
  } else if (kind == "noisy") {
    spec.variant = CostSpec::Variant::noisy;
    auto parse_noise = [&](const std::string& family, const std::string& param) {
      double p = parse_real(param);
      if (family == "uniform") return NoiseSpec::uniform(p);
      if (family == "gaussian") return NoiseSpec::gaussian(p);
      throw UsageError("unknown noise family '" + family + "'");
    };
    if (parts.size() >= 3) spec.eta = parse_noise(parts[1], parts[2]);
    spec.eta_prime = parts.size() >= 5 ? parse_noise(parts[3], parts[4]) : spec.eta;
  } else {
    throw UsageError("unknown cost '" + kind + "'");
  }
  return spec;
}

NoiseSpec parse_noise_flag(const std::string& text) {
  if (text == "none") return NoiseSpec::none();
  std::vector<std::string> parts = split(text, ':');
  if (parts.size() != 2) throw UsageError("noise syntax is FAMILY:PARAM");
  double p = parse_real(parts[1]);
  if (parts[0] == "uniform") return NoiseSpec::uniform(p);
  if (parts[0] == "gaussian") return NoiseSpec::gaussian(p);
  throw UsageError("unknown noise family '" + parts[0] + "'");
}

GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts = split(text, ':');
  if (parts.size() != 3) throw UsageError("grid syntax is LO:HI:STEP");
  return GridSpec{parse_real(parts[0]), parse_real(parts[1]), parse_real(parts[2])};
}

void write_output(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::fputs(content.c_str(), stdout);
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw Error("cannot open output file: " + out);
  file << content;
}

ScalarEncoder pick_encoder(const std::string& scenario, const std::string& encoder,
                           double param, bool has_param) {
  if (scenario == "fig2") {
    Fig2Scenario fig = fig2_scenario();
    auto it = fig.encoders.find(encoder.empty() ? "cont1" : encoder);
    if (it == fig.encoders.end()) {
      throw UsageError("fig2 encoders: disc1 disc2 disc3 cont1 cont2 cont3");
    }
    return it->second;
  }
  if (scenario == "fig3") {
    Fig3Scenario fig = fig3_scenario();
    const Network& net = encoder == "sum" ? fig.net_sum : fig.net_axis;
    if (!encoder.empty() && encoder != "sum" && encoder != "axis") {
      throw UsageError("fig3 encoders: sum axis");
    }
    return scenario_encoder(fig.scenario, net, 1.0);
  }
  if (!has_param) {
    throw UsageError("--param A is required for the ramp-family scenarios");
  }
  Scenario sc = resolve_scenario(scenario);
  return scenario_encoder(sc, fig1_network(param, 0.25));
}

int run(int argc, char** argv) {
  CLI::App app{
      "Exact information-bottleneck costs over hybrid feature distributions.\n"
      "All CSV numbers use six fractional digits; infinite values print as\n"
      "the literal 'inf'."};
  app.require_subcommand(1);

  // ---- sweep ----------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand(
      "sweep",
      "Sweep the ramp parameter over a grid.\n"
      "CSV schema: param,compression,precision,total");
  std::string sweep_scenario, sweep_grid = "0:5:0.05", sweep_cost = "raw";
  std::string sweep_out;
  double sweep_beta = 2.0, sweep_b = 0.25;
  std::uint64_t sweep_seed = 0;
  bool sweep_has_seed = false;
  sweep_cmd->add_option("--scenario", sweep_scenario,
                        "fig1-discrete|fig1-dataset|fig1-continuous or a scenario file")
      ->required();
  sweep_cmd->add_option("--grid", sweep_grid, "grid LO:HI:STEP for the parameter a");
  sweep_cmd->add_option("--cost", sweep_cost,
                        "raw | decision[:level] | prob | quantized[:qx|id:ql:ql2] | "
                        "noisy[:family:param[:family2:param2]]");
  sweep_cmd->add_option("--beta", sweep_beta, "trade-off parameter, must exceed 1");
  sweep_cmd->add_option("--b", sweep_b, "ramp width of the network family");
  sweep_cmd->add_option("--seed", sweep_seed, "seed for sampled costs")
      ->trigger_on_parse()
      ->each([&](const std::string&) { sweep_has_seed = true; });
  sweep_cmd->add_option("--out", sweep_out, "output file, '-' for stdout");
  std::string sweep_format = "csv";
  sweep_cmd->add_option("--format", sweep_format, "output format (csv)");

  // ---- eval -----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand(
      "eval",
      "Evaluate one cost report.\n"
      "CSV schema: variant,beta,compression,precision,total,comp_se,prec_se");
  std::string eval_scenario, eval_cost = "raw", eval_encoder, eval_out;
  double eval_beta = 2.0, eval_param = 0.0;
  bool eval_has_param = false;
  std::uint64_t eval_seed = 0;
  bool eval_has_seed = false;
  eval_cmd->add_option("--scenario", eval_scenario, "scenario name or file")->required();
  eval_cmd->add_option("--cost", eval_cost, "cost selector (see sweep --help)");
  eval_cmd->add_option("--beta", eval_beta, "trade-off parameter");
  eval_cmd->add_option("--param", eval_param, "ramp position a of the network family")
      ->trigger_on_parse()
      ->each([&](const std::string&) { eval_has_param = true; });
  eval_cmd->add_option("--encoder", eval_encoder,
                       "named encoder for fig2 (disc1..cont3) or fig3 (sum|axis)");
  eval_cmd->add_option("--seed", eval_seed, "seed for sampled costs")
      ->trigger_on_parse()
      ->each([&](const std::string&) { eval_has_seed = true; });
  eval_cmd->add_option("--out", eval_out, "output file, '-' for stdout");

  // ---- train ----------------------------------------------------------
  auto* train_cmd = app.add_subcommand(
      "train",
      "Train a stochastic classifier with plain SGD on the cross-entropy\n"
      "surrogate. CSV schema: step,loss,compression,precision,total");
  std::string train_scenario = "fig2", train_out, train_net_in, train_net_out;
  TrainConfig train_cfg;
  train_cfg.learning_rate = 0.05;
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--scenario", train_scenario, "scenario name or file");
  train_cmd->add_option("--steps", train_cfg.steps, "gradient steps");
  train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
  train_cmd->add_option("--batch", train_cfg.batch_size, "batch size");
  train_cmd->add_option("--noise-draws", train_cfg.noise_draws,
                        "representation samples per input");
  train_cmd->add_option("--eval-every", train_cfg.eval_every,
                        "exact/Monte-Carlo cost evaluation period (0 = off)");
  train_cmd->add_option("--seed", train_seed, "run seed")->required();
  train_cmd->add_option("--net", train_net_in, "starting network file");
  train_cmd->add_option("--save-net", train_net_out, "file for the trained network");
  train_cmd->add_option("--out", train_out, "trace output file, '-' for stdout");

  // ---- dims -----------------------------------------------------------
  auto* dims_cmd = app.add_subcommand(
      "dims",
      "Finite-resolution dimension slopes of a scenario marginal, optionally\n"
      "pushed through the ramp network. CSV schema: m,shannon_slope,renyi2_slope");
  std::string dims_scenario, dims_mlist = "2,4,8,16,32,64,128,256,512,1024";
  std::string dims_out;
  double dims_param = 0.0;
  bool dims_has_param = false;
  dims_cmd->add_option("--scenario", dims_scenario, "scenario name or file")->required();
  dims_cmd->add_option("--m-list", dims_mlist, "comma-separated resolutions");
  dims_cmd->add_option("--param", dims_param, "push through the ramp family at a")
      ->trigger_on_parse()
      ->each([&](const std::string&) { dims_has_param = true; });
  dims_cmd->add_option("--out", dims_out, "output file, '-' for stdout");

  // ---- bound-check ----------------------------------------------------
  auto* bound_cmd = app.add_subcommand(
      "bound-check",
      "Randomized verification of the variational precision bound chain.\n"
      "CSV schema: trial,decoder,i_y_l,i_y_ytilde,h_y,ce_l,ce_ytilde,lower_bound");
  std::size_t bound_trials = 1000;
  std::uint64_t bound_seed = 0;
  std::string bound_out;
  bound_cmd->add_option("--trials", bound_trials, "number of random joints");
  bound_cmd->add_option("--seed", bound_seed, "run seed")->required();
  bound_cmd->add_option("--out", bound_out, "output file, '-' for stdout");

  // ---- probe ----------------------------------------------------------
  auto* probe_cmd = app.add_subcommand(
      "probe",
      "Monte Carlo misclassification rate under input noise.\n"
      "CSV schema: encoder,rate,se");
  std::string probe_scenario = "fig3", probe_encoder = "axis", probe_out;
  std::string probe_rule = "threshold:0.5", probe_noise = "uniform:0.2";
  std::size_t probe_n = 100000;
  std::uint64_t probe_seed = 0;
  probe_cmd->add_option("--scenario", probe_scenario, "fig2 or fig3");
  probe_cmd->add_option("--encoder", probe_encoder,
                        "fig2: disc1..cont3; fig3: sum|axis");
  probe_cmd->add_option("--rule", probe_rule, "threshold:LEVEL");
  probe_cmd->add_option("--noise", probe_noise, "none | uniform:WIDTH | gaussian:SD");
  probe_cmd->add_option("--n", probe_n, "sample count (>= 1000)");
  probe_cmd->add_option("--seed", probe_seed, "run seed")->required();
  probe_cmd->add_option("--out", probe_out, "output file, '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*sweep_cmd) {
      if (sweep_format != "csv") throw UsageError("only csv output is supported");
      CostSpec spec = parse_cost(sweep_cost, sweep_beta, sweep_seed);
      if (spec.variant == CostSpec::Variant::noisy && !sweep_has_seed) {
        throw UsageError("--seed is required for the noisy cost");
      }
      Scenario sc = resolve_scenario(sweep_scenario);
      double b = sweep_b;
      SweepResult result = sweep(
          sc, [b](double a) { return fig1_network(a, b); }, parse_grid(sweep_grid),
          spec);
      write_output(sweep_out, result.to_csv());
    } else if (*eval_cmd) {
      CostSpec spec = parse_cost(eval_cost, eval_beta, eval_seed);
      if (spec.variant == CostSpec::Variant::noisy && !eval_has_seed) {
        throw UsageError("--seed is required for the noisy cost");
      }
      Scenario sc = resolve_scenario(eval_scenario);
      ScalarEncoder enc =
          pick_encoder(eval_scenario, eval_encoder, eval_param, eval_has_param);
      CostReport report = evaluate_cost(sc.joint, enc, spec);
      write_output(eval_out,
                   "variant,beta,compression,precision,total,comp_se,prec_se\n" +
                       report.to_csv_row() + "\n");
    } else if (*train_cmd) {
      Scenario sc = resolve_scenario(train_scenario);
      train_cfg.seed = train_seed;
      Network net = [&] {
        if (!train_net_in.empty()) {
          std::ifstream in(train_net_in);
          if (!in) throw Error("cannot open network file: " + train_net_in);
          return parse_network(in);
        }
        return fig2_training_network(train_seed);
      }();
      auto [trained, trace] = train_sgd(sc.joint, std::move(net), train_cfg);
      write_output(train_out, trace.to_csv());
      if (!train_net_out.empty()) {
        std::ofstream out(train_net_out, std::ios::binary);
        if (!out) throw Error("cannot open network file: " + train_net_out);
        out << serialize_network(trained);
      }
    } else if (*dims_cmd) {
      Scenario sc = resolve_scenario(dims_scenario);
      HybridMeasure mu = marginal(sc.joint);
      if (dims_has_param) {
        mu = pushforward(scenario_encoder(sc, fig1_network(dims_param, 0.25)).profile,
                         project(mu, sc.direction));
      }
      std::vector<std::int64_t> ms;
      for (const std::string& tok : split(dims_mlist, ',')) {
        ms.push_back(static_cast<std::int64_t>(parse_real(tok)));
      }
      std::ostringstream out;
      out << "m,shannon_slope,renyi2_slope\n";
      char buf[96];
      for (const DimensionRow& row : dimension_slopes(mu, ms)) {
        std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f\n",
                      static_cast<long long>(row.m), row.shannon_slope,
                      row.renyi2_slope);
        out << buf;
      }
      write_output(dims_out, out.str());
    } else if (*bound_cmd) {
      Rng rng(bound_seed);
      std::ostringstream out;
      out << "trial,decoder,i_y_l,i_y_ytilde,h_y,ce_l,ce_ytilde,lower_bound\n";
      std::size_t violations = 0;
      char buf[192];
      for (std::size_t trial = 0; trial < bound_trials; ++trial) {
        std::size_t ny = 2 + rng.index(2);
        std::size_t nl = 2 + rng.index(4);
        std::size_t nt = 2 + rng.index(2);
        bool deterministic = trial % 2 == 0;
        std::vector<std::vector<double>> joint(ny, std::vector<double>(nl));
        double total = 0.0;
        for (auto& row : joint) {
          for (double& v : row) {
            v = rng.uniform(0.02, 1.0);
            total += v;
          }
        }
        for (auto& row : joint) {
          for (double& v : row) v /= total;
        }
        std::vector<std::vector<double>> decoder(nl, std::vector<double>(nt, 0.0));
        for (auto& row : decoder) {
          if (deterministic) {
            row[rng.index(nt)] = 1.0;
          } else {
            double s = 0.0;
            for (double& v : row) {
              v = rng.uniform(0.05, 1.0);
              s += v;
            }
            for (double& v : row) v /= s;
          }
        }
        std::vector<std::vector<double>> qrule(nt, std::vector<double>(ny));
        for (auto& row : qrule) {
          double s = 0.0;
          for (double& v : row) {
            v = rng.uniform(0.05, 1.0);
            s += v;
          }
          for (double& v : row) v /= s;
        }
        BoundReport r = precision_bound_report(joint, decoder, qrule);
        bool bad = deterministic
                       ? !(r.i_y_l >= r.i_y_ytilde - 1e-9 &&
                           r.i_y_ytilde >= r.lower_bound - 1e-9 &&
                           std::abs(r.cross_entropy_l - r.cross_entropy_ytilde) <=
                               1e-9)
                       : !(r.i_y_l >= r.i_y_ytilde - 1e-9 &&
                           r.cross_entropy_l <= r.cross_entropy_ytilde + 1e-9);
        if (bad) ++violations;
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      trial, deterministic ? "deterministic" : "stochastic", r.i_y_l,
                      r.i_y_ytilde, r.h_y, r.cross_entropy_l, r.cross_entropy_ytilde,
                      r.lower_bound);
        out << buf;
      }
      write_output(bound_out, out.str());
      std::fprintf(stderr, "chain violations: %zu / %zu\n", violations, bound_trials);
      if (violations > 0) return 1;
    } else if (*probe_cmd) {
      std::vector<std::string> rule_parts = split(probe_rule, ':');
      if (rule_parts.size() != 2 || rule_parts[0] != "threshold") {
        throw UsageError("rule syntax is threshold:LEVEL");
      }
      DecisionRule rule = DecisionRule::threshold(0, parse_real(rule_parts[1]));
      NoiseSpec noise = parse_noise_flag(probe_noise);
      Scenario sc = resolve_scenario(probe_scenario);
      ScalarEncoder enc = pick_encoder(probe_scenario, probe_encoder, 0.0, false);
      ProbeResult r = robustness_probe(sc, enc, rule, noise, probe_n, probe_seed);
      char buf[96];
      std::snprintf(buf, sizeof(buf), "encoder,rate,se\n%s,%.6f,%.6f\n",
                    probe_encoder.c_str(), r.rate, r.se);
      write_output(probe_out, buf);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ibex::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitScenarioParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
