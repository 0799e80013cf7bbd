"""Smoke tests for the python bindings."""

import math

import ibex


def test_scenario_and_marginal():
    sc = ibex.scenario("fig1-discrete")
    mu = ibex.marginal(sc.joint)
    assert mu.dimension() == 1
    assert abs(mu.total_mass() - 1.0) < 1e-12
    masses = sorted(m for _, m in mu.atoms())
    assert masses == [0.1, 0.2, 0.3, 0.4]


def test_entropy_values():
    assert abs(ibex.entropy([0.2, 0.8]) - 0.721928) < 1e-6
    assert abs(ibex.renyi2([0.25] * 4) - 2.0) < 1e-12
    kl, ce = ibex.divergences([0.75, 0.25], [0.5, 0.5])
    assert abs(kl - 0.188722) < 1e-6
    assert ce > kl


def test_raw_cost_plateau_value():
    sc = ibex.scenario("fig1-discrete")
    enc = ibex.encoder_for(sc, ibex.ramp_network(3.1))
    report = ibex.evaluate(sc, enc)
    assert abs(report["compression"] - 0.468996) < 1e-6


def test_infinite_compression_on_continuous_input():
    sc = ibex.scenario("fig1-continuous")
    enc = ibex.encoder_for(sc, ibex.ramp_network(2.0))
    report = ibex.evaluate(sc, enc)
    assert math.isinf(report["compression"])
    assert math.isfinite(report["precision"])


def test_sweep_matches_plotted_plateaus():
    sc = ibex.scenario("fig1-discrete")
    rows = ibex.sweep(sc, lo=0.0, hi=5.0, step=0.05)
    assert len(rows) == 101
    by_param = {round(r["param"], 2): r for r in rows}
    assert abs(by_param[0.5]["compression"] - 0.721928) < 1e-6
    assert abs(by_param[3.1]["compression"] - 0.468996) < 1e-6


def test_decision_rule_numbers():
    sc = ibex.scenario("fig2")
    encoders = ibex.fig2_encoders()
    good = ibex.evaluate(sc, encoders["cont1"], variant="decision", level=0.5)
    bad = ibex.evaluate(sc, encoders["cont2"], variant="decision", level=0.5)
    assert abs(good["precision"] - 1.0) < 1e-9
    assert abs(bad["precision"]) < 1e-9


def test_quantize_uniform_interval():
    sc = ibex.scenario("fig2")
    encoders = ibex.fig2_encoders()
    mu = ibex.pushforward(sc, encoders["cont1"])
    cells = ibex.quantize(mu, 4)
    assert len(cells) == 4
    assert all(abs(p - 0.25) < 1e-12 for p in cells.values())


def test_bound_report_chain():
    joint = [[0.4, 0.1], [0.1, 0.4]]
    decoder = [[1.0, 0.0], [0.0, 1.0]]
    qrule = [[0.8, 0.2], [0.2, 0.8]]
    r = ibex.bound_report(joint, decoder, qrule)
    assert r["i_y_l"] >= r["i_y_ytilde"] - 1e-9
    assert r["i_y_ytilde"] >= r["lower_bound"] - 1e-9
    assert abs(r["cross_entropy_l"] - r["cross_entropy_ytilde"]) < 1e-9


def test_training_short_run_is_deterministic():
    sc = ibex.scenario("fig2")
    net_a, losses_a = ibex.train(sc, steps=100, seed=11)
    net_b, losses_b = ibex.train(sc, steps=100, seed=11)
    assert losses_a == losses_b
    assert net_a.parameters() == net_b.parameters()
    assert net_a.stochastic()


def test_probe_orders_fig3_readouts():
    sc = ibex.scenario("fig3")
    net_sum, net_axis, probe_point = ibex.fig3_networks()
    enc_sum = ibex.encoder_for(sc, net_sum, margin=1.0)
    enc_axis = ibex.encoder_for(sc, net_axis, margin=1.0)
    rate_sum, _ = ibex.probe(sc, enc_sum, level=0.5, n=20000, seed=3)
    rate_axis, _ = ibex.probe(sc, enc_axis, level=0.25, n=20000, seed=3)
    assert rate_axis < rate_sum
    # The probe point sits on the wrong side of the sum readout only.
    assert net_sum(probe_point)[0] <= 0.5
    assert net_axis(probe_point)[0] > 0.25
