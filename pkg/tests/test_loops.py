import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nematic_lro.lattice import build_torus, dimer
from nematic_lro.loops import (
    CalibrationError,
    LoopConfig,
    blocking_error,
    calibrate_time_scale,
    check_bipartite,
    delete_acceptance,
    dimer_probability,
    ed_dictionary,
    energy_from_P,
    estimate_event,
    insert_acceptance,
    run_chain,
    sample,
    trace_loops,
)

LATTICES = {"dimer": dimer(), "chain4": build_torus(1, 4), "square2": build_torus(2, 2)}


def test_hand_traced_examples(bond):
    assert LoopConfig.from_events(bond, 1.0, []).loop_count == 2
    one = LoopConfig.from_events(bond, 1.0, [(0, 0.3)])
    assert one.loop_count == 1 and trace_loops(one).count == 1
    two = LoopConfig.from_events(bond, 1.0, [(0, 0.3), (0, 0.7)])
    assert two.loop_count == 2 and trace_loops(two).count == 2
    # each loop of the two-bar configuration visits both sites
    for loop in trace_loops(two).loops:
        assert {s for s, _, _ in loop} == {0, 1}


@pytest.mark.parametrize(
    "times,edges",
    [([0.5, 0.2], [0, 0]), ([0.2, 0.2], [0, 0]), ([1.2], [0]), ([-0.1], [0]), ([0.1], [3])],
)
def test_malformed_configs(bond, times, edges):
    with pytest.raises(ValueError):
        LoopConfig(bond, 1.0, np.array(times), np.array(edges))
    with pytest.raises(ValueError):
        LoopConfig(bond, 0.0, np.array([]), np.array([]))


def test_empty_config_counts_sites(chain4):
    assert LoopConfig.from_events(chain4, 2.0, []).loop_count == 4


GRID = 1000


@st.composite
def configs(draw):
    # bar times on an integer grid, query times halfway between grid points
    lat = LATTICES[draw(st.sampled_from(sorted(LATTICES)))]
    T = draw(st.floats(0.5, 4))
    n = draw(st.integers(0, 14))
    ticks = draw(st.lists(st.integers(0, GRID - 1), min_size=n, max_size=n, unique=True))
    edges = draw(st.lists(st.integers(0, lat.n_edges - 1), min_size=n, max_size=n))
    return LoopConfig.from_events(lat, T, [(e, T * k / GRID) for e, k in zip(edges, ticks)])


def off_grid(cfg, data):
    return cfg.T * (data.draw(st.integers(0, GRID - 1)) + 0.5) / GRID


@settings(max_examples=150, deadline=None)
@given(configs(), st.data())
def test_union_find_matches_walk(cfg, data):
    tr = trace_loops(cfg)
    assert cfg.loop_count == tr.count
    # the walk is a partition: each strand segment appears once
    segs = [(s, lo) for loop in tr.loops for s, lo, _ in loop]
    assert len(segs) == len(set(segs))
    assert trace_loops(cfg).count == tr.count
    n = cfg.lattice.n_sites
    t = off_grid(cfg, data)
    for x in range(n):
        for y in range(n):
            assert cfg.same_loop(x, y, t) == (tr.loop_of(x, t) == tr.loop_of(y, t))


@settings(max_examples=150, deadline=None)
@given(configs(), st.data())
def test_single_bar_changes_count_by_one(cfg, data):
    e = data.draw(st.integers(0, cfg.lattice.n_edges - 1))
    t = off_grid(cfg, data)
    bigger = cfg.with_event(e, t)
    assert abs(trace_loops(bigger).count - trace_loops(cfg).count) == 1
    if cfg.n_events:
        i = data.draw(st.integers(0, cfg.n_events - 1))
        assert abs(cfg.without_event(i).loop_count - cfg.loop_count) == 1


def test_non_bipartite_rejected():
    from nematic_lro.lattice import _make

    tri = _make(1, 3, [(0,), (1,), (2,)], [(0, 1, 0), (1, 2, 0), (2, 0, 0)], False)
    with pytest.raises(ValueError):
        check_bipartite(tri)


def test_detailed_balance_truncated_dimer(bond):
    """Exact check on the dimer restricted to at most two bars."""
    T, theta = 1.7, 3.0
    loops = [LoopConfig.from_events(bond, T, [(0, t) for t in np.linspace(0.1, 1.5, n)]).loop_count for n in range(3)]
    pi = np.array([T**n / math.factorial(n) * theta ** loops[n] for n in range(3)])
    P = np.zeros((3, 3))
    for n in range(3):
        if n < 2:
            P[n, n + 1] = 0.5 * insert_acceptance(n, 1, T, theta, loops[n + 1] - loops[n])
        if n > 0:
            P[n, n - 1] = 0.5 * delete_acceptance(n, 1, T, theta, loops[n - 1] - loops[n])
        P[n, n] = 1 - P[n].sum()
    flow = pi[:, None] * P
    np.testing.assert_allclose(flow, flow.T, atol=1e-14)
    np.testing.assert_allclose(pi @ P, pi, rtol=1e-14)


def test_event_count_distribution_on_dimer(bond):
    T, theta = 1.5, 3.0
    ns = np.arange(80)
    w = np.array([T**n / math.factorial(n) * theta ** (2 if n == 0 else n) for n in ns])
    exact = float(np.sum(ns * w) / np.sum(w))
    res = run_chain(bond, T, 40000, seed=11)
    se, _ = blocking_error(res.n_events)
    assert abs(np.mean(res.n_events) - exact) < 4 * se


def test_flat_weight_is_poisson(chain4):
    T = 1.5
    res = run_chain(chain4, T, 20000, seed=3, theta=1.0)
    se, _ = blocking_error(res.n_events / chain4.n_edges)
    assert abs(np.mean(res.n_events) / chain4.n_edges - T) < 4 * se


def test_dimer_probability_matches_exact(bond):
    for beta in (0.5, 1.0, 2.0):
        ed = ed_dictionary(bond, beta)
        assert dimer_probability(2 * beta) == pytest.approx(ed["P_from_rho"], abs=1e-12)
        assert ed["P_from_cross"] == pytest.approx(ed["P_from_rho"], abs=1e-12)
        est = estimate_event(bond, 2 * beta, 20000, seed=4)
        assert abs(est.mean - dimer_probability(2 * beta)) < 3 * est.std_error


def test_energy_dictionary_exact_on_dimer(bond):
    ed = ed_dictionary(bond, 1.3)
    assert energy_from_P(bond, ed["P_from_rho"]) == pytest.approx(ed["energy"], abs=1e-12)


def test_time_translation_invariance(chain4):
    T = 2.0
    at0, at3 = [], []
    for cfg in sample(chain4, T, sweeps=6000, seed=5, every=2):
        at0.append(cfg.same_loop(0, 1, 0.0))
        at3.append(cfg.same_loop(0, 1, T / 3))
    a, b = np.array(at0, float), np.array(at3, float)
    se = math.hypot(blocking_error(a)[0], blocking_error(b)[0])
    assert abs(a.mean() - b.mean()) < 4 * se


def test_seeded_and_thread_independent(chain4):
    a = estimate_event(chain4, 2.0, 2000, seeds=[1, 2, 3], threads=1)
    b = estimate_event(chain4, 2.0, 2000, seeds=[1, 2, 3], threads=3)
    assert a.mean == b.mean and a.std_error == b.std_error
    c = estimate_event(chain4, 2.0, 2000, seeds=[1, 2, 4])
    assert c.mean != a.mean


def test_doubling_sweeps_no_drift(chain4):
    short = estimate_event(chain4, 2.0, 10000, seed=9, thermalize=1000)
    long = estimate_event(chain4, 2.0, 20000, seed=9, thermalize=1000)
    assert abs(long.mean - short.mean) < long.std_error


def test_estimate_requires_samples(chain4):
    with pytest.raises(ValueError):
        estimate_event(chain4, 1.0, 10)
    with pytest.raises(ValueError):
        estimate_event(chain4, 1.0, 1000, observable="winding")


def test_blocking_error():
    rng = np.random.default_rng(0)
    iid = rng.normal(size=2**14)
    se, tau = blocking_error(iid)
    assert se == pytest.approx(1 / math.sqrt(2**14), rel=0.2)
    assert tau < 1.0
    ar = np.zeros(2**14)
    for i in range(1, len(ar)):
        ar[i] = 0.95 * ar[i - 1] + rng.normal()
    assert blocking_error(ar)[1] > 5
    assert blocking_error(np.ones(100))[0] == pytest.approx(0.01)


def test_calibration_recovers_time_scale():
    cal = calibrate_time_scale()
    assert cal.c == 2.0
    for row in cal.table:
        if row["c"] == 2.0:
            assert abs(row["z"]) < 3


def test_calibration_negative_control():
    with pytest.raises(CalibrationError):
        calibrate_time_scale(theta=2.0)
