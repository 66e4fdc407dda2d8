import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nematic_lro.infrared import (
    POSITIVITY_CUTOFF,
    InconclusiveError,
    QuadratureResult,
    _tensor_mean,
    compute_id,
    finite_volume_bound,
    integrand,
    lower_bound,
    riemann_sum,
    threshold_dimension,
)
from nematic_lro.lattice import build_torus


@given(arrays(float, 4, elements=st.floats(-np.pi, np.pi)))
def test_integrand_support(k):
    if np.sum(np.cos(k)) <= 0:
        assert integrand(k) == 0
    else:
        assert integrand(k) > 0


def test_integrand_against_formula():
    k = np.array([0.3, -0.2, 1.1])
    eps = lambda q: 2 * np.sum(1 - np.cos(q))
    expected = math.sqrt(eps(k + np.pi) / eps(k)) * np.mean(np.cos(k))
    assert integrand(k) == pytest.approx(expected, rel=1e-14)


def test_dimension_below_three_rejected():
    with pytest.raises(ValueError):
        compute_id(2)


@pytest.mark.parametrize("d,ns", [(3, (64, 128, 256)), (4, (16, 32, 64)), (5, (8, 16, 32))])
def test_tensor_refinement_monotone(d, ns):
    v = [_tensor_mean(d, n) for n in ns]
    steps = np.diff(v)
    assert np.all(steps > 0) or np.all(steps < 0)
    assert abs(steps[1]) < abs(steps[0])


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_methods_agree(d):
    a, b = compute_id(d, "tensor"), compute_id(d, "qmc")
    assert a.method == "tensor-grid" and b.method == "monte-carlo"
    assert b.error_estimate > 0
    assert abs(a.value - b.value) <= a.error_estimate + b.error_estimate


def test_decreasing_in_d():
    assert compute_id(8).value < compute_id(4).value
    vals = [compute_id(d).value for d in range(3, 9)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_bound_algebra():
    fake = QuadratureResult(0.1, 1e-6, "tensor-grid", 1, 9)
    rep = lower_bound(0.25, 9, quad=fake)
    assert rep.bound_value == pytest.approx(0.5 * (2 / 9 * 0.5 - 0.1 / math.sqrt(3)))
    for i_d in (POSITIVITY_CUTOFF - 1e-3, POSITIVITY_CUTOFF + 1e-3):
        rep = lower_bound(0.25, 9, quad=QuadratureResult(i_d, 1e-6, "tensor-grid", 1, 9))
        assert rep.positive == (i_d < POSITIVITY_CUTOFF)
    # P = 1 only needs I_d < 2 sqrt(3) / 9
    rep = lower_bound(1.0, 9, quad=QuadratureResult(0.3, 1e-6, "tensor-grid", 1, 9))
    assert rep.positive and 0.3 < 2 * math.sqrt(3) / 9
    with pytest.raises(ValueError):
        lower_bound(0.0, 6)


def test_bound_monotone_in_P():
    q = compute_id(6)
    vals = [lower_bound(P, 6, quad=q).bound_value for P in (0.25, 0.5, 0.75, 1.0)]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_inconclusive_is_explicit():
    q = QuadratureResult(POSITIVITY_CUTOFF + 1e-4, 1e-2, "monte-carlo", 1, 6)
    assert lower_bound(0.25, 6, quad=q).status == "inconclusive"
    with pytest.raises(InconclusiveError):
        threshold_dimension(0.25, dims=[3, 4], method="tensor")


def test_threshold_stable_under_doubled_budget():
    assert threshold_dimension(0.25) == 6
    assert threshold_dimension(0.25, method="qmc", budget=2**23) == 6


def test_riemann_sum_converges():
    target = compute_id(3).value
    errs = [abs(riemann_sum(3, L) - target) for L in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 5e-3


def test_beta_term_decreases():
    lat = build_torus(1, 4)
    vals = [finite_volume_bound(lat, b, 0.0, 0.0) for b in (0.5, 1, 2, 4, 8)]
    # with rho and X zero only the -1/(2 beta eps) part remains
    assert all(x < y for x, y in zip(vals, vals[1:]))
    assert all(v < 0 for v in vals)
