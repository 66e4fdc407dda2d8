import numpy as np
import pytest

from nematic_lro.inequalities import (
    FieldFamily,
    cross_term,
    cross_terms,
    double_commutator_check,
    falk_bruch_check,
    gaussian_domination_check,
    hamiltonian_parts,
    infrared_bound_check,
    lower_bound_finite,
    reflected_fields,
    rp_inequality_check,
    rp_lemma_margin,
)
from nematic_lro.lattice import epsilon, reflections
from nematic_lro.model import ModelParams, build_H
from nematic_lro.su2 import max_norm
from nematic_lro.thermal import diagonalize, thermal_state


def herm(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@pytest.mark.parametrize("J1", [0.0, -0.2])
def test_field_family_matches_literal_build(chain4, J1):
    fam = FieldFamily(chain4, J1)
    v = np.array([0.4, -1.2, 0.3, 0.9])
    for which, prime in (("Htilde_v", False), ("Htilde_v_prime", True)):
        ref = build_H(chain4, ModelParams(J1=J1, v=v), which)
        assert max_norm(fam.hamiltonian(v, prime) - ref) < 1e-12


def test_lemma_on_random_matrices():
    rng = np.random.default_rng(5)
    for _ in range(100):
        A, B = herm(3, rng), herm(3, rng)
        Cs = [0.7 * herm(3, rng) for _ in range(2)]
        Ds = [0.7 * herm(3, rng) for _ in range(2)]
        assert rp_lemma_margin(A, B, Cs, Ds) >= -1e-9
    # reflection-symmetric data saturates the inequality
    A = herm(3, rng)
    Cs = [herm(3, rng)]
    assert rp_lemma_margin(A, A.conj(), Cs, [c.conj() for c in Cs]) == pytest.approx(0, abs=1e-9)


def test_symmetric_field_gives_equality(chain4):
    rng = np.random.default_rng(0)
    for R in reflections(chain4):
        v1 = rng.normal(size=2)
        r = rp_inequality_check(chain4, 1.0, v1, v1, R)
        assert r["margin"] == pytest.approx(0, abs=1e-9)


def test_reflected_fields_layout(chain4):
    R = reflections(chain4)[0]
    mixed, left, right = reflected_fields(chain4, R, [1.0, 2.0], [3.0, 4.0])
    np.testing.assert_array_equal(mixed[R.side1], [1, 2])
    np.testing.assert_array_equal(mixed[R.side2], [3, 4])
    np.testing.assert_array_equal(left[R.side2], [1, 2])
    np.testing.assert_array_equal(right[R.side1], [3, 4])
    with pytest.raises(ValueError):
        reflected_fields(chain4, R, [1.0], [2.0, 3.0])


def test_unprimed_partition_is_not_reflection_positive(chain4):
    # the Gaussian factor exp(beta/4 (v,-Delta v)) couples the halves
    rng = np.random.default_rng(1)
    fam = FieldFamily(chain4)
    margins = [
        rp_inequality_check(chain4, 1.0, rng.normal(size=2), rng.normal(size=2), R, family=fam)
        for R in reflections(chain4)
        for _ in range(10)
    ]
    assert min(m["margin"] for m in margins) >= -1e-9
    assert min(m["margin_unprimed"] for m in margins) < 0


def test_gaussian_domination_trivial_fields(chain4):
    for v in (np.zeros(4), np.full(4, 2.5)):
        assert gaussian_domination_check(chain4, 1.0, v)["margin"] == pytest.approx(0, abs=1e-10)


@pytest.mark.parametrize("J1", [0.0, -0.05])
def test_infrared_bound_all_modes(chain4, J1):
    for beta in (0.5, 1.0, 2.0, 4.0):
        st = thermal_state(chain4, beta, J1)
        for k in chain4.nonzero_modes():
            assert infrared_bound_check(chain4, beta, k, J1, state=st)["ok"]
    with pytest.raises(ValueError):
        infrared_bound_check(chain4, 1.0, np.zeros(1))


def test_infrared_high_temperature(chain4):
    k = np.array([np.pi / 2])
    r = infrared_bound_check(chain4, 1e-4, k)
    assert r["duhamel_hat"] < 1.0 and r["cap"] > 1e3


def test_double_commutator_equality(chain4):
    parts = hamiltonian_parts(chain4, 0.0, 1.0)
    st = diagonalize(parts[0], 1.0)
    for k in chain4.kpoints():
        r = double_commutator_check(chain4, 1.0, k, state=st, parts=parts)
        assert r["residual"] < 1e-8
    # k = pi: A(k) commutes with the staggered Hamiltonian
    r = double_commutator_check(chain4, 1.0, np.array([np.pi]), state=st, parts=parts)
    assert abs(r["lhs"]) < 1e-10


def test_cross_terms_isotropic_products(chain4):
    st = thermal_state(chain4, 1.0)
    ct = cross_terms(chain4, st)
    assert ct["13"] == pytest.approx(cross_term(chain4, st))
    # off-diagonal products of the rotated frame all agree
    for key in ("12", "21", "23", "32", "31"):
        assert abs(ct[key]) == pytest.approx(abs(ct["13"]), abs=1e-10)


def test_falk_bruch_and_pointwise(chain4):
    parts = hamiltonian_parts(chain4, 0.0, 1.0)
    st = diagonalize(parts[0], 1.0)
    for k in chain4.nonzero_modes():
        r = falk_bruch_check(chain4, 1.0, k, state=st, parts=parts)
        assert r["ok"] and r["irb2_ok"]
        assert r["irb2_rhs"] == pytest.approx(r["irb2_closed_form"], abs=1e-12)


def test_finite_volume_direction(chain4):
    for beta in (1.0, 2.0, 4.0):
        r = lower_bound_finite(chain4, beta)
        assert r["ok"]
        assert r["direct"] >= r["bound"]


def test_j1_bound_uses_numeric_commutator(chain4):
    # at J1 = 0 the general expression reduces to the closed form
    from nematic_lro.infrared import finite_volume_bound
    from nematic_lro.thermal import double_commutator, fourier_observable

    parts = hamiltonian_parts(chain4, 0.0, 1.0)
    st = diagonalize(parts[0], 2.0)
    r = lower_bound_finite(chain4, 2.0, state=st, parts=parts)
    dcs = {tuple(k): double_commutator(st, fourier_observable(chain4, k), 2.0 * parts[0]).real for k in chain4.nonzero_modes()}
    general = finite_volume_bound(chain4, 2.0, r["rho_e1"], r["cross_term"], double_commutators=dcs)
    assert general == pytest.approx(r["bound"], abs=1e-12)
    assert epsilon(np.array([np.pi])) == 4
