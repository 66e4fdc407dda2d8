"""Numerical certificates for the inequalities behind the infrared-bound argument.

Every check compares log-partition functions or thermal expectations obtained
from the full spectrum, and returns a plain dict so results drop straight into
JSON reports.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .lattice import Lattice, Reflection, epsilon, laplacian_form
from .model import ModelParams, _rotated_terms, _pair, build_H
from .su2 import embed_sites, spin_matrices
from .thermal import (
    ThermalState,
    correlations,
    diagonalize,
    double_commutator,
    fourier_observable,
    log_partition,
    nematic_ops,
)

MARGIN_TOL = 1e-9


class FieldFamily:
    """``H~(v) = H~(0) - J2 sum_x (Delta v)_x q_x`` with the pieces cached.

    Used for field ensembles; ``build_H`` is the literal construction and the
    two agree (see the model tests).
    """

    def __init__(self, lattice: Lattice, J1: float = 0.0, J2: float = 1.0):
        self.lattice = lattice
        self.J1 = J1
        self.J2 = J2
        zero = np.zeros(lattice.n_sites)
        self.base = build_H(lattice, ModelParams(J1=J1, J2=J2, v=zero), "Htilde_v")
        self.q = nematic_ops(lattice)

    def hamiltonian(self, v, prime: bool = False) -> np.ndarray:
        lap = self.lattice.laplacian(v)
        h = self.base - self.J2 * sum(c * q for c, q in zip(lap, self.q) if c != 0)
        if prime:
            h = h + self.J2 * laplacian_form(self.lattice, v, v) / 4 * np.eye(len(h))
        return h

    def log_z(self, v, beta: float, prime: bool = False) -> float:
        return log_partition(self.hamiltonian(v, prime), beta)


def hamiltonian_parts(lattice: Lattice, J1: float, J2: float):
    """Nematic part ``HU`` and the rotated ``J1`` bond sum ``2 J1 sum_E X``."""
    h_nem = build_H(lattice, ModelParams(J2=J2), "HU")
    spins = spin_matrices(1)
    h_j1 = np.zeros_like(h_nem)
    if J1 != 0:
        for x, y, _ in lattice.edges:
            h_j1 = h_j1 + 2 * J1 * _pair(lattice, x, y, _rotated_terms(spins)).toarray()
    return h_nem, h_j1


def neighbour_e1(lattice: Lattice) -> int:
    return lattice.shift(lattice.origin, 0)


def cross_term(lattice: Lattice, state: ThermalState) -> float:
    """``< s1 s3 at 0  times  s1 s3 at e1 >``."""
    sp = spin_matrices(1)
    o, e = lattice.origin, neighbour_e1(lattice)
    m = sp.s1 @ sp.s3
    return state.gibbs(embed_sites(lattice, {o: m, e: m})).real


def cross_terms(lattice: Lattice, state: ThermalState) -> dict:
    """All ``<s^i s^j at 0  s^i s^j at e1>`` products, keyed ``"ij"``."""
    comps = spin_matrices(1).components
    o, e = lattice.origin, neighbour_e1(lattice)
    out = {}
    for i in range(3):
        for j in range(3):
            m = comps[i] @ comps[j]
            out[f"{i + 1}{j + 1}"] = state.gibbs(embed_sites(lattice, {o: m, e: m})).real
    return out


def double_commutator_check(
    lattice: Lattice, beta: float, k, J1: float = 0.0, J2: float = 1.0, state=None, parts=None
) -> dict:
    """Compare ``<[A*, [beta H, A]]>`` with ``8 beta J2 |L| eps(k+pi) <s1s3 s1s3>``.

    ``lhs`` uses the full staggered-frame Hamiltonian; ``nematic`` and
    ``extra`` split it into the ``J2`` and ``J1`` bonds (same state).
    The closed form is asserted only for ``J1 = 0``.
    """
    k = np.asarray(k, dtype=float)
    h_nem, h_j1 = parts if parts is not None else hamiltonian_parts(lattice, J1, J2)
    if state is None:
        state = diagonalize(h_nem + h_j1, beta)
    a = fourier_observable(lattice, k)
    nem = double_commutator(state, a, beta * h_nem).real
    extra = double_commutator(state, a, beta * h_j1).real if J1 != 0 else 0.0
    x = cross_term(lattice, state)
    rhs = 8 * beta * J2 * lattice.n_sites * epsilon(k + np.pi) * x
    return {
        "k": k.tolist(),
        "lhs": nem + extra,
        "nematic": nem,
        "extra": extra,
        "rhs": rhs,
        "cross_term": x,
        "residual": abs(nem - rhs),
    }


def gaussian_domination_check(
    lattice: Lattice, beta: float, v, J1: float = 0.0, J2: float = 1.0, family=None
) -> dict:
    """``log Z(0) + beta J2 / 4 (v, -Delta v) - log Z(v)``, nonnegative if GD holds."""
    fam = family if family is not None else FieldFamily(lattice, J1, J2)
    v = lattice._field(v)
    lz0 = fam.log_z(np.zeros(lattice.n_sites), beta)
    lzv = fam.log_z(v, beta)
    quad = laplacian_form(lattice, v, v)
    bound = lz0 + beta * J2 * quad / 4
    margin = bound - lzv
    return {"log_Zv": lzv, "log_bound": bound, "margin": margin, "ok": margin >= -MARGIN_TOL}


def reflected_fields(lattice: Lattice, R: Reflection, v1, v2):
    """Return ``(v1, v2)``, ``(v1, R v1)`` and ``(R v2, v2)`` as full-lattice fields."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    half = len(R.side1)
    if v1.shape != (half,) or v2.shape != (half,):
        raise ValueError(f"each half-field needs {half} values for this reflection")
    n = lattice.n_sites
    mixed, left, right = np.zeros(n), np.zeros(n), np.zeros(n)
    mixed[R.side1], mixed[R.side2] = v1, v2
    left[R.side1], left[R.side2] = v1, v1
    right[R.side1], right[R.side2] = v2, v2
    return mixed, left, right


def rp_inequality_check(
    lattice: Lattice,
    beta: float,
    v1,
    v2,
    R: Reflection,
    J1: float = 0.0,
    J2: float = 1.0,
    family=None,
) -> dict:
    """Reflection positivity ``Z'(v1,v2)^2 <= Z'(v1,Rv1) Z'(Rv2,v2)``.

    ``margin`` is for the square-completed partition function ``Z'``.
    ``margin_unprimed`` repeats the comparison with ``Z`` itself; it is
    reported but not asserted since ``Z`` carries the extra factor
    ``exp(beta J2/4 (v,-Delta v))`` which does not factorise across the cut.
    """
    fam = family if family is not None else FieldFamily(lattice, J1, J2)
    mixed, left, right = reflected_fields(lattice, R, v1, v2)
    lp = [fam.log_z(f, beta, prime=True) for f in (mixed, left, right)]
    quads = [laplacian_form(lattice, f, f) for f in (mixed, left, right)]
    lz = [p + beta * J2 * q / 4 for p, q in zip(lp, quads)]
    margin = lp[1] + lp[2] - 2 * lp[0]
    return {
        "margin": margin,
        "margin_unprimed": lz[1] + lz[2] - 2 * lz[0],
        "ok": margin >= -MARGIN_TOL,
    }


def rp_lemma_margin(A, B, Cs, Ds) -> float:
    """``log`` RHS minus ``log`` LHS of the abstract two-factor RP inequality on ``h (x) h``."""
    n = A.shape[0]
    one = np.eye(n)

    def exponent(a, b, cs, ds):
        out = np.kron(a, one) + np.kron(one, b)
        for c, d in zip(cs, ds):
            diff = np.kron(c, one) - np.kron(one, d)
            out = out - diff @ diff
        return out

    def logtr(m):
        return np.log(abs(np.trace(sla.expm(m))))

    lhs = 2 * logtr(exponent(A, B, Cs, Ds))
    rhs1 = logtr(exponent(A, A.conj(), Cs, [c.conj() for c in Cs]))
    rhs2 = logtr(exponent(B.conj(), B, [d.conj() for d in Ds], Ds))
    return float(rhs1 + rhs2 - lhs)


def infrared_bound_check(
    lattice: Lattice, beta: float, k, J1: float = 0.0, J2: float = 1.0, state=None
) -> dict:
    """``|L|^-1 (A(k), A(k))_Duh <= 1 / (2 beta J2 eps(k))`` for ``k != 0``."""
    k = np.asarray(k, dtype=float)
    eps = epsilon(k)
    if eps == 0:
        raise ValueError("infrared bound excludes k = 0")
    if state is None:
        state = diagonalize(build_H(lattice, ModelParams(J1=J1, J2=J2, v=np.zeros(lattice.n_sites)), "Htilde_v"), beta)
    a = fourier_observable(lattice, k)
    duh = state.duhamel(a, a).real / lattice.n_sites
    cap = 1.0 / (2 * beta * J2 * eps)
    return {"k": k.tolist(), "duhamel_hat": duh, "cap": cap, "margin": cap - duh, "ok": duh <= cap + MARGIN_TOL}


def falk_bruch_check(
    lattice: Lattice, beta: float, k, J1: float = 0.0, J2: float = 1.0, state=None, parts=None
) -> dict:
    """Falk-Bruch at ``A = A(k)`` plus the pointwise bound on ``rho_hat(k)``.

    ``irb2_rhs`` is ``cap + sqrt(cap * c / |L|) / 2`` with ``c`` the full double
    commutator; at ``J1 = 0`` it equals
    ``sqrt(<s1s3 s1s3>) sqrt(eps(k+pi)/eps(k)) + 1/(2 beta eps(k))``.
    """
    k = np.asarray(k, dtype=float)
    h_nem, h_j1 = parts if parts is not None else hamiltonian_parts(lattice, J1, J2)
    if state is None:
        state = diagonalize(h_nem + h_j1, beta)
    n = lattice.n_sites
    a = fourier_observable(lattice, k)
    ad = a.conj().T
    sym = 0.5 * state.gibbs(ad @ a + a @ ad).real
    duh = state.duhamel(a, a).real
    dc = double_commutator(state, a, beta * (h_nem + h_j1)).real
    rhs = duh + 0.5 * np.sqrt(max(duh, 0) * max(dc, 0))
    eps = epsilon(k)
    cap = 1.0 / (2 * beta * J2 * eps)
    rho_hat = state.gibbs(ad @ a).real / n
    irb2 = cap + 0.5 * np.sqrt(cap * max(dc, 0) / n)
    out = {
        "k": k.tolist(),
        "sym_part": sym,
        "duhamel": duh,
        "double_commutator": dc,
        "rhs": rhs,
        "margin": rhs - sym,
        "ok": sym <= rhs + MARGIN_TOL,
        "rho_hat": rho_hat,
        "irb2_rhs": irb2,
        "irb2_margin": irb2 - rho_hat,
        "irb2_ok": rho_hat <= irb2 + MARGIN_TOL,
    }
    if J1 == 0:
        x = cross_term(lattice, state)
        out["irb2_closed_form"] = float(np.sqrt(x) * np.sqrt(epsilon(k + np.pi) / eps) + cap)
    return out


def lower_bound_finite(
    lattice: Lattice, beta: float, J1: float = 0.0, J2: float = 1.0, state=None, parts=None
) -> dict:
    """Finite-volume lower bound on ``|L|^-1 sum_x rho(x)`` and its direct value.

    At ``J1 = 0`` the closed form with ``<s1s3 s1s3>`` is used; for ``J1 < 0``
    the double commutator is evaluated numerically at every ``k``.
    """
    from .infrared import finite_volume_bound

    h_nem, h_j1 = parts if parts is not None else hamiltonian_parts(lattice, J1, J2)
    if state is None:
        state = diagonalize(h_nem + h_j1, beta)
    corr = correlations(lattice, state)
    rho_e1 = float(corr.rho[neighbour_e1(lattice)])
    direct = float(np.mean(corr.rho))
    x = cross_term(lattice, state)
    if J1 == 0:
        value = finite_volume_bound(lattice, beta, rho_e1, x, J2=J2)
    else:
        dcs = {}
        for k in lattice.nonzero_modes():
            a = fourier_observable(lattice, k)
            dcs[tuple(k)] = double_commutator(state, a, beta * (h_nem + h_j1)).real
        value = finite_volume_bound(lattice, beta, rho_e1, x, J2=J2, double_commutators=dcs)
    return {
        "bound": value,
        "direct": direct,
        "rho_e1": rho_e1,
        "cross_term": x,
        "ok": direct >= value - MARGIN_TOL,
    }
