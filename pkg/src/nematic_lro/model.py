"""Hamiltonians of the spin-1 SU(2)-invariant model and the Q-matrix trace calculus.

Conventions
-----------
* ``q_x = (s^3_x)^2 - S(S+1)/3`` is the nematic observable.
* ``X_xy = s^1_x s^1_y - s^2_x s^2_y + s^3_x s^3_y`` is the staggered-rotated
  spin product; the rotated nematic bond is ``-2 J2 X_xy^2``.
* Fields: ``h`` enters as ``-sum_x h_x q_x``; the Gaussian-domination field
  ``v`` enters through ``h = J2 * Delta v``.
* ``J2`` is an explicit multiplier (``J2 = 1`` is the absorbed convention).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .lattice import Lattice, Reflection, laplacian_form
from .su2 import SpinSet, embed_sparse, max_norm, spin_matrices

VARIANTS = ("J1J2", "nematic_field", "HU", "Hv", "Hv_prime", "Htilde_v", "Htilde_v_prime")

# s^1, i s^2, s^3: all real in the standard basis
_PHASE = (1.0, 1j, 1.0)
# sign pattern of X = s1 s1 - s2 s2 + s3 s3
_STAGGER = (1.0, -1.0, 1.0)


@dataclass(frozen=True)
class ModelParams:
    J1: float = 0.0
    J2: float = 1.0
    beta: float = 1.0
    h: Optional[Sequence[float]] = None
    v: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.J1 > 0:
            raise ValueError(f"J1 must be <= 0, got {self.J1}")
        if self.J2 <= 0:
            raise ValueError(f"J2 must be > 0, got {self.J2}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


# ---------------------------------------------------------------------------
# local building blocks


def _spins(S=1) -> SpinSet:
    return spin_matrices(S)


def nematic_local(spins: SpinSet) -> np.ndarray:
    return spins.s3 @ spins.s3 - spins.casimir / 3 * np.eye(spins.dim)


def q_local(spins: SpinSet, shift: float = 0.0) -> list[list[np.ndarray]]:
    """Entries of ``Q_x`` in the ordering used inside ``TR``.

    Row ``a`` holds the products that start with ``s^a`` (``i s^2`` for
    ``a = 2``); ``shift`` is added to the ``{3,3}`` entry.
    """
    ops = [_PHASE[a] * spins.components[a] for a in range(3)]
    ident = np.eye(spins.dim)
    out = [[None] * 3 for _ in range(3)]
    for a in range(3):
        for b in range(3):
            if a == b:
                out[a][a] = spins.components[a] @ spins.components[a] - spins.casimir / 3 * ident
            else:
                out[a][b] = ops[a] @ ops[b]
    out[2][2] = out[2][2] + shift * ident
    return out


def c_local(spins: SpinSet) -> np.ndarray:
    """``C_x = TR(Q_x^2) + S^2 (S+1)^2 / 3`` on one site."""
    q = q_local(spins)
    trq2 = sum(q[a][b] @ q[a][b] for a in range(3) for b in range(3))
    return trq2 + spins.casimir**2 / 3 * np.eye(spins.dim)


def _pair(lattice, x, y, terms) -> sp.csr_matrix:
    """Sum of ``coef * a_x b_y`` over ``terms = [(coef, a, b), ...]``."""
    return sum(c * embed_sparse(lattice, {x: a, y: b}) for c, a, b in terms)


def _one(lattice, x, a) -> sp.csr_matrix:
    return embed_sparse(lattice, {x: a})


def _zero(lattice, dim) -> sp.csr_matrix:
    return sp.csr_matrix((dim**lattice.n_sites, dim**lattice.n_sites), dtype=complex)


def _heisenberg_terms(spins):
    return [(1.0, a, a) for a in spins.components]


def _rotated_terms(spins):
    return [(_STAGGER[a], spins.components[a], spins.components[a]) for a in range(3)]


def _square_terms(spins, signs):
    c = spins.components
    return [
        (signs[a] * signs[b], c[a] @ c[b], c[a] @ c[b]) for a in range(3) for b in range(3)
    ]


def _field_term(lattice, spins, h) -> sp.csr_matrix:
    h = lattice._field(h)
    q = nematic_local(spins)
    out = _zero(lattice, spins.dim)
    for x in range(lattice.n_sites):
        if h[x] != 0:
            out = out - h[x] * _one(lattice, x, q)
    return out


def _site_sum(lattice, spins, local) -> sp.csr_matrix:
    return sum(_one(lattice, x, local) for x in range(lattice.n_sites))


def total_spin(lattice: Lattice, alpha: int, S=1) -> np.ndarray:
    spins = _spins(S)
    return _site_sum(lattice, spins, spins.components[alpha]).toarray()


# ---------------------------------------------------------------------------
# Q matrices


@dataclass(frozen=True, eq=False)
class QMatrix:
    """``Q_x`` at one site, optionally shifted by ``v_x / 2`` in the ``{3,3}`` entry."""

    lattice: Lattice
    site: int
    spins: SpinSet = field(repr=False)
    shift: float = 0.0

    def oriented(self, a: int, b: int) -> np.ndarray:
        """Local matrix used for entry ``(a, b)`` inside the ``a``-th diagonal of ``TR``."""
        return q_local(self.spins, self.shift)[a][b]

    def local_entry(self, a: int, b: int) -> np.ndarray:
        """Entry ``(a, b)`` as displayed: the lower spin index comes first."""
        lo, hi = min(a, b), max(a, b)
        return q_local(self.spins, self.shift)[lo][hi]

    def entry(self, a: int, b: int) -> np.ndarray:
        return _one(self.lattice, self.site, self.local_entry(a, b)).toarray()

    def trace(self) -> np.ndarray:
        """``TR(Q_x)``: sum of the diagonal entries, an operator."""
        return sum(self.entry(a, a) for a in range(3))

    def with_field(self, v_x: float) -> "QMatrix":
        return QMatrix(self.lattice, self.site, self.spins, self.shift + v_x / 2)


def q_matrix(lattice: Lattice, x, S=1) -> QMatrix:
    return QMatrix(lattice, lattice.index(x), _spins(S))


def _tr_product_sparse(qx: QMatrix, qy: QMatrix) -> sp.csr_matrix:
    lat = qx.lattice
    out = _zero(lat, qx.spins.dim)
    for a in range(3):
        for b in range(3):
            ax, ay = qx.oriented(a, b), qy.oriented(a, b)
            if qx.site == qy.site:
                out = out + _one(lat, qx.site, ax @ ay)
            else:
                out = out + embed_sparse(lat, {qx.site: ax, qy.site: ay})
    return out


def tr_product(qx: QMatrix, qy: QMatrix) -> np.ndarray:
    """``TR(Q_x Q_y)``; within diagonal entry ``a`` every site factor starts with ``s^a``."""
    if qx.lattice is not qy.lattice:
        raise ValueError("Q matrices live on different lattices")
    return _tr_product_sparse(qx, qy).toarray()


def _tr_square_difference_sparse(qx: QMatrix, qy: QMatrix) -> sp.csr_matrix:
    lat = qx.lattice
    out = _zero(lat, qx.spins.dim)
    for a in range(3):
        for b in range(3):
            diff = _one(lat, qx.site, qx.oriented(a, b)) - _one(lat, qy.site, qy.oriented(a, b))
            out = out + diff @ diff
    return out


def tr_square_difference(qx: QMatrix, qy: QMatrix) -> np.ndarray:
    """``TR[(Q_x - Q_y)^2]`` expanded entrywise."""
    return _tr_square_difference_sparse(qx, qy).toarray()


# ---------------------------------------------------------------------------
# Hamiltonians


def _nematic_tr_sparse(lattice, spins, v) -> sp.csr_matrix:
    """``sum_E (TR[(Q_x + v_x/2 - Q_y - v_y/2)^2] - C_x - C_y)``."""
    cl = c_local(spins)
    out = _zero(lattice, spins.dim)
    for x, y, _ in lattice.edges:
        qx = QMatrix(lattice, x, spins, v[x] / 2)
        qy = QMatrix(lattice, y, spins, v[y] / 2)
        out = out + _tr_square_difference_sparse(qx, qy) - _one(lattice, x, cl) - _one(lattice, y, cl)
    return out


def _build_sparse(lattice: Lattice, params: ModelParams, which: str, S=1) -> sp.csr_matrix:
    spins = _spins(S)
    n = lattice.n_sites
    if which not in VARIANTS:
        raise ValueError(f"unknown Hamiltonian variant {which!r}; choose from {VARIANTS}")
    J1, J2 = params.J1, params.J2

    if which in ("J1J2", "nematic_field", "HU"):
        if which == "nematic_field" and J1 != 0:
            raise ValueError("nematic_field is the J1 = 0 model")
        if which == "HU" and J1 != 0:
            raise ValueError("HU is the J1 = 0 model; use Htilde_v for J1 < 0")
        if which == "HU" and lattice.torus and lattice.L % 2:
            raise ValueError("staggered variants need even L")
        signs = _STAGGER if which == "HU" else (1.0, 1.0, 1.0)
        lin = _rotated_terms(spins) if which == "HU" else _heisenberg_terms(spins)
        quad = _square_terms(spins, signs)
        out = _zero(lattice, spins.dim)
        for x, y, _ in lattice.edges:
            out = out - 2 * J2 * _pair(lattice, x, y, quad)
            if J1 != 0 and which != "HU":
                out = out - 2 * J1 * _pair(lattice, x, y, lin)
        h = np.zeros(n) if params.h is None else params.h
        return out + _field_term(lattice, spins, h)

    if params.v is None:
        raise ValueError(f"variant {which} requires the field v")
    if lattice.torus and lattice.L % 2:
        raise ValueError("staggered variants need even L")
    v = lattice._field(params.v)
    if which in ("Hv", "Hv_prime") and J1 != 0:
        raise ValueError(f"{which} is the J1 = 0 model; use Htilde_v for J1 < 0")
    quad_form = laplacian_form(lattice, v, v)
    # sum_E TR[(Q_x - Q_y)^2] - C_x - C_y) - sum_x (Delta v)_x q_x
    h_nem = _nematic_tr_sparse(lattice, spins, np.zeros(n)) + _field_term(
        lattice, spins, lattice.laplacian(v)
    )
    out = J2 * h_nem
    if which.startswith("Htilde") and J1 != 0:
        lin = _rotated_terms(spins)
        for x, y, _ in lattice.edges:
            out = out + 2 * J1 * _pair(lattice, x, y, lin)
    if which.endswith("_prime"):
        out = out + J2 * quad_form / 4 * sp.identity(out.shape[0], format="csr")
    return out


def build_H(lattice: Lattice, params: ModelParams, which: str = "J1J2", S=1) -> np.ndarray:
    """Dense Hamiltonian for one of the variants in ``VARIANTS``.

    ``J1J2``/``nematic_field``
        ``-2 sum_E (J1 S.S + J2 (S.S)^2) - sum h_x q_x``.
    ``HU``
        ``-2 J2 sum_E X^2 - sum h_x q_x`` (staggered frame, ``J1 = 0``).
    ``Hv``/``Hv_prime``
        ``HU`` with ``h = J2 Delta v`` written through ``TR[(Q_x - Q_y)^2]``;
        the primed form adds ``J2/4 (v, -Delta v)``.
    ``Htilde_v``/``Htilde_v_prime``
        ``U H^{J1,J2} U^-1`` with the same field, i.e. ``Hv + 2 J1 sum_E X``.
    """
    return _build_sparse(lattice, params, which, S).toarray()


def square_completion_check(lattice: Lattice, v, J2: float = 1.0, S=1) -> dict:
    """Residuals of the square completion of ``H(v)``; all should vanish."""
    spins = _spins(S)
    v = lattice._field(v)
    hv = _build_sparse(lattice, ModelParams(J2=J2, v=v), "Hv", S).toarray()
    direct = _build_sparse(
        lattice, ModelParams(J2=J2, h=J2 * lattice.laplacian(v)), "HU", S
    ).toarray()
    completed = J2 * (
        _nematic_tr_sparse(lattice, spins, v).toarray()
        - laplacian_form(lattice, v, v) / 4 * np.eye(hv.shape[0])
    )

    # nine explicit squares for each bond, written without the Q-matrix helper
    s1, s2, s3 = spins.components
    i2 = 1j * s2
    nine_worst = 0.0
    cross_worst = 0.0
    for x, y, _ in lattice.edges:
        qx = QMatrix(lattice, x, spins, v[x] / 2)
        qy = QMatrix(lattice, y, spins, v[y] / 2)
        tr = _tr_square_difference_sparse(qx, qy).toarray()
        ex = [s1 @ s1, s2 @ s2, s3 @ s3, s1 @ i2, s1 @ s3, i2 @ s3, i2 @ s1, s3 @ s1, s3 @ i2]
        expanded = 0
        for j, a in enumerate(ex):
            sx = v[x] / 2 * np.eye(spins.dim) if j == 2 else 0
            sy = v[y] / 2 * np.eye(spins.dim) if j == 2 else 0
            diff = (_one(lattice, x, a + sx) - _one(lattice, y, a + sy)).toarray()
            expanded = expanded + diff @ diff
        nine_worst = max(nine_worst, max_norm(tr - expanded))
        # TR[(Q_x - Q_y) V] == TR[V (Q_x - Q_y)] with V = diag-block field matrix
        q0x, q0y = QMatrix(lattice, x, spins), QMatrix(lattice, y, spins)
        dv = v[x] - v[y]
        left = sum(
            (_one(lattice, x, q0x.oriented(a, b)) - _one(lattice, y, q0y.oriented(a, b)))
            * (dv if (a, b) == (2, 2) else 0)
            for a in range(3)
            for b in range(3)
        )
        right = sum(
            (dv if (a, b) == (2, 2) else 0)
            * (_one(lattice, x, q0x.oriented(a, b)) - _one(lattice, y, q0y.oriented(a, b)))
            for a in range(3)
            for b in range(3)
        )
        cross_worst = max(cross_worst, max_norm((left - right).toarray()))

    res = {
        "tr_form_vs_direct": max_norm(hv - direct),
        "completed_square": max_norm(hv - completed),
        "nine_term_trace": nine_worst,
        "cross_term_symmetry": cross_worst,
    }
    res["max"] = max(res.values())
    return res


# ---------------------------------------------------------------------------
# staggered frame and trial state


def staggered_unitary(lattice: Lattice, S=1) -> np.ndarray:
    """``U = prod_{x in B} exp(i pi s^2_x)``."""
    if lattice.torus and lattice.L % 2:
        raise ValueError("staggered unitary needs even L")
    spins = _spins(S)
    rot = sla.expm(1j * np.pi * spins.s2)
    b_sites = np.flatnonzero(lattice.sublattice == 1)
    return embed_sparse(lattice, {int(x): rot for x in b_sites}).toarray()


def neel_state(lattice: Lattice) -> np.ndarray:
    """Product state with ``s^3 = +1`` on sublattice A and ``-1`` on B."""
    if lattice.torus and lattice.L % 2:
        raise ValueError("Neel state needs even L")
    up, down = np.array([1.0, 0, 0]), np.array([0, 0, 1.0])
    psi = np.ones(1, dtype=complex)
    for x in range(lattice.n_sites):
        psi = np.kron(psi, down if lattice.sublattice[x] else up)
    return psi


# ---------------------------------------------------------------------------
# reflection-positive form


@dataclass
class RPForm:
    """``-beta H'(v) = A + B - sum_i (C_i - D_i)^2`` across one reflection.

    ``families`` labels each ``(C_i, D_i)`` with its family number (1-9 from
    the Q-matrix trace, 10-12 from the ``J1`` bond) and crossing bond.
    """

    A: np.ndarray
    B: np.ndarray
    C: list
    D: list
    families: list
    target: np.ndarray

    def assemble(self) -> np.ndarray:
        out = self.A + self.B
        for c, d in zip(self.C, self.D):
            diff = c - d
            out = out - diff @ diff
        return out

    def residual(self) -> float:
        return max_norm(self.assemble() - self.target)

    def all_real(self, tol: float = 1e-12) -> bool:
        mats = [self.A, self.B, *self.C, *self.D]
        return all(max_norm(m.imag) < tol for m in mats)


def rp_decomposition(
    lattice: Lattice, R: Reflection, beta: float, v, J1: float = 0.0, J2: float = 1.0, S=1
) -> RPForm:
    """Split ``-beta H~'(v)`` into parts on each half plus crossing squares."""
    spins = _spins(S)
    v = lattice._field(v)
    in1 = np.zeros(lattice.n_sites, dtype=bool)
    in1[R.side1] = True
    cl = c_local(spins)
    comps = spins.components
    # site remainder of the J1 square completion: s1^2 - s2^2 + s3^2
    nl = sum(_PHASE[a] ** 2 * comps[a] @ comps[a] for a in range(3))
    lin = _rotated_terms(spins)

    A = _zero(lattice, spins.dim)
    B = _zero(lattice, spins.dim)
    C, D, fam = [], [], []
    for x, y, _ in lattice.edges:
        qx = QMatrix(lattice, x, spins, v[x] / 2)
        qy = QMatrix(lattice, y, spins, v[y] / 2)
        if in1[x] == in1[y]:
            bond = -beta * (
                J2 * (_tr_square_difference_sparse(qx, qy) - _one(lattice, x, cl) - _one(lattice, y, cl))
                + 2 * J1 * _pair(lattice, x, y, lin)
            )
            if in1[x]:
                A = A + bond
            else:
                B = B + bond
            continue
        a_site, b_site = (x, y) if in1[x] else (y, x)
        qa, qb = (qx, qy) if in1[x] else (qy, qx)
        A = A + beta * J2 * _one(lattice, a_site, cl) - beta * J1 * _one(lattice, a_site, nl)
        B = B + beta * J2 * _one(lattice, b_site, cl) - beta * J1 * _one(lattice, b_site, nl)
        k = 0
        for a in range(3):
            for b in range(3):
                k += 1
                C.append(np.sqrt(beta * J2) * _one(lattice, a_site, qa.oriented(a, b)).toarray())
                D.append(np.sqrt(beta * J2) * _one(lattice, b_site, qb.oriented(a, b)).toarray())
                fam.append((k, (a_site, b_site)))
        if J1 != 0:
            w = np.sqrt(-beta * J1)
            for a in range(3):
                op = _PHASE[a] * comps[a]
                C.append(w * _one(lattice, a_site, op).toarray())
                D.append(w * _one(lattice, b_site, op).toarray())
                fam.append((10 + a, (a_site, b_site)))
    target = -beta * _build_sparse(lattice, ModelParams(J1=J1, J2=J2, v=v), "Htilde_v_prime", S)
    return RPForm(A.toarray(), B.toarray(), C, D, fam, target.toarray())


def j1_site_remainder(lattice: Lattice, J1: float, S=1) -> np.ndarray:
    """``2 J1 sum_E X_xy + J1 sum_E [(s1_x - s1_y)^2 - (s2_x - s2_y)^2 + (s3_x - s3_y)^2]``.

    This is what the square completion of the ``J1`` bond leaves behind:
    ``J1 * sum_x deg(x) (s1^2 - s2^2 + s3^2)_x``, a single-site operator
    that is not a multiple of the identity.
    """
    spins = _spins(S)
    comps = spins.components
    nl = sum(_PHASE[a] ** 2 * comps[a] @ comps[a] for a in range(3))
    deg = np.zeros(lattice.n_sites)
    for x, y, _ in lattice.edges:
        deg[x] += 1
        deg[y] += 1
    return J1 * sum(deg[x] * _one(lattice, x, nl) for x in range(lattice.n_sites)).toarray()
