"""Exact operator identities, each reported as a max-norm residual."""

from __future__ import annotations

import numpy as np

from .lattice import Lattice, reflections
from .model import (
    ModelParams,
    _STAGGER,
    build_H,
    c_local,
    q_matrix,
    rp_decomposition,
    square_completion_check,
    staggered_unitary,
    tr_product,
)
from .su2 import embed_sites, max_norm, spin_matrices, su2_residual

_R2 = np.sqrt(2)
S1_TABLE = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / _R2
S2_TABLE = np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]]) / (_R2 * 1j)
S3_TABLE = np.diag([1.0, 0.0, -1.0])


def local_identities() -> dict[str, float]:
    sp = spin_matrices(1)
    comps = sp.components
    out = {
        "su2_spin_half": su2_residual(spin_matrices(0.5)),
        "su2_spin_one": su2_residual(sp),
        "su2_spin_three_halves": su2_residual(spin_matrices(1.5)),
        "spin_one_table": max(
            max_norm(sp.s1 - S1_TABLE), max_norm(sp.s2 - S2_TABLE), max_norm(sp.s3 - S3_TABLE)
        ),
        "cube": max(max_norm(a @ a @ a - a) for a in comps),
        "sandwich": max(
            max_norm(comps[i] @ comps[j] @ comps[i]) for i in range(3) for j in range(3) if i != j
        ),
        # s1, s3 real symmetric and s2 imaginary antisymmetric
        "transpose": max(max_norm(comps[a].T - _STAGGER[a] * comps[a]) for a in range(3)),
        "self_trace": max_norm(c_local(sp) - 2 * np.eye(3)),
    }
    return out


def lattice_identities(lattice: Lattice, seed: int = 0, J1: float = -0.1) -> dict[str, float]:
    """Q-matrix calculus, square completion, staggered frame and reflection splitting."""
    rng = np.random.default_rng(seed)
    sp = spin_matrices(1)
    n = lattice.n_sites
    dim = 3**n
    qs = [q_matrix(lattice, x) for x in range(n)]
    out = {}
    out["q_trace"] = max(max_norm(q.trace()) for q in qs)
    worst = 0.0
    sign = [1, -1, 1]
    for x, y, _ in lattice.edges:
        xx = sum(sign[a] * embed_sites(lattice, {x: sp.components[a], y: sp.components[a]}) for a in range(3))
        worst = max(worst, max_norm(tr_product(qs[x], qs[y]) - (xx @ xx - 4 / 3 * np.eye(dim))))
    out["tr_product"] = worst
    out["tr_self"] = max(max_norm(tr_product(q, q) + 4 / 3 * np.eye(dim) - 2 * np.eye(dim)) for q in qs)
    v = rng.normal(size=n)
    out["square_completion"] = square_completion_check(lattice, v)["max"]

    u = staggered_unitary(lattice)
    ud = u.conj().T
    h01 = build_H(lattice, ModelParams(), "J1J2")
    hu = build_H(lattice, ModelParams(), "HU")
    out["unitary"] = max_norm(u @ ud - np.eye(dim))
    out["staggered_frame"] = max_norm(ud @ hu @ u - h01)
    hj = build_H(lattice, ModelParams(J1=J1), "J1J2")
    ht = build_H(lattice, ModelParams(J1=J1, v=np.zeros(n)), "Htilde_v")
    out["staggered_frame_J1"] = max_norm(u @ hj @ ud - ht)
    out["hu_real_symmetric"] = max(max_norm(hu.imag), max_norm(hu - hu.T))
    if lattice.torus:
        worst = 0.0
        for R in reflections(lattice)[:2]:
            form = rp_decomposition(lattice, R, 1.0, rng.normal(size=n), J1=J1)
            worst = max(worst, form.residual())
            if not form.all_real():
                worst = max(worst, 1.0)
        out["reflection_split"] = worst
    return out


def identity_suite(lattice: Lattice, seed: int = 0) -> dict[str, float]:
    out = local_identities()
    out.update(lattice_identities(lattice, seed))
    return out
