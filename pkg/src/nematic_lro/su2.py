"""Spin matrices and tensor-product embedding into the lattice Hilbert space.

Operators are plain dense ``numpy`` arrays.  Their lattice is implied by the
dimension ``(2S+1)**n_sites``; every function that mixes operators checks it.
Site ``x`` is the ``x``-th tensor factor in the lattice's canonical order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Mapping

import numpy as np
import scipy.sparse as sp

# absolute max-norm tolerance for exact operator identities
IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class SpinSet:
    """Generators ``s1, s2, s3`` of the spin-``S`` irrep, basis ordered m = S, ..., -S."""

    spin: Fraction
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray

    @property
    def dim(self) -> int:
        return int(2 * self.spin + 1)

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.s1, self.s2, self.s3)

    @property
    def casimir(self) -> float:
        """S(S+1)."""
        return float(self.spin * (self.spin + 1))


def _as_spin(S) -> Fraction:
    two_s = Fraction(S) * 2
    if two_s.denominator != 1 or two_s <= 0:
        raise ValueError(f"spin must be a positive half-integer, got {S!r}")
    return Fraction(S)


def spin_matrices(S=1) -> SpinSet:
    """Build ``s1, s2, s3`` from the ladder operator.

    ``S`` may be an int, a float such as 1.5, or a ``Fraction``; ``2S`` must
    be a positive integer.
    """
    spin = _as_spin(S)
    s = float(spin)
    m = s - np.arange(int(2 * spin) + 1)
    # <m+1|S+|m> = sqrt(S(S+1) - m(m+1)) sits on the first superdiagonal
    splus = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sminus = splus.conj().T
    s1 = (splus + sminus) / 2
    s2 = (splus - sminus) / 2j
    s3 = np.diag(m).astype(complex)
    for a in (s1, s2, s3):
        a.setflags(write=False)
    return SpinSet(spin, s1, s2, s3)


def _n_sites(lattice) -> int:
    return lattice if isinstance(lattice, (int, np.integer)) else lattice.n_sites


def _site_index(lattice, x) -> int:
    if isinstance(lattice, (int, np.integer)):
        idx = int(x)
        n = int(lattice)
    else:
        idx = lattice.index(x)
        n = lattice.n_sites
    if not 0 <= idx < n:
        raise IndexError(f"site {x!r} outside lattice of {n} sites")
    return idx


def embed_sparse(lattice, factors: Mapping[int, np.ndarray]) -> sp.csr_matrix:
    """Sparse Kronecker product with ``factors[x]`` at site ``x`` and identity elsewhere."""
    n = _n_sites(lattice)
    mats = {_site_index(lattice, x): np.asarray(a) for x, a in factors.items()}
    dims = {a.shape for a in mats.values()}
    if len(dims) != 1:
        raise ValueError(f"inconsistent local dimensions {dims}")
    (shape,) = dims
    if shape[0] != shape[1]:
        raise ValueError(f"local operator must be square, got {shape}")
    ident = sp.identity(shape[0], dtype=complex, format="csr")
    ops = [sp.csr_matrix(mats[x]) if x in mats else ident for x in range(n)]
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)


def embed_sites(lattice, factors: Mapping[int, np.ndarray]) -> np.ndarray:
    """Dense version of :func:`embed_sparse`; several sites may be set at once."""
    return embed_sparse(lattice, factors).toarray()


def embed_site(lattice, x, local: np.ndarray) -> np.ndarray:
    """Place ``local`` at site ``x``: ``1 (x) ... (x) local (x) ... (x) 1``."""
    return embed_sites(lattice, {x: local})


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return max_norm(a - a.conj().T) < tol


def levi_civita(a: int, b: int, c: int) -> int:
    return int((a - b) * (b - c) * (c - a) / 2)


def su2_residual(spins: SpinSet) -> float:
    """Max deviation from ``[s^a, s^b] = i eps_abc s^c`` and the Casimir identity."""
    comps = spins.components
    worst = 0.0
    for a in range(3):
        for b in range(3):
            rhs = sum(1j * levi_civita(a, b, c) * comps[c] for c in range(3))
            worst = max(worst, max_norm(commutator(comps[a], comps[b]) - rhs))
    cas = sum(c @ c for c in comps) - spins.casimir * np.eye(spins.dim)
    return max(worst, max_norm(cas))
