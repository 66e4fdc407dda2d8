"""Full-spectrum thermal expectations: Gibbs states, Duhamel inner product, correlations."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .lattice import Lattice
from .model import ModelParams, build_H, nematic_local
from .su2 import embed_site, is_hermitian, max_norm, spin_matrices

DIM_CAP = 6561  # 3**8 sites
# relative gap below which the Duhamel weight takes its degenerate limit
DEGENERATE_GAP = 1e-12


@dataclass(frozen=True, eq=False)
class ThermalState:
    """Eigendecomposition of ``H`` at inverse temperature ``beta``."""

    energies: np.ndarray
    vectors: np.ndarray
    beta: float
    log_z: float

    @property
    def dim(self) -> int:
        return len(self.energies)

    @cached_property
    def weights(self) -> np.ndarray:
        """Gibbs probabilities of the eigenstates."""
        return np.exp(-self.beta * self.energies - self.log_z)

    @cached_property
    def density_matrix(self) -> np.ndarray:
        return (self.vectors * self.weights) @ self.vectors.conj().T

    def _check(self, a):
        if a.shape != (self.dim, self.dim):
            raise ValueError(f"operator of shape {a.shape} on a {self.dim}-dim state")

    def to_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        self._check(a)
        return self.vectors.conj().T @ a @ self.vectors

    def gibbs(self, a) -> complex:
        """``Tr(A exp(-beta H)) / Z``; ``a`` may be a scipy sparse matrix."""
        self._check(a)
        if sp.issparse(a):
            return complex(a.multiply(self.density_matrix.T).sum())
        return complex(np.sum(a * self.density_matrix.T))

    def vector_expectation(self, psi: np.ndarray, a: np.ndarray) -> complex:
        return complex(psi.conj() @ a @ psi / (psi.conj() @ psi))

    @cached_property
    def duhamel_kernel(self) -> np.ndarray:
        """``W[n, m] = (e^{-beta E_m} - e^{-beta E_n}) / (beta (E_n - E_m) Z)``."""
        e = self.energies
        gap = np.abs(e[:, None] - e[None, :])
        low = np.minimum(e[:, None], e[None, :])
        x = self.beta * gap
        degenerate = gap < DEGENERATE_GAP * (1 + np.abs(e[None, :]))
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(degenerate, 1.0 - x / 2, -np.expm1(-x) / np.where(x == 0, 1, x))
        return np.exp(-self.beta * low - self.log_z) * phi

    def duhamel(self, a: np.ndarray, b: np.ndarray) -> complex:
        """``(A, B)_Duh = (beta Z)^-1 int_0^beta Tr A* e^{-sH} B e^{-(beta-s)H} ds``."""
        at = self.to_eigenbasis(a)
        bt = self.to_eigenbasis(b)
        return complex(np.sum(at.conj() * bt * self.duhamel_kernel))

    def reconstruction_residual(self, h: np.ndarray) -> float:
        rebuilt = (self.vectors * self.energies) @ self.vectors.conj().T
        return max_norm(h - rebuilt)


def diagonalize(h: np.ndarray, beta: float, cap: int = DIM_CAP) -> ThermalState:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if h.shape[0] > cap:
        raise ValueError(f"dimension {h.shape[0]} exceeds cap {cap}")
    if not is_hermitian(h, 1e-12 * max(1.0, max_norm(h))):
        raise ValueError("Hamiltonian is not Hermitian")
    energies, vectors = np.linalg.eigh(h)
    shifted = -beta * (energies - energies[0])
    log_z = float(-beta * energies[0] + np.log(np.sum(np.exp(shifted))))
    return ThermalState(energies, vectors, float(beta), log_z)


def log_partition(h: np.ndarray, beta: float) -> float:
    """``log Tr exp(-beta H)`` from the spectrum, shifted for stability."""
    e = np.linalg.eigvalsh(h)
    return float(-beta * e[0] + np.log(np.sum(np.exp(-beta * (e - e[0])))))


def thermal_state(lattice: Lattice, beta: float, J1: float = 0.0, J2: float = 1.0) -> ThermalState:
    """Gibbs state of the staggered-frame Hamiltonian at zero field (``J1 <= 0``)."""
    params = ModelParams(J1=J1, J2=J2, beta=beta, v=np.zeros(lattice.n_sites))
    return diagonalize(build_H(lattice, params, "Htilde_v"), beta)


def nematic_ops(lattice: Lattice, S=1) -> list[np.ndarray]:
    q = nematic_local(spin_matrices(S))
    return [embed_site(lattice, x, q) for x in range(lattice.n_sites)]


def fourier_observable(lattice: Lattice, k, S=1, ops=None) -> np.ndarray:
    """``A(k) = sum_x exp(-i k.x) ((s^3_x)^2 - S(S+1)/3)``."""
    if not lattice.on_grid(k):
        raise ValueError(f"k = {k!r} is not on the dual grid")
    k = np.asarray(k, dtype=float)
    ops = nematic_ops(lattice, S) if ops is None else ops
    phases = np.exp(-1j * lattice.coords @ k)
    return sum(p * q for p, q in zip(phases, ops))


def double_commutator(state: ThermalState, a: np.ndarray, h: np.ndarray) -> complex:
    """``< [A*, [h, A]] >`` by explicit products."""
    ha = h @ a - a @ h
    ad = a.conj().T
    return state.gibbs(ad @ ha - ha @ ad)


@dataclass
class CorrelationReport:
    """Nematic correlations on a torus relative to the origin.

    ``rho[x]`` follows the lattice site order and ``rho_hat``/``duhamel_hat``
    follow the k-grid order (which mirrors the site order).
    """

    rho: np.ndarray
    rho_hat: np.ndarray
    rho_hat_direct: np.ndarray
    duhamel_hat: np.ndarray
    residuals: dict = field(default_factory=dict)

    def as_dict(self, lattice: Lattice) -> dict:
        return {
            "sites": lattice.coords.tolist(),
            "k": lattice.kpoints().tolist(),
            "rho": self.rho.tolist(),
            "rho_hat": self.rho_hat.tolist(),
            "duhamel_hat": self.duhamel_hat.tolist(),
            "residuals": dict(self.residuals),
        }


def correlations(lattice: Lattice, state: ThermalState, S=1) -> CorrelationReport:
    ops = nematic_ops(lattice, S)
    o = lattice.origin
    rho_c = np.array([state.gibbs(ops[o] @ ops[x]) for x in range(lattice.n_sites)])
    rho = rho_c.real
    rho_hat_c = lattice.fourier(rho)
    n = lattice.n_sites
    direct = np.empty(n)
    duh = np.empty(n)
    direct_imag = 0.0
    for i, k in enumerate(lattice.kpoints()):
        a = fourier_observable(lattice, k, S, ops)
        val = state.gibbs(a.conj().T @ a) / n  # A(k)* = A(-k)
        direct[i] = val.real
        direct_imag = max(direct_imag, abs(val.imag))
        duh[i] = state.duhamel(a, a).real / n
    back = lattice.inverse_fourier(rho_hat_c)
    residuals = {
        "rho_imag": float(np.max(np.abs(rho_c.imag))),
        "rho_hat_imag": float(np.max(np.abs(rho_hat_c.imag))),
        "inverse_transform": float(np.max(np.abs(back - rho))),
        "sum_rule": float(abs(np.sum(rho_hat_c.real) / n - rho[o])),
        "direct_vs_transform": float(np.max(np.abs(direct - rho_hat_c.real))),
        "direct_imag": float(direct_imag),
    }
    return CorrelationReport(rho, rho_hat_c.real, direct, duh, residuals)
