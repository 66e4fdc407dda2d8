"""Brillouin-zone integral I_d, the resulting lower bound, and finite-lattice analogues."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc, t as student_t

from .lattice import Lattice, epsilon

__all__ = [
    "epsilon",
    "integrand",
    "compute_id",
    "QuadratureResult",
    "BoundReport",
    "InconclusiveError",
    "lower_bound",
    "bound_table",
    "threshold_dimension",
    "riemann_sum",
    "finite_volume_bound",
    "j1_margin_scan",
    "POSITIVITY_CUTOFF",
]

# at P = 1/4 the bound is positive iff I_d < sqrt(3)/9
POSITIVITY_CUTOFF = math.sqrt(3) / 9

TENSOR_NODES = {3: 256, 4: 64, 5: 32, 6: 24, 7: 12, 8: 8}
QMC_POINTS = 2**22
QMC_SHIFTS = 3
_BLOCK = 2**21


class InconclusiveError(RuntimeError):
    """Sign of a bound is not resolved by the quadrature error."""


def _profile(s: np.ndarray, d: int) -> np.ndarray:
    """Integrand as a function of ``s = sum_i cos k_i``; infinite at ``k = 0``."""
    sp = np.maximum(s, 0.0)
    with np.errstate(divide="ignore"):
        return np.sqrt((d + sp) / (d - sp)) * sp / d


def integrand(k) -> np.ndarray | float:
    """``sqrt(eps(k+pi)/eps(k)) * (d^-1 sum_i cos k_i)_+``; zero where the cosine mean is <= 0."""
    k = np.asarray(k, dtype=float)
    d = k.shape[-1]
    out = _profile(np.sum(np.cos(k), axis=-1), d)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    method: str  # "tensor-grid" or "monte-carlo"
    n_points: int
    d: int
    refinements: tuple = ()


def _tensor_mean(d: int, n: int) -> float:
    """Midpoint rule on ``[0, pi]^d`` (the integrand is even in each coordinate)."""
    c = np.cos((np.arange(n) + 0.5) * np.pi / n)
    m = d
    while m > 1 and n**m > _BLOCK:
        m -= 1
    head = np.zeros(1)
    for _ in range(m):
        head = (head[:, None] + c[None, :]).ravel()
    tail = np.zeros(1)
    for _ in range(d - m):
        tail = (tail[:, None] + c[None, :]).ravel()
    parts = [float(np.sum(_profile(head + b, d))) for b in tail]
    return math.fsum(parts) / n**d


def _qmc_shift_means(d: int, n_points: int, seed: int) -> np.ndarray:
    m = int(round(math.log2(n_points)))
    if 2**m != n_points:
        raise ValueError("QMC budget must be a power of two")
    rng = np.random.default_rng(seed)
    shifts = rng.random((QMC_SHIFTS, d))
    sob = qmc.Sobol(d, scramble=False)
    sums = [[] for _ in range(QMC_SHIFTS)]
    left = n_points
    while left:
        take = min(left, _BLOCK)
        base = sob.random(take)
        for j, sh in enumerate(shifts):
            u = (base + sh) % 1.0
            sums[j].append(float(np.sum(_profile(np.sum(np.cos(np.pi * u), axis=1), d))))
        left -= take
    return np.array([math.fsum(s) / n_points for s in sums])


@lru_cache(maxsize=None)
def compute_id(d: int, method: str = "auto", budget: int | None = None, seed: int = 0) -> QuadratureResult:
    """``I_d = (2 pi)^-d int sqrt(eps(k+pi)/eps(k)) (d^-1 sum cos k_i)_+ dk``.

    ``method`` is ``"tensor"`` (midpoint grid, ``budget`` nodes per axis; the
    error is ``|I(n) - I(n/2)|``), ``"qmc"`` (Sobol points with random shifts,
    ``budget`` points per shift; the error is a 95% Student-t half-width) or
    ``"auto"`` (tensor for ``d <= 5``).
    """
    if d < 3:
        raise ValueError("I_d is only used for d >= 3")
    if method == "auto":
        method = "tensor" if d <= 5 else "qmc"
    if method == "tensor":
        n = budget or TENSOR_NODES.get(d, 6)
        if n < 4 or n % 2:
            raise ValueError("tensor grid needs an even number of nodes >= 4 per axis")
        fine, coarse = _tensor_mean(d, n), _tensor_mean(d, n // 2)
        return QuadratureResult(fine, abs(fine - coarse), "tensor-grid", n**d, d, (coarse, fine))
    if method == "qmc":
        n = budget or QMC_POINTS
        means = _qmc_shift_means(d, n, seed)
        half = student_t.ppf(0.975, QMC_SHIFTS - 1) * np.std(means, ddof=1) / math.sqrt(QMC_SHIFTS)
        return QuadratureResult(float(np.mean(means)), float(half), "monte-carlo", n * QMC_SHIFTS, d, tuple(means))
    raise ValueError(f"unknown quadrature method {method!r}")


def _bound_value(P: float, i_d: float) -> float:
    return math.sqrt(P) * (2 / 9 * math.sqrt(P) - i_d / math.sqrt(3))


@dataclass(frozen=True)
class BoundReport:
    """``sqrt(P) (2/9 sqrt(P) - I_d / sqrt(3))`` with its quadrature uncertainty."""

    d: int
    P_lower: float
    I_d: QuadratureResult
    bound_value: float
    bound_error: float
    status: str  # "positive", "negative" or "inconclusive"

    @property
    def positive(self) -> bool:
        return self.status == "positive"

    def as_row(self) -> dict:
        return {
            "d": self.d,
            "I_d": self.I_d.value,
            "err": self.I_d.error_estimate,
            "bound": self.bound_value,
            "positive": self.positive,
            "status": self.status,
            "method": self.I_d.method,
        }


def lower_bound(P: float = 0.25, d: int = 6, quad: QuadratureResult | None = None, **kw) -> BoundReport:
    if not 0 < P <= 1:
        raise ValueError("P must lie in (0, 1]")
    quad = quad or compute_id(d, **kw)
    value = _bound_value(P, quad.value)
    err = math.sqrt(P) * quad.error_estimate / math.sqrt(3)
    if value > err:
        status = "positive"
    elif value < -err:
        status = "negative"
    else:
        status = "inconclusive"
    return BoundReport(d, P, quad, value, err, status)


def bound_table(P: float = 0.25, dims=range(3, 9), **kw) -> list[BoundReport]:
    return [lower_bound(P, d, **kw) for d in dims]


def threshold_dimension(P: float = 0.25, dims=range(3, 9), **kw) -> int:
    """Smallest ``d`` with a positive bound, every smaller ``d`` being clearly negative."""
    for rep in bound_table(P, dims, **kw):
        if rep.status == "inconclusive":
            raise InconclusiveError(
                f"d={rep.d}: bound {rep.bound_value:.3g} within error {rep.bound_error:.3g}; refine quadrature"
            )
        if rep.positive:
            return rep.d
    raise InconclusiveError(f"no positive bound for d in {list(dims)}")


def riemann_sum(d: int, L: int) -> float:
    """``|L|^-1 sum_{k != 0} integrand(k)`` over the periodic dual grid."""
    if L % 2:
        raise ValueError("L must be even")
    c = np.cos(2 * np.pi * np.arange(-L // 2 + 1, L // 2 + 1) / L)
    s = np.zeros(1)
    for _ in range(d):
        s = (s[:, None] + c[None, :]).ravel()
    s = s[~np.isclose(s, d)]  # the single zero mode
    return float(np.sum(_profile(s, d))) / L**d


def finite_volume_bound(
    lattice: Lattice,
    beta: float,
    rho_e1: float,
    cross_term: float,
    J2: float = 1.0,
    double_commutators: dict | None = None,
) -> float:
    """Lower bound on ``|L|^-1 sum_x rho(x)``.

    ``rho(e1) - |L|^-1 sum_{k != 0} [g(k) (d^-1 sum cos k_i)_+ + 1/(2 beta J2 eps(k))]``
    with ``g(k) = sqrt(X) sqrt(eps(k+pi)/eps(k))``.  If ``double_commutators``
    maps ``tuple(k)`` to ``<[A*, [beta H, A]]>`` then
    ``g(k) = sqrt(c(k) / (2 beta J2 eps(k) |L|)) / 2`` is used instead.
    """
    n = lattice.n_sites
    total = 0.0
    for k in lattice.nonzero_modes():
        eps = epsilon(k)
        if eps == 0:
            raise ValueError("zero mode in the k-sum")
        if double_commutators is None:
            g = math.sqrt(max(cross_term, 0.0)) * math.sqrt(epsilon(k + np.pi) / eps)
        else:
            c = max(double_commutators[tuple(k)], 0.0)
            g = 0.5 * math.sqrt(c / (2 * beta * J2 * eps * n))
        total += g * max(np.mean(np.cos(k)), 0.0) + 1 / (2 * beta * J2 * eps)
    return rho_e1 - total / n


def j1_margin_scan(lattice: Lattice, beta: float, J1_grid, J2: float = 1.0) -> list[dict]:
    """Finite-volume bound and its direct ED counterpart for each ``J1 <= 0``."""
    from .inequalities import lower_bound_finite

    rows = []
    for J1 in J1_grid:
        if J1 > 0:
            raise ValueError("J1 must be <= 0")
        r = lower_bound_finite(lattice, beta, J1, J2)
        rows.append({"J1": float(J1), "bound": r["bound"], "direct": r["direct"], "rho_e1": r["rho_e1"], "ok": r["ok"]})
    return rows
