"""Continuous-time random-loop Monte Carlo with double bars and loop weight theta.

A configuration is a set of double bars ``(edge, time)`` on the circle
``[0, T)``.  Each bar at time ``t`` on edge ``(x, y)`` owns four legs: the
strands of ``x`` and ``y`` just below ``t`` and just above ``t``.  The bar
joins the two lower legs and the two upper legs; along a site's time circle
the upper leg of one bar continues into the lower leg of the next.  A walker
crossing a bar therefore changes site and reverses its time direction.

On a bipartite graph inserting or deleting one bar changes the loop count by
exactly one, so the Metropolis ratio only needs a same-loop query.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit

from .lattice import Lattice, dimer
from .model import ModelParams, build_H, nematic_local
from .su2 import embed_sites, spin_matrices
from .thermal import diagonalize

THETA = 3.0
# T = c * beta * J2; fixed by calibrate_time_scale against exact diagonalisation
TIME_SCALE = 2.0
CALIBRATION_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0)
CALIBRATION_BETAS = (0.5, 1.0, 2.0)
Z_CUT = 3.0
_BLOCK_SWEEPS = 512


class CalibrationError(RuntimeError):
    """No time scale reproduces the exact two-site probabilities."""


# -- kernels -----------------------------------------------------------------


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        if ra < rb:
            parent[rb] = ra
        else:
            parent[ra] = rb


@njit(cache=True)
def _link(edges, n, ex, ey, n_sites, parent, first):
    """Union-find over the ``4n`` legs; ``first[s]`` is the lower leg of the earliest bar at ``s``."""
    last = np.full(n_sites, -1, np.int64)
    for s in range(n_sites):
        first[s] = -1
    for j in range(4 * n):
        parent[j] = j
    for j in range(n):
        x = ex[edges[j]]
        y = ey[edges[j]]
        bx, by, ax, ay = 4 * j, 4 * j + 1, 4 * j + 2, 4 * j + 3
        _union(parent, bx, by)
        _union(parent, ax, ay)
        if last[x] >= 0:
            _union(parent, last[x], bx)
        else:
            first[x] = bx
        last[x] = ax
        if last[y] >= 0:
            _union(parent, last[y], by)
        else:
            first[y] = by
        last[y] = ay
    for s in range(n_sites):
        if last[s] >= 0:
            _union(parent, last[s], first[s])


@njit(cache=True)
def _count(parent, n, first, n_sites):
    loops = 0
    for j in range(4 * n):
        if _find(parent, j) == j:
            loops += 1
    for s in range(n_sites):
        if first[s] < 0:
            loops += 1
    return loops


@njit(cache=True)
def _strand(edges, n, ex, ey, site, pos):
    """Lower leg of the first bar at ``site`` at or after sorted position ``pos`` (cyclic)."""
    for i in range(n):
        j = pos + i
        if j >= n:
            j -= n
        e = edges[j]
        if ex[e] == site:
            return 4 * j
        if ey[e] == site:
            return 4 * j + 1
    return -1


@njit(cache=True)
def _same(parent, la, lb):
    if la < 0 or lb < 0:
        return False
    return _find(parent, la) == _find(parent, lb)


@njit(cache=True)
def _loop_count(edges, n, ex, ey, n_sites):
    parent = np.empty(max(4 * n, 1), np.int64)
    first = np.empty(n_sites, np.int64)
    _link(edges, n, ex, ey, n_sites, parent, first)
    return _count(parent, n, first, n_sites)


@njit(cache=True, nogil=True)
def _run_block(times, edges, n, ex, ey, n_sites, T, theta, props, rnd, mx, my, out_p, out_n, out_loops):
    """Run ``len(out_p)`` sweeps of ``props`` insert/delete proposals each.

    ``rnd`` holds four uniforms per proposal.  After each sweep the fraction
    of pairs ``(mx[i], my[i])`` on a common loop at time 0 is recorded.
    """
    n_edges = len(ex)
    cap = len(times)
    parent = np.empty(4 * cap + 4, np.int64)
    first = np.empty(n_sites, np.int64)
    r = 0
    for sweep in range(len(out_p)):
        for _ in range(props):
            u0 = rnd[r, 0]
            u1 = rnd[r, 1]
            u2 = rnd[r, 2]
            u3 = rnd[r, 3]
            r += 1
            if u0 < 0.5:
                e = min(int(u1 * n_edges), n_edges - 1)
                t = u2 * T
                pos = np.searchsorted(times[:n], t)
                _link(edges, n, ex, ey, n_sites, parent, first)
                same = _same(parent, _strand(edges, n, ex, ey, ex[e], pos), _strand(edges, n, ex, ey, ey[e], pos))
                ratio = n_edges * T / (n + 1) * (theta if same else 1.0 / theta)
                if u3 < ratio:
                    for j in range(n, pos, -1):
                        times[j] = times[j - 1]
                        edges[j] = edges[j - 1]
                    times[pos] = t
                    edges[pos] = e
                    n += 1
            elif n > 0:
                j = min(int(u1 * n), n - 1)
                _link(edges, n, ex, ey, n_sites, parent, first)
                # one loop through both sides of the bar: removal splits it
                split = _find(parent, 4 * j) == _find(parent, 4 * j + 2)
                ratio = n / (n_edges * T) * (theta if split else 1.0 / theta)
                if u3 < ratio:
                    for i in range(j, n - 1):
                        times[i] = times[i + 1]
                        edges[i] = edges[i + 1]
                    n -= 1
        _link(edges, n, ex, ey, n_sites, parent, first)
        hits = 0
        for i in range(len(mx)):
            if _same(parent, first[mx[i]], first[my[i]]):
                hits += 1
        out_p[sweep] = hits / len(mx)
        out_n[sweep] = n
        out_loops[sweep] = _count(parent, n, first, n_sites)
    return n


# -- acceptance rules (mirrored by the kernel) -------------------------------


def insert_acceptance(n: int, n_edges: int, T: float, theta: float, delta: int) -> float:
    """Accept probability for adding a bar to ``n`` bars; ``delta`` is the loop-count change."""
    return min(1.0, n_edges * T / (n + 1) * theta**delta)


def delete_acceptance(n: int, n_edges: int, T: float, theta: float, delta: int) -> float:
    return min(1.0, n / (n_edges * T) * theta**delta)


# -- configurations ----------------------------------------------------------


def _edge_arrays(lattice: Lattice):
    pairs = lattice.edge_pairs()
    return np.ascontiguousarray(pairs[:, 0]), np.ascontiguousarray(pairs[:, 1])


def check_bipartite(lattice: Lattice) -> None:
    sub = lattice.sublattice
    for x, y, _ in lattice.edges:
        if sub[x] == sub[y]:
            raise ValueError("loop updates assume a bipartite lattice")


@dataclass(frozen=True, eq=False)
class LoopConfig:
    """Double bars sorted by time; ``edges[i]`` indexes ``lattice.edges``."""

    lattice: Lattice
    T: float
    times: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("time period must be positive")
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.edges, dtype=np.int64)
        if t.shape != e.shape or t.ndim != 1:
            raise ValueError("times and edges must be 1-d arrays of equal length")
        if len(t) and (t.min() < 0 or t.max() >= self.T):
            raise ValueError("event times must lie in [0, T)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("event times must be strictly increasing with no duplicates")
        if len(e) and (e.min() < 0 or e.max() >= self.lattice.n_edges):
            raise ValueError("edge index out of range")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_events(cls, lattice: Lattice, T: float, events) -> "LoopConfig":
        """Build from ``(edge, time)`` pairs in any order."""
        ev = sorted((float(t), int(e)) for e, t in events)
        times = np.array([t for t, _ in ev], dtype=float)
        edges = np.array([e for _, e in ev], dtype=np.int64)
        return cls(lattice, T, times, edges)

    @property
    def n_events(self) -> int:
        return len(self.times)

    def per_edge(self) -> dict[int, np.ndarray]:
        return {e: self.times[self.edges == e] for e in range(self.lattice.n_edges)}

    @cached_property
    def loop_count(self) -> int:
        ex, ey = _edge_arrays(self.lattice)
        return int(_loop_count(self.edges, self.n_events, ex, ey, self.lattice.n_sites))

    def same_loop(self, x: int, y: int, t: float = 0.0) -> bool:
        """Whether the strands of ``x`` and ``y`` at time ``t`` share a loop (union-find)."""
        ex, ey = _edge_arrays(self.lattice)
        n = self.n_events
        parent = np.empty(max(4 * n, 1), np.int64)
        first = np.empty(self.lattice.n_sites, np.int64)
        _link(self.edges, n, ex, ey, self.lattice.n_sites, parent, first)
        pos = int(np.searchsorted(self.times, t, side="right"))
        if x == y:
            return True
        return bool(_same(parent, _strand(self.edges, n, ex, ey, x, pos), _strand(self.edges, n, ex, ey, y, pos)))

    def with_event(self, edge: int, t: float) -> "LoopConfig":
        return LoopConfig.from_events(self.lattice, self.T, list(zip(self.edges, self.times)) + [(edge, t)])

    def without_event(self, i: int) -> "LoopConfig":
        keep = np.arange(self.n_events) != i
        return LoopConfig(self.lattice, self.T, self.times[keep], self.edges[keep])


@dataclass
class LoopDecomposition:
    """Loops as lists of strand segments ``(site, t_low, t_high)``; times may wrap past ``T``."""

    loops: list[list[tuple[int, float, float]]]
    T: float

    @property
    def count(self) -> int:
        return len(self.loops)

    def loop_of(self, site: int, t: float) -> int:
        for i, loop in enumerate(self.loops):
            for s, lo, hi in loop:
                if s != site:
                    continue
                if lo <= t < hi or lo <= t + self.T < hi:
                    return i
        raise KeyError((site, t))


def trace_loops(config: LoopConfig) -> LoopDecomposition:
    """Walk every loop explicitly; independent of the union-find kernel.

    Segment ``i`` of a site spans from its ``i``-th bar up to the next one
    (cyclically).  Reaching the top of a segment moves the walker to the
    partner site, entering the segment that ends at that bar and walking
    down; reaching the bottom enters the partner's segment that starts there.
    """
    lat, T = config.lattice, config.T
    at_site: dict[int, list[int]] = {s: [] for s in range(lat.n_sites)}
    for j, e in enumerate(config.edges):
        x, y, _ = lat.edges[e]
        at_site[x].append(j)
        at_site[y].append(j)
    # position of bar j in the time-ordered list of each site it touches
    slot = {}
    for s, bars in at_site.items():
        for i, j in enumerate(bars):
            slot[(s, j)] = i

    def partner(s, j):
        x, y, _ = lat.edges[config.edges[j]]
        return y if s == x else x

    def segment(s, i):
        bars = at_site[s]
        lo = config.times[bars[i]]
        hi = config.times[bars[(i + 1) % len(bars)]]
        if hi <= lo:
            hi += T
        return (s, float(lo), float(hi))

    loops = []
    seen = set()
    for s in range(lat.n_sites):
        if not at_site[s]:
            loops.append([(s, 0.0, float(T))])
    for s0 in range(lat.n_sites):
        for i0 in range(len(at_site[s0])):
            if (s0, i0) in seen:
                continue
            loop = []
            s, i, up = s0, i0, True
            while (s, i) not in seen:
                seen.add((s, i))
                loop.append(segment(s, i))
                bars = at_site[s]
                j = bars[(i + 1) % len(bars)] if up else bars[i]
                s = partner(s, j)
                k = slot[(s, j)]
                if up:
                    # continue downward from the bar: the segment ending at it
                    i, up = (k - 1) % len(at_site[s]), False
                else:
                    i, up = k, True
            loops.append(loop)
    return LoopDecomposition(loops, T)


# -- sampling ----------------------------------------------------------------


def proposals_per_sweep(lattice: Lattice, T: float) -> int:
    return max(8, math.ceil(2 * lattice.n_edges * T))


def measurement_pairs(lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """``(x, x + e1)`` for every site (translation average); the dimer has one pair."""
    if not lattice.torus:
        return np.array([0]), np.array([1])
    xs = np.arange(lattice.n_sites)
    return xs, np.array([lattice.shift(x, 0) for x in xs])


@dataclass
class ChainResult:
    seed: int
    p: np.ndarray
    n_events: np.ndarray
    loops: np.ndarray
    final: LoopConfig


class _Chain:
    def __init__(self, lattice: Lattice, T: float, theta: float, seed: int):
        if T <= 0:
            raise ValueError("time period must be positive")
        if theta <= 0:
            raise ValueError("loop weight must be positive")
        check_bipartite(lattice)
        self.lattice, self.T, self.theta = lattice, float(T), float(theta)
        self.rng = np.random.default_rng(seed)
        self.ex, self.ey = _edge_arrays(lattice)
        self.mx, self.my = measurement_pairs(lattice)
        self.props = proposals_per_sweep(lattice, T)
        self.times = np.zeros(64)
        self.edges = np.zeros(64, np.int64)
        self.n = 0

    def run(self, sweeps: int):
        need = self.n + sweeps * self.props + 1
        if need > len(self.times):
            cap = max(need, 2 * len(self.times))
            self.times = np.concatenate([self.times, np.zeros(cap - len(self.times))])
            self.edges = np.concatenate([self.edges, np.zeros(cap - len(self.edges), np.int64)])
        rnd = self.rng.random((sweeps * self.props, 4))
        p = np.empty(sweeps)
        ne = np.empty(sweeps, np.int64)
        nl = np.empty(sweeps, np.int64)
        self.n = _run_block(
            self.times, self.edges, self.n, self.ex, self.ey, self.lattice.n_sites,
            self.T, self.theta, self.props, rnd, self.mx, self.my, p, ne, nl,
        )
        return p, ne, nl

    def config(self) -> LoopConfig:
        return LoopConfig(self.lattice, self.T, self.times[: self.n].copy(), self.edges[: self.n].copy())


def sample(lattice: Lattice, T: float, theta: float = THETA, sweeps: int = 100, seed: int = 0, every: int = 1):
    """Yield a :class:`LoopConfig` after every ``every`` sweeps."""
    chain = _Chain(lattice, T, theta, seed)
    for _ in range(sweeps // every):
        chain.run(every)
        yield chain.config()


def run_chain(lattice: Lattice, T: float, sweeps: int, seed: int, theta: float = THETA, thermalize: int | None = None) -> ChainResult:
    chain = _Chain(lattice, T, theta, seed)
    therm = sweeps // 10 if thermalize is None else thermalize
    left = therm
    while left:
        step = min(left, _BLOCK_SWEEPS)
        chain.run(step)
        left -= step
    ps, ns, ls = [], [], []
    left = sweeps
    while left:
        step = min(left, _BLOCK_SWEEPS)
        p, ne, nl = chain.run(step)
        ps.append(p)
        ns.append(ne)
        ls.append(nl)
        left -= step
    return ChainResult(seed, np.concatenate(ps), np.concatenate(ns), np.concatenate(ls), chain.config())


def blocking_error(series) -> tuple[float, float]:
    """Standard error from binning (largest over block sizes with >= 32 blocks) and ``tau_int``.

    The error is floored at ``1/n`` so that a constant series still gets a
    positive error bar.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two samples")
    naive = np.std(x, ddof=1) / math.sqrt(n)
    best = naive
    b = x
    while len(b) >= 64:
        b = 0.5 * (b[: len(b) // 2 * 2 : 2] + b[1 : len(b) // 2 * 2 : 2])
        best = max(best, np.std(b, ddof=1) / math.sqrt(len(b)))
    tau = 0.5 * (best / naive) ** 2 if naive > 0 else 0.5
    return max(float(best), 1.0 / n), float(tau)


@dataclass
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    autocorrelation_time: float
    seed: tuple[int, ...]
    per_seed: list[dict] = field(default_factory=list)
    mean_events: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "autocorrelation_time": self.autocorrelation_time,
            "seeds": list(self.seed),
            "mean_events": self.mean_events,
            "per_seed": self.per_seed,
        }


def estimate_event(
    lattice: Lattice,
    T: float,
    sweeps: int = 20000,
    seed: int | None = 0,
    seeds=None,
    theta: float = THETA,
    threads: int = 1,
    observable: str = "same_loop",
    thermalize: int | None = None,
) -> McEstimate:
    """Estimate ``P(0 and e1 on one loop at time 0)`` over one or more independent chains.

    Chains are combined in seed order, so the result does not depend on
    ``threads``.
    """
    if observable != "same_loop":
        raise ValueError(f"unknown observable {observable!r}")
    if sweeps < 64:
        raise ValueError("at least 64 measured sweeps are needed for a blocking error")
    seed_list = tuple(int(s) for s in (seeds if seeds is not None else [seed]))
    if not seed_list:
        raise ValueError("no seeds given")

    def one(s):
        return run_chain(lattice, T, sweeps, s, theta, thermalize)

    if threads > 1 and len(seed_list) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chains = list(pool.map(one, seed_list))
    else:
        chains = [one(s) for s in seed_list]
    per = []
    for c in chains:
        se, tau = blocking_error(c.p)
        per.append({"seed": c.seed, "mean": float(np.mean(c.p)), "std_error": se, "tau": tau})
    k = len(per)
    mean = sum(r["mean"] for r in per) / k
    se = math.sqrt(sum(r["std_error"] ** 2 for r in per)) / k
    tau = sum(r["tau"] for r in per) / k
    events = sum(float(np.mean(c.n_events)) for c in chains) / k
    return McEstimate(mean, se, sweeps * k, tau, seed_list, per, events)


# -- exact references ----------------------------------------------------------


def dimer_probability(T: float, theta: float = THETA) -> float:
    """Exact ``P(same loop)`` on one bond: ``(e^{theta T} - 1) / (theta^2 - 1 + e^{theta T})``."""
    a = math.exp(-theta * T)
    return (1 - a) / (1 + (theta**2 - 1) * a)


def ed_dictionary(lattice: Lattice, beta: float, J2: float = 1.0) -> dict:
    """Exact ``rho(e1)``, ``<s1s3 s1s3>`` and ``<H^{0,1}>`` with the implied ``P`` values."""
    h = build_H(lattice, ModelParams(J2=J2), "J1J2")
    state = diagonalize(h, beta)
    sp = spin_matrices(1)
    xs, ys = measurement_pairs(lattice)
    x, y = int(xs[0]), int(ys[0])
    q = nematic_local(sp)
    m = sp.s1 @ sp.s3
    rho = state.gibbs(embed_sites(lattice, {x: q, y: q})).real
    cross = state.gibbs(embed_sites(lattice, {x: m, y: m})).real
    energy = state.gibbs(h).real
    return {
        "rho_e1": rho,
        "cross_term": cross,
        "energy": energy,
        "P_from_rho": 4.5 * rho,
        "P_from_cross": 3 * cross,
    }


def energy_from_P(lattice: Lattice, P: float, J2: float = 1.0) -> float:
    """``<H^{0,1}> = -2 J2 |E| (4/3)(2P + 1)``; ``|E| = d |L|`` on the torus."""
    return -8 * J2 * lattice.n_edges * (2 * P + 1) / 3


@dataclass
class Calibration:
    c: float
    table: list[dict]
    theta: float

    def as_dict(self) -> dict:
        return {"c": self.c, "theta": self.theta, "table": self.table}


def calibrate_time_scale(
    lattice: Lattice | None = None,
    betas=CALIBRATION_BETAS,
    grid=CALIBRATION_GRID,
    sweeps: int = 20000,
    seed: int = 0,
    theta: float = THETA,
    J2: float = 1.0,
) -> Calibration:
    """Pick ``c`` in ``T = c beta J2`` so that MC ``P`` matches ``(9/2) rho_ED(e1)`` at every ``beta``.

    A grid value is consistent if all ``|z| < 3``; the one with the smallest
    worst-case ``|z|`` is returned.
    """
    lattice = lattice or dimer()
    targets = {b: ed_dictionary(lattice, b, J2)["P_from_rho"] for b in betas}
    table, best = [], None
    for i, c in enumerate(grid):
        zs = []
        for j, b in enumerate(betas):
            est = estimate_event(lattice, c * b * J2, sweeps, seed=seed + 1000 * i + j, theta=theta)
            z = (est.mean - targets[b]) / est.std_error
            zs.append(z)
            table.append({"c": c, "beta": b, "P_mc": est.mean, "std_error": est.std_error, "P_ed": targets[b], "z": z})
        worst = max(abs(z) for z in zs)
        if worst < Z_CUT and (best is None or worst < best[1]):
            best = (c, worst)
    if best is None:
        raise CalibrationError(f"no time scale in {list(grid)} matches exact diagonalisation (theta={theta})")
    return Calibration(best[0], table, theta)


def dictionary_check(
    lattice: Lattice,
    beta: float,
    c: float = TIME_SCALE,
    sweeps: int = 20000,
    seeds=(0,),
    threads: int = 1,
    J2: float = 1.0,
) -> dict:
    """MC ``P`` against ``rho = 2P/9``, ``<s1s3 s1s3> = P/3`` and the energy, in units of sigma."""
    est = estimate_event(lattice, c * beta * J2, sweeps, seeds=seeds, threads=threads)
    ed = ed_dictionary(lattice, beta, J2)
    P, se = est.mean, est.std_error
    e_mc = energy_from_P(lattice, P, J2)
    e_se = 16 * J2 * lattice.n_edges / 3 * se
    return {
        "P": P,
        "std_error": se,
        "tau": est.autocorrelation_time,
        "rho_ed": ed["rho_e1"],
        "rho_mc": 2 * P / 9,
        "z_rho": (2 * P / 9 - ed["rho_e1"]) / (2 * se / 9),
        "cross_ed": ed["cross_term"],
        "cross_mc": P / 3,
        "z_cross": (P / 3 - ed["cross_term"]) / (se / 3),
        "energy_ed": ed["energy"],
        "energy_mc": e_mc,
        "z_energy": (e_mc - ed["energy"]) / e_se,
        "estimate": est.as_dict(),
    }
