"""Periodic cubic lattice, reflections across edge planes, and its Fourier grid."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


def epsilon(k) -> np.ndarray | float:
    """Lattice dispersion ``2 * sum_i (1 - cos k_i)`` over the last axis."""
    k = np.asarray(k, dtype=float)
    out = 2.0 * np.sum(1.0 - np.cos(k), axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Lattice:
    """Sites in canonical (lexicographic) order plus a directed edge list.

    ``edges`` holds ``(x, y, axis)`` with ``y = x + e_axis``.  On the torus
    every site owns one edge per axis, so ``L = 2`` carries doubled bonds.
    """

    d: int
    L: int
    coords: np.ndarray
    edges: tuple[tuple[int, int, int], ...]
    sublattice: np.ndarray  # 0 = A (even coordinate sum), 1 = B
    torus: bool = True
    _lookup: dict = field(default=None, repr=False, compare=False)

    @property
    def n_sites(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def origin(self) -> int:
        return self.index((0,) * self.d)

    def wrap(self, coord) -> tuple[int, ...]:
        if not self.torus:
            return tuple(int(c) for c in coord)
        half = self.L // 2
        return tuple(int((c + half - 1) % self.L - half + 1) for c in coord)

    def index(self, x) -> int:
        if isinstance(x, (int, np.integer)):
            if not 0 <= x < self.n_sites:
                raise IndexError(f"site index {x} outside lattice")
            return int(x)
        coord = self.wrap(x)
        if len(coord) != self.d or coord not in self._lookup:
            raise IndexError(f"site {x!r} not in lattice")
        return self._lookup[coord]

    def shift(self, x: int, axis: int, step: int = 1) -> int:
        c = list(self.coords[x])
        c[axis] += step
        return self.index(tuple(c))

    def edge_pairs(self) -> np.ndarray:
        return np.array([(x, y) for x, y, _ in self.edges], dtype=np.int64).reshape(-1, 2)

    # -- Laplacian ---------------------------------------------------------

    def neg_laplacian(self) -> np.ndarray:
        """Matrix of ``-Delta`` assembled from edge incidence (multiplicities kept)."""
        m = np.zeros((self.n_sites, self.n_sites))
        for x, y, _ in self.edges:
            m[x, x] += 1
            m[y, y] += 1
            m[x, y] -= 1
            m[y, x] -= 1
        return m

    def laplacian(self, v) -> np.ndarray:
        """``(Delta v)_x = sum_{y ~ x} (v_y - v_x)``."""
        v = self._field(v)
        out = np.zeros(self.n_sites)
        for x, y, _ in self.edges:
            out[x] += v[y] - v[x]
            out[y] += v[x] - v[y]
        return out

    def _field(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n_sites,):
            raise ValueError(f"field of shape {f.shape} on lattice with {self.n_sites} sites")
        return f

    # -- Fourier -------------------------------------------------------------

    def kpoints(self) -> np.ndarray:
        """Dual grid ``(2 pi / L) * {-L/2+1, ..., L/2}^d``, same order as the sites."""
        if not self.torus:
            raise ValueError("Fourier grid is only defined on the torus")
        return 2 * np.pi * self.coords / self.L

    def nonzero_modes(self) -> np.ndarray:
        k = self.kpoints()
        return k[np.any(k != 0, axis=1)]

    def on_grid(self, k) -> bool:
        k = np.asarray(k, dtype=float)
        if k.shape != (self.d,):
            return False
        n = k * self.L / (2 * np.pi)
        return bool(np.all(np.abs(n - np.round(n)) < 1e-9))

    def fourier(self, f) -> np.ndarray:
        """``f_hat(k) = sum_x exp(-i k.x) f(x)`` for every ``k`` in the grid."""
        f = np.asarray(f)
        phase = np.exp(-1j * self.kpoints() @ self.coords.T)
        return phase @ f

    def inverse_fourier(self, fhat) -> np.ndarray:
        phase = np.exp(1j * self.coords @ self.kpoints().T)
        return phase @ np.asarray(fhat) / self.n_sites


def laplacian_form(lattice: Lattice, f, g) -> float:
    """``(f, -Delta g) = sum over edges of (f_x - f_y)(g_x - g_y)``."""
    f = lattice._field(f)
    g = lattice._field(g)
    pairs = lattice.edge_pairs()
    if len(pairs) == 0:
        return 0.0
    x, y = pairs[:, 0], pairs[:, 1]
    return float(np.sum((f[x] - f[y]) * (g[x] - g[y])))


def _make(d, L, coords, edges, torus) -> Lattice:
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, d)
    lookup = {tuple(int(c) for c in row): i for i, row in enumerate(coords)}
    sub = (np.sum(coords, axis=1) % 2).astype(np.int64)
    for a in (coords, sub):
        a.setflags(write=False)
    return Lattice(d, L, coords, tuple(edges), sub, torus, lookup)


def build_torus(d: int, L: int) -> Lattice:
    """Box ``{-L/2+1, ..., L/2}^d`` with periodic nearest-neighbour edges."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if L < 2 or L % 2:
        raise ValueError(f"side length must be even and >= 2, got {L}")
    axis_range = range(-L // 2 + 1, L // 2 + 1)
    coords = list(itertools.product(axis_range, repeat=d))
    lat = _make(d, L, coords, (), True)
    edges = [(x, lat.shift(x, i), i) for x in range(lat.n_sites) for i in range(d)]
    return _make(d, L, coords, edges, True)


def dimer() -> Lattice:
    """Two sites joined by a single bond (no periodic doubling)."""
    return _make(1, 2, [(0,), (1,)], [(0, 1, 0)], False)


@dataclass(frozen=True, eq=False)
class Reflection:
    """Reflection of the torus across the plane ``x_axis = plane`` (half-integer).

    ``perm[x]`` is the image of site ``x``.  ``side1``/``side2`` list the two
    halves with ``side2[i] = perm[side1[i]]``; ``crossing`` holds the cut
    bonds as ``(x, perm[x])`` with ``x`` in ``side1``.
    """

    axis: int
    plane: float
    perm: np.ndarray
    side1: np.ndarray
    side2: np.ndarray
    crossing: tuple[tuple[int, int], ...]


def reflections(lattice: Lattice) -> list[Reflection]:
    """All distinct reflections across edge midplanes (``L/2`` per axis)."""
    if not lattice.torus:
        raise ValueError("reflections need a periodic lattice")
    L = lattice.L
    out = []
    for axis in range(lattice.d):
        # planes p + 1/2 and p + 1/2 + L/2 give the same map
        for p in range(-L // 2 + 1, 1):
            perm = np.empty(lattice.n_sites, dtype=np.int64)
            for x, c in enumerate(lattice.coords):
                img = list(c)
                img[axis] = 2 * p + 1 - c[axis]
                perm[x] = lattice.index(tuple(img))
            # side 1: axis coordinate in {p - L/2 + 1, ..., p} mod L
            rel = (lattice.coords[:, axis] - p - 1) % L
            side1 = np.flatnonzero(rel >= L // 2)
            side2 = perm[side1]
            in1 = np.zeros(lattice.n_sites, dtype=bool)
            in1[side1] = True
            crossing = []
            for x, y, _ in lattice.edges:
                if in1[x] != in1[y]:
                    a, b = (x, y) if in1[x] else (y, x)
                    if perm[a] != b:
                        raise AssertionError("crossing bond not mapped onto itself")
                    crossing.append((int(a), int(b)))
            for a in (perm, side1, side2):
                a.setflags(write=False)
            out.append(Reflection(axis, p + 0.5, perm, side1, side2, tuple(crossing)))
    return out
