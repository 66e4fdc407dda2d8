"""Checks on the d=3, L=2 torus (6561 states); enable with ``--runslow``."""

import numpy as np
import pytest

from nematic_lro.lattice import build_torus, epsilon
from nematic_lro.model import ModelParams, _build_sparse, neel_state, nematic_local
from nematic_lro.su2 import embed_sparse, spin_matrices
from nematic_lro.thermal import diagonalize


@pytest.mark.slow
def test_cube_double_commutator_and_neel():
    lat = build_torus(3, 2)
    sp = spin_matrices(1)
    h = _build_sparse(lat, ModelParams(), "HU").real.tocsr()
    psi = neel_state(lat).real
    # each Neel bond contributes <(S.S)^2> = 2
    h01 = _build_sparse(lat, ModelParams(), "J1J2").real.tocsr()
    assert psi @ (h01 @ psi) == pytest.approx(-4 * lat.n_edges, abs=1e-10)

    st = diagonalize(h.toarray(), 1.0)
    q = nematic_local(sp).real
    qs = [embed_sparse(lat, {x: q}).real for x in range(lat.n_sites)]
    m = (sp.s1 @ sp.s3).real
    o = lat.origin
    x_term = st.gibbs(embed_sparse(lat, {o: m, lat.shift(o, 0): m}).real).real
    for k in lat.kpoints():
        # k in {0, pi}^3: the Fourier observable is real
        a = sum(np.cos(lat.coords[x] @ k) * qs[x] for x in range(lat.n_sites))
        ha = h @ a - a @ h
        lhs = st.gibbs(a @ ha - ha @ a).real
        assert lhs == pytest.approx(8 * lat.n_sites * epsilon(k + np.pi) * x_term, abs=1e-8)
