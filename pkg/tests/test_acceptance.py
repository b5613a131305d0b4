"""Acceptance criteria 1-8.

Run with ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``);
the terminal summary prints one PASS/FAIL line per criterion.  Expected
values marked *oracle* come from an independent computation in this file,
values marked *frozen* were measured once and pinned, and values marked
*reference* are the closed forms the tool is meant to reproduce.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from indexlab import boundary as bd
from indexlab import ktheory as kt
from indexlab import linalg
from indexlab import spectral as sp
from indexlab import topology as tp
from indexlab.properties import random_elliptic_sample, random_non_self_adjoint, random_self_adjoint_invertible
from indexlab.symbols import check_lagrangian, split

from oracles import berry_oracle

GRID = sp.CylinderGrid(16, 16)
LATTICE = (32, 32)
MAX_SAMPLES = 60
RUNTIME_BUDGET = 600.0

# frozen: Dir+/- gap on the 16x16 grid measured at 1.5679 (continuum value pi/2)
DIR_GAP_FLOOR = 1.56

GREEN_TOL = 1e-12
GREEN_CONTROL = 1e-2
ROUND_TRIP_TOL = 1e-8
KTHEORY_BUDGET = 30.0


def expected_winding_index(k_theta: int = 1, k_s: int = 1) -> int:
    """Oracle: only t = 1 carries a nontrivial F; its Chern number comes
    from the Berry-curvature integral, signed by the boundary orientation."""
    return tp.ORIENTATION["t1"] * round(berry_oracle(1.0, k_theta, k_s))


@pytest.fixture(scope="module")
def winding16():
    return sp.DiscreteFamily(tp.winding_family(), GRID)


# ---------------------------------------------------------------- criterion 1

@pytest.mark.acceptance(1)
def test_index_equals_flow_on_winding_family(winding16, note):
    start = time.perf_counter()
    spec = tp.winding_family()
    ti = tp.topological_index(spec, *LATTICE)
    res = sp.spectral_flow_detail(winding16)
    cf = sp.cayley_flow(winding16)
    elapsed = time.perf_counter() - start
    note(f"winding: ind_t={ti} sf={res.value} cayley={cf} samples={res.n_samples} ({elapsed:.0f} s)")
    assert abs(ti) == 1
    assert ti == expected_winding_index()
    assert ti == res.value == cf
    assert res.n_samples <= MAX_SAMPLES
    assert elapsed < RUNTIME_BUDGET


@pytest.mark.acceptance(1)
@pytest.mark.parametrize("k_theta,k_s", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_index_equals_flow_on_sweep(k_theta, k_s, note):
    spec = tp.swept_family(k_theta, k_s)
    ti = tp.topological_index(spec, *LATTICE)
    fam = sp.DiscreteFamily(spec, GRID)
    res = sp.spectral_flow_detail(fam)
    cf = sp.cayley_flow(fam)
    note(f"sweep ({k_theta},{k_s}): ind_t={ti} sf={res.value} cayley={cf} samples={res.n_samples}")
    assert ti == expected_winding_index(k_theta, k_s)
    assert ti == res.value == cf


# ---------------------------------------------------------------- criterion 2

@pytest.mark.acceptance(2)
@pytest.mark.parametrize("sign", [1, -1], ids=["dir-plus", "dir-minus"])
def test_dirichlet_vanishing(sign, note):
    spec = tp.dirichlet_family(sign)
    ti = tp.topological_index(spec, *LATTICE)
    sf = sp.spectral_flow(sp.DiscreteFamily(spec, GRID, n_params=8))
    gap = sp.gap_probe(spec, GRID)
    note(f"dir{'+' if sign > 0 else '-'}: ind_t={ti} sf={sf} gap={gap:.4f} (floor {DIR_GAP_FLOOR})")
    assert ti == 0 and sf == 0
    assert gap > DIR_GAP_FLOOR


@pytest.mark.acceptance(2)
def test_locally_constant_vanishing(note):
    spec = tp.locally_constant_family()
    ti = tp.topological_index(spec, *LATTICE)
    sf = sp.spectral_flow(sp.DiscreteFamily(spec, GRID, n_params=8))
    note(f"locally-constant: ind_t={ti} sf={sf}")
    assert ti == 0 and sf == 0


# ---------------------------------------------------------------- criterion 3

@pytest.mark.acceptance(3)
@pytest.mark.parametrize("seed", range(20))
def test_toy_pair_additivity(seed):
    f, ef = sp.random_toy_family(2 * seed)
    g, eg = sp.random_toy_family(2 * seed + 1)
    sf_f, sf_g = sp.spectral_flow(f), sp.spectral_flow(g)
    assert (sf_f, sf_g) == (ef, eg)
    assert sp.spectral_flow(sp.direct_sum(f, g)) == sf_f + sf_g


def _random_spec(rng):
    kind = rng.integers(4)
    if kind == 0:
        return tp.winding_family(float(rng.choice([-1.0, 1.0, 3.0])), int(rng.integers(1, 3)), int(rng.integers(1, 3)))
    if kind == 1:
        return tp.swept_family(int(rng.integers(1, 3)), int(rng.integers(1, 3)))
    if kind == 2:
        return tp.locally_constant_family()
    return tp.dirichlet_family(int(rng.choice([-1, 1])))


@pytest.mark.acceptance(3)
@pytest.mark.parametrize("seed", range(20))
def test_spec_pair_index_additivity(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_spec(rng), _random_spec(rng)
    lat = (16, 16)
    assert tp.topological_index(a.direct_sum(b), *lat) == tp.topological_index(a, *lat) + tp.topological_index(b, *lat)


@pytest.mark.acceptance(3)
def test_winding_sum_additivity(note):
    spec = tp.winding_family()
    grid = sp.CylinderGrid(12, 12)
    doubled = spec.direct_sum(spec)
    ti1, ti2 = tp.topological_index(spec, *LATTICE), tp.topological_index(doubled, *LATTICE)
    f = sp.DiscreteFamily(spec, grid)
    sf1 = sp.spectral_flow(f)
    sf_block = sp.spectral_flow(sp.direct_sum(f, f))
    sf_rank4 = sp.spectral_flow(sp.DiscreteFamily(doubled, grid))
    note(f"winding+winding: ind_t {ti2} = 2 x {ti1}; sf {sf_block} (block) {sf_rank4} (rank 4) = 2 x {sf1}")
    assert ti2 == 2 * ti1
    assert sf_block == sf_rank4 == 2 * sf1


# ---------------------------------------------------------------- criterion 4

@pytest.fixture(scope="module")
def oracle_values():
    return {m: berry_oracle(m, n=256) for m in (-1.0, 1.0, 3.0)}


@pytest.mark.acceptance(4)
@pytest.mark.parametrize("mass", [-1.0, 1.0, 3.0])
def test_chern_matches_berry_oracle(mass, oracle_values, note):
    want = round(oracle_values[mass])
    assert abs(oracle_values[mass] - want) < 1e-3 and abs(want) <= 1
    got = [tp.chern_detail(tp.d_model_field(n, n, mass)).raw for n in (16, 32, 64)]
    note(f"mass {mass:+.0f}: oracle {oracle_values[mass]:+.6f}, plaquette {got}")
    assert got == [want] * 3
    if mass == 3.0:
        assert want == 0


@pytest.mark.acceptance(4)
@pytest.mark.parametrize("seed", range(10))
def test_chern_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    mass = (-1.0, 1.0, 3.0)[seed % 3]
    fld = tp.d_model_field(32, 32, mass)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(32, 32, 1, 1)))
    a, b = tp.chern_detail(fld), tp.chern_detail(fld.gauge_transform(phases))
    assert (a.raw, a.value) == (b.raw, b.value)


# ---------------------------------------------------------------- criterion 5

@pytest.mark.acceptance(5)
def test_boundary_round_trips(note):
    rng = np.random.default_rng(20240501)
    worst_t = worst_l = 0.0
    agree = 0
    for i in range(1000):
        m = 1 + i % 3
        sample = random_elliptic_sample(rng, m)
        sp_ = split(sample)
        T = random_self_adjoint_invertible(rng, m)
        L = bd.t_to_l(sample, sp_, T)
        T2 = bd.l_to_t(sample, sp_, L)
        L2 = bd.t_to_l(sample, sp_, T2)
        worst_t = max(worst_t, np.abs(T2 - T).max() / max(1.0, np.abs(T).max()))
        worst_l = max(worst_l, linalg.projector_distance(L.frame, L2.frame))
        # classification on the same sample: self-adjoint T iff Lagrangian L
        self_adjoint = bool(rng.integers(2))
        T3 = T if self_adjoint else random_non_self_adjoint(rng, m)
        agree += check_lagrangian(sample.sigma_n, bd.t_to_l(sample, sp_, T3).frame) == self_adjoint
    note(f"1000 round trips: max |T'-T| {worst_t:.1e}, max projector distance {worst_l:.1e}; "
         f"classification agrees on {agree}/1000")
    assert worst_t <= ROUND_TRIP_TOL and worst_l <= ROUND_TRIP_TOL
    assert agree == 1000


# ---------------------------------------------------------------- criterion 6

def _smooth_grid_function(rng, op):
    g = op.grid
    t, th = np.meshgrid(g.ts, g.thetas, indexing="ij")
    cols = []
    for _ in range(op.fiber):
        c = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        cols.append(sum(c[a, b] * np.cos(a * np.pi * t) * np.exp(1j * (b - 2) * th)
                        for a in range(3) for b in range(5)))
    return np.stack(cols, -1).reshape(-1)


@pytest.mark.acceptance(6)
def test_green_identity(note):
    """Scale of each pair: the magnitudes of the three terms of the
    identity, |<Au,v>_H| + |<u,Av>_H| + |boundary form|.  The passing side
    is also checked against the larger scale ||A|| ||u||_H ||v||_H."""
    op = sp.CylinderOperator(GRID, 2)
    rng = np.random.default_rng(6)
    w = op.weights
    a_norm = np.linalg.norm(op.A, 2)
    worst = worst_norm = 0.0
    control = np.inf
    for i in range(100):
        if i % 2:
            u, v = _smooth_grid_function(rng, op), _smooth_grid_function(rng, op)
        else:
            u = rng.standard_normal(op.dim_full) + 1j * rng.standard_normal(op.dim_full)
            v = rng.standard_normal(op.dim_full) + 1j * rng.standard_normal(op.dim_full)
        au_v = np.vdot(v, w * (op.A @ u))
        u_av = np.vdot(op.A @ v, w * u)
        d = sp.green_defect(op, u, v)
        form = (au_v - u_av) - d
        scale = abs(au_v) + abs(u_av) + abs(form)
        worst = max(worst, abs(d) / scale)
        worst_norm = max(worst_norm, abs(d) / (a_norm * np.sqrt(np.sum(w * abs(u) ** 2) * np.sum(w * abs(v) ** 2))))
        control = min(control, abs(sp.green_defect(op, u, v, flip_convention=True)) / scale)
    note(f"100 pairs: max defect/scale {worst:.1e} (vs ||A|| scale {worst_norm:.1e}); "
         f"flipped control min {control:.3f}")
    assert worst <= GREEN_TOL and worst_norm <= GREEN_TOL
    assert control > GREEN_CONTROL


# ---------------------------------------------------------------- criterion 7

@pytest.mark.acceptance(7)
def test_ktheory_identities(note):
    start = time.perf_counter()
    for n in range(2, 6):
        assert kt.verify_dn(n).passed
        coeffs = kt.reduce_mod_jn(kt.vandermonde(n)).coords
        assert coeffs == {kt.staircase_exponent(n): math.factorial(n)}
        assert kt.verify_nun(n).passed
    scalars = {}
    for n in range(2, 5):
        r = kt.pi_star_b(n)
        scalars[n] = r.scalar
        # reference: (-1)^{n(n-1)/2} n! on the Artin top monomial
        assert r.passed and r.scalar != 0
        assert r.scalar == (-1) ** (n * (n - 1) // 2) * math.factorial(n)
        assert r.top_coefficient.coords == {kt.staircase_exponent(n): r.scalar}
    elapsed = time.perf_counter() - start
    note(f"D_n, nu_n for n=2..5 ok; pi_*b scalars {scalars}; {elapsed:.1f} s")
    assert elapsed < KTHEORY_BUDGET


# ---------------------------------------------------------------- criterion 8

@pytest.mark.acceptance(8)
@pytest.mark.parametrize("n", [12, 16, 24])
def test_flow_ladder(n, winding16, note):
    fam = winding16 if n == 16 else sp.DiscreteFamily(tp.winding_family(), sp.CylinderGrid(n, n))
    rows = []
    # widest window first: narrower windows reuse its eigen cache
    for window in (2.0, 1.0, 0.5):
        res = sp.spectral_flow_detail(fam, window=window)
        rows.append((window, res.value, res.window_total, res.whole_spectrum, res.n_samples))
    note(f"{n}x{n}: " + ", ".join(f"window {w}: sf {v} (total {t}, whole {ws}, {k} samples)"
                                   for w, v, t, ws, k in rows))
    want = expected_winding_index()
    for _, value, window_total, whole, _ in rows:
        assert value == want
        assert whole == 0 and window_total == 0


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-v", *sys.argv[1:]]))
