from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexlab import linalg
from indexlab import spectral as sp
from indexlab import topology as tp
from indexlab.errors import (
    AmbiguousCrossing,
    DimensionMismatch,
    NotLagrangian,
    NyquistViolation,
    ParamMismatch,
    StepTooCoarse,
)
from indexlab.properties import random_unitary
from indexlab.symbols import PAULI_X, PAULI_Z, cylinder_boundary_sample

# frozen regression values (measured with this discretization, see README)
DIR_GAP_16 = 1.5679
DIR_GAP_FLOOR = 1.5


@pytest.fixture(scope="module")
def op8():
    return sp.CylinderOperator(sp.CylinderGrid(8, 8), 2)


# ---------------------------------------------------------------- SBP pieces

@pytest.mark.parametrize("n", [5, 8, 13])
def test_upwind_pair_summation_by_parts(n):
    o = sp.upwind_sbp(n)
    H = np.diag(o.H)
    assert np.allclose(o.Q + o.Q.T, o.B, atol=1e-15)
    assert np.allclose(o.S, o.S.T) and np.linalg.eigvalsh(o.S).max() < 1e-12
    assert np.allclose(H @ o.d_plus + (H @ o.d_minus).T, o.B, atol=1e-13)
    rng = np.random.default_rng(n)
    u, v = rng.standard_normal(n), rng.standard_normal(n)
    lhs = u @ H @ (o.d_plus @ v) + (o.d_minus @ u) @ H @ v
    assert abs(lhs - (u[-1] * v[-1] - u[0] * v[0])) < 1e-12 * np.abs(u).max() * np.abs(v).max() * n


def test_sbp_accuracy_on_polynomials():
    n = 11
    o = sp.upwind_sbp(n)
    t = np.linspace(0, 1, n)
    for D in (o.d_plus, o.d_minus, o.d_central):
        assert np.allclose(D @ np.ones(n), 0, atol=1e-12)
        assert np.allclose(D @ t, 1, atol=1e-12)
        # quadratics are exact away from the two closure nodes at each end
        assert np.allclose((D @ t ** 2)[2:-2], 2 * t[2:-2], atol=1e-12)


@pytest.mark.parametrize("n", [8, 9, 16])
def test_fourier_derivative(n):
    D = sp.fourier_derivative(n)
    th = 2 * np.pi * np.arange(n) / n
    assert np.allclose(D + D.conj().T, 0, atol=1e-12)
    for k in range(1, (n - 1) // 2 + 1):
        assert np.allclose(D @ np.sin(k * th), k * np.cos(k * th), atol=1e-10)


def test_grid_parse_and_validation():
    g = sp.CylinderGrid.parse("12x16")
    assert (g.n_t, g.n_theta, g.label()) == (12, 16, "12x16")
    with pytest.raises(ValueError):
        sp.CylinderGrid(12, 12, sbp_order=4)
    with pytest.raises(ValueError):
        sp.CylinderGrid(3, 12)


# ---------------------------------------------------------------- Green identity

def test_green_identity_random_pairs(op8):
    rng = np.random.default_rng(0)
    scale = np.linalg.norm(op8.A, 2)
    for _ in range(10):
        u = rng.standard_normal(op8.dim_full) + 1j * rng.standard_normal(op8.dim_full)
        v = rng.standard_normal(op8.dim_full) + 1j * rng.standard_normal(op8.dim_full)
        nrm = np.sqrt(np.sum(op8.weights * abs(u) ** 2) * np.sum(op8.weights * abs(v) ** 2))
        assert abs(sp.green_defect(op8, u, v)) <= 1e-12 * scale * nrm
        assert abs(sp.green_defect(op8, u, v, flip_convention=True)) > 1e-2 * nrm


def test_green_identity_diagonal(op8):
    rng = np.random.default_rng(1)
    u = rng.standard_normal(op8.dim_full) + 1j * rng.standard_normal(op8.dim_full)
    w = op8.weights
    lhs = np.vdot(u, w * (op8.A @ u)) - np.vdot(op8.A @ u, w * u)
    assert abs(lhs.real) < 1e-12 * abs(lhs)
    assert abs(sp.green_defect(op8, u, u)) < 1e-12 * abs(lhs)


def test_green_dimension_check(op8):
    with pytest.raises(DimensionMismatch):
        sp.green_defect(op8, np.zeros(3), np.zeros(op8.dim_full))


# ---------------------------------------------------------------- assembly

@pytest.fixture(scope="module")
def winding16():
    return sp.DiscreteFamily(tp.winding_family(), sp.CylinderGrid(16, 16))


def test_assembled_matrix_is_hermitian(winding16):
    assert winding16.dim == 4 * 16 * 16 - 2 * 16 * 2
    M = winding16.op.compress(winding16._frames_at(0.3))
    assert linalg.hermitian_defect(M) < 1e-10
    assert winding16.matrix(0.3).shape == (winding16.dim,) * 2


def test_loop_closure(winding16):
    assert np.array_equal(winding16.matrix(0.0), winding16.matrix(1.0))


def test_constant_family_matrices_agree():
    fam = sp.DiscreteFamily(tp.dirichlet_family(1), sp.CylinderGrid(8, 8))
    assert np.array_equal(fam.matrix(0.1), fam.matrix(0.7))


def test_non_lagrangian_data_rejected():
    bad = np.array([[1.0, 0.8], [0.0, 1.0]], dtype=complex)
    comps = [tp.BoundaryComponent(c, cylinder_boundary_sample(c, 2), lambda th, s: bad, tp.ORIENTATION[c])
             for c in ("t0", "t1")]
    fam = sp.DiscreteFamily(tp.LoopFamilySpec(comps, 2), sp.CylinderGrid(6, 6))
    with pytest.raises(NotLagrangian):
        fam.matrix(0.0)


def test_nyquist_violation():
    with pytest.raises(NyquistViolation):
        sp.DiscreteFamily(tp.winding_family(1.0, 4, 1), sp.CylinderGrid(8, 8))
    assert sp.nyquist_check(tp.winding_family(), sp.CylinderGrid(8, 16)) < sp.NYQUIST_TOL


def test_second_order_convergence_of_dirichlet_gap():
    # continuum gap of Dir+ is pi/2 (lowest axial mode, zero angular frequency)
    err = []
    for n in (12, 24):
        fam = sp.DiscreteFamily(tp.dirichlet_family(1), sp.CylinderGrid(n, 8))
        err.append(abs(np.abs(np.linalg.eigvalsh(fam.matrix(0.0))).min() - np.pi / 2))
    assert err[1] < err[0] / 3


def test_eigen_window(winding16):
    dirp = sp.DiscreteFamily(tp.dirichlet_family(1), sp.CylinderGrid(16, 16))
    assert sp.eigen_window(dirp, 0.0, window=0.1) == []
    toy = sp.MatrixLoop(lambda u: np.array([[0.2, 0.1], [0.1, -0.3]], dtype=complex))
    got = sp.eigen_window(toy, 0.0, window=10.0)
    closed = np.sort([-0.05 - np.sqrt(0.0625 + 0.01), -0.05 + np.sqrt(0.0625 + 0.01)])
    assert np.allclose([v for v, _ in got], closed) and all(m == 1 for _, m in got)
    assert sp.eigen_window(sp.MatrixLoop(lambda u: np.eye(3)), 0.0, window=2.0) == [(1.0, 3)]


# ---------------------------------------------------------------- gap probe

@pytest.mark.parametrize("sign", [1, -1])
def test_dirichlet_gap(sign):
    gap = sp.gap_probe(tp.dirichlet_family(sign), sp.CylinderGrid(16, 16), n_samples=2)
    assert gap > DIR_GAP_FLOOR
    assert abs(gap - DIR_GAP_16) < 1e-4


def test_gap_negative_control():
    # the winding member at s = 0 has a near-kernel (continuum zero mode)
    assert sp.gap_at(tp.winding_family(), sp.CylinderGrid(12, 12), 0.0) < 1e-3


# ---------------------------------------------------------------- spectral flow on toys

def test_constant_loop_has_zero_flow():
    loop = sp.MatrixLoop(lambda u: np.diag([0.5, -0.7, 2.0]).astype(complex))
    assert sp.spectral_flow(loop) == 0 and sp.cayley_flow(loop) == 0


def test_path_flow():
    assert sp._path_spectral_flow(lambda u: np.array([[u - 0.5]])) == 1
    assert sp._path_spectral_flow(lambda u: np.array([[0.5 - u]])) == -1
    assert sp._path_spectral_flow(lambda u: np.diag([0.5 - u, u - 0.3, 1.0])) == 0


@pytest.mark.parametrize("seed", range(8))
def test_toy_family_flow(seed):
    fam, expected = sp.random_toy_family(seed)
    res = sp.spectral_flow_detail(fam)
    assert res.value == expected
    assert res.whole_spectrum == 0 and res.window_total == 0
    assert sp.cayley_flow(fam) == expected


def test_direct_sum_identities():
    f, ef = sp.random_toy_family(11)
    empty = sp.MatrixLoop(lambda u: np.zeros((0, 0)))
    assert sp.spectral_flow(sp.direct_sum(f, empty)) == ef
    assert sp.spectral_flow(sp.direct_sum(f, f)) == 2 * ef
    g = sp.MatrixLoop(f.fn, n_params=f.n_params + 1)
    with pytest.raises(ParamMismatch):
        sp.direct_sum(f, g)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_conjugation_invariance(seed):
    f, e = sp.random_toy_family(seed)
    U = random_unitary(np.random.default_rng(seed), f.dim)
    assert sp.spectral_flow(sp.conjugated(f, U)) == e


def test_ambiguous_crossing():
    loop = sp.MatrixLoop(lambda u: np.zeros((1, 1), dtype=complex))
    with pytest.raises(AmbiguousCrossing):
        sp.spectral_flow(loop)


def test_step_too_coarse():
    def fn(u):
        # eigenvectors jump at u = 0.5 with eigenvalues near zero
        return 0.1 * (PAULI_Z if u < 0.5 else PAULI_X)

    with pytest.raises(StepTooCoarse):
        sp.spectral_flow(sp.MatrixLoop(fn, n_params=8))


def test_window_exit_does_not_count():
    # one eigenvalue rises from -3 to +3 and back outside the window
    loop = sp.MatrixLoop(lambda u: np.array([[3 * np.cos(2 * np.pi * u)]], dtype=complex), n_params=20)
    res = sp.spectral_flow_detail(loop, window=1.0)
    assert res.value == 0 and res.window_total == 0


# ---------------------------------------------------------------- Cayley transform

def test_cayley_scalars():
    assert np.allclose(sp.cayley(np.zeros((2, 2))), -np.eye(2))
    assert np.allclose(sp.cayley(np.array([[1.0]])), [[(1 - 1j) / (1 + 1j)]])
    assert np.isclose((1 - 1j) / (1 + 1j), -1j)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_cayley_unitary_and_identity(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (z + z.conj().T) / 2
    k = sp.cayley(h)
    assert np.allclose(k.conj().T @ k, np.eye(n), atol=1e-10)
    assert np.allclose(np.eye(n) - k, 2j * np.linalg.inv(h + 1j * np.eye(n)), atol=1e-10)
    phases = np.sort(np.angle(-np.linalg.eigvals(k)))
    assert np.allclose(phases, np.sort(2 * np.arctan(np.linalg.eigvalsh(h))), atol=1e-9)


# ---------------------------------------------------------------- discrete winding family

def test_winding_flow_and_sampling_stability():
    spec = tp.winding_family()
    grid = sp.CylinderGrid(12, 12)
    a = sp.spectral_flow_detail(sp.DiscreteFamily(spec, grid, n_params=40))
    b = sp.spectral_flow_detail(sp.DiscreteFamily(spec, grid, n_params=80))
    assert a.value == b.value == tp.topological_index(spec)
    assert a.whole_spectrum == 0 and a.window_total == 0
    # the trusted crossing and its compensating partner
    assert sorted((c.direction, c.resolved) for c in a.crossings) == [(-1, True), (1, False)]


def test_locally_constant_flow_is_zero():
    fam = sp.DiscreteFamily(tp.locally_constant_family(), sp.CylinderGrid(12, 12), n_params=8)
    assert sp.spectral_flow(fam) == 0
