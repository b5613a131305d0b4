"""Analytical side: discretized boundary problems on the cylinder and their
spectral flow.

Discretization
--------------
Axial direction t in [0, 1]: an upwind summation-by-parts pair
D+ = H^-1 (Q + S/2), D- = H^-1 (Q - S/2) with Q the second-order central SBP
operator and S = -c D2^T D2 a negative semidefinite dissipation built from
second differences.  Then Q+ + Q-^T = B = diag(-1, 0, ..., 0, 1), the exact
discrete integration by parts, while the dissipation removes the t-doublers.

Angular direction: the Fourier derivative on n_theta nodes.  It is exactly
skew-adjoint and has no doublers.  For even n_theta the Nyquist mode gets
the symbol +i n/2.

The operator [[0, D*], [D, 0]], D = -i d_t + d_theta, becomes
[[0, X], [Y, 0]] with Y = -i D_t+ + D_theta and X = -i D_t- - D_theta, which
satisfies <A u, v>_H - <u, A v>_H = sum_bdry h_theta <i sigma(n) u, v> exactly.
Compressing to grid functions whose boundary values lie in the Lagrangian
subspaces L(theta_i, s) therefore yields an exactly Hermitian matrix.

Spectral flow
-------------
A closed loop of finite Hermitian matrices has zero net crossings.  The
continuum flow shows up on eigenpairs that are resolved by the grid, and
the compensating crossing is carried by an under-resolved lattice mode whose
crossing speed grows with the grid.  A crossing is therefore trusted when
its eigenvalue lies in the window [-L, L] and its eigenvector keeps most of
its weight on resolved angular frequencies (|k| <= n_theta / 4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Sequence

import numpy as np

from . import linalg
from .boundary import t_to_l
from .errors import (
    AmbiguousCrossing,
    DimensionMismatch,
    NotLagrangian,
    NyquistViolation,
    ParamMismatch,
    StepTooCoarse,
)
from .symbols import cylinder_boundary_sample, split
from .topology import LoopFamilySpec

DEFAULT_WINDOW = 1.0
DEFAULT_DISSIPATION = 0.5
DEFAULT_PHASE = 0.381966  # keeps samples off the symmetric points s = 0, pi
EPS_ZERO = 1e-9
HERMITIAN_TOL = 1e-10
NOT_LAGRANGIAN_TOL = 1e-8
MATCH_OVERLAP = 0.6
UNRESOLVED_LIMIT = 0.5
MAX_DEPTH = 10
NYQUIST_TOL = 0.1


# ---------------------------------------------------------------- SBP operators

@dataclass(frozen=True)
class UpwindSBP:
    h: float
    H: np.ndarray       # diagonal norm weights
    Q: np.ndarray       # central part, Q + Q^T = B
    S: np.ndarray       # dissipation, symmetric negative semidefinite
    d_plus: np.ndarray
    d_minus: np.ndarray

    @property
    def B(self) -> np.ndarray:
        b = np.zeros_like(self.Q)
        b[0, 0], b[-1, -1] = -1.0, 1.0
        return b

    @property
    def d_central(self) -> np.ndarray:
        return self.Q / self.H[:, None]


def upwind_sbp(n: int, dissipation: float = DEFAULT_DISSIPATION) -> UpwindSBP:
    if n < 4:
        raise ValueError("need at least 4 axial nodes")
    h = 1.0 / (n - 1)
    H = np.full(n, h)
    H[0] = H[-1] = h / 2
    Q = np.zeros((n, n))
    idx = np.arange(n - 1)
    Q[idx, idx + 1] = 0.5
    Q[idx + 1, idx] = -0.5
    Q[0, 0], Q[-1, -1] = -0.5, 0.5
    D2 = np.zeros((n - 2, n))
    for j in range(n - 2):
        D2[j, j:j + 3] = (1.0, -2.0, 1.0)
    S = -dissipation * D2.T @ D2
    return UpwindSBP(h, H, Q, S, (Q + S / 2) / H[:, None], (Q - S / 2) / H[:, None])


def fourier_derivative(n: int) -> np.ndarray:
    """Spectral d/dtheta on n equispaced nodes of [0, 2 pi)."""
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = n // 2
    F = np.fft.fft(np.eye(n), axis=0)
    return np.fft.ifft(1j * k[:, None] * F, axis=0)


@dataclass(frozen=True)
class CylinderGrid:
    n_t: int
    n_theta: int
    sbp_order: int = 2
    dissipation: float = DEFAULT_DISSIPATION

    def __post_init__(self):
        if self.sbp_order != 2:
            raise ValueError("only the second-order SBP pair is implemented")
        if self.n_t < 4 or self.n_theta < 4:
            raise ValueError("grid too small")

    @property
    def h_t(self) -> float:
        return 1.0 / (self.n_t - 1)

    @property
    def h_theta(self) -> float:
        return 2 * np.pi / self.n_theta

    @property
    def thetas(self) -> np.ndarray:
        return self.h_theta * np.arange(self.n_theta)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_t)

    def label(self) -> str:
        return f"{self.n_t}x{self.n_theta}"

    @classmethod
    def parse(cls, text: str, **kw) -> "CylinderGrid":
        a, b = text.lower().split("x")
        return cls(int(a), int(b), **kw)


# ---------------------------------------------------------------- operator

class CylinderOperator:
    """Dense SBP discretization of the odd Dirac operator.

    Unknowns are ordered (t node, theta node, chirality, block index).
    """

    def __init__(self, grid: CylinderGrid, rank: int = 2):
        self.grid = grid
        self.rank = rank
        nt, nth = grid.n_t, grid.n_theta
        self.sbp = upwind_sbp(nt, grid.dissipation)
        Dth = fourier_derivative(nth)
        It, Ith = np.eye(nt), np.eye(nth)
        Y = -1j * np.kron(self.sbp.d_plus, Ith) + np.kron(It, Dth)
        X = -1j * np.kron(self.sbp.d_minus, Ith) - np.kron(It, Dth)
        E12 = np.array([[0, 1], [0, 0]])
        core = np.kron(X, E12) + np.kron(Y, E12.T)        # (t, theta, chir)
        self.A = np.kron(core, np.eye(rank))               # (t, theta, chir, r)
        self.fiber = 2 * rank
        w = np.kron(np.kron(self.sbp.H, np.full(nth, grid.h_theta)), np.ones(self.fiber))
        self.weights = w
        sq = np.sqrt(w)
        self.A_sym = (sq[:, None] * self.A) / sq[None, :]   # H^1/2 A H^-1/2
        nb = nth * self.fiber
        self.dim_full = self.A.shape[0]
        self.idx_t0 = np.arange(nb)
        self.idx_t1 = np.arange(self.dim_full - nb, self.dim_full)
        self.idx_int = np.arange(nb, self.dim_full - nb)
        self.idx_bdry = np.concatenate([self.idx_t0, self.idx_t1])
        self._A_II = self.A_sym[np.ix_(self.idx_int, self.idx_int)]
        self._A_IB = self.A_sym[np.ix_(self.idx_int, self.idx_bdry)]
        self._A_BI = self.A_sym[np.ix_(self.idx_bdry, self.idx_int)]
        self._A_BB = self.A_sym[np.ix_(self.idx_bdry, self.idx_bdry)]
        self.samples = {c: cylinder_boundary_sample(c, rank) for c in ("t0", "t1")}
        self.splits = {c: split(s) for c, s in self.samples.items()}

    # boundary data
    def boundary_frames(self, spec: LoopFamilySpec, s: float) -> np.ndarray:
        """Block-diagonal (2 n_theta * 2r, 2 n_theta * r) frame of the L's."""
        nth, f, r = self.grid.n_theta, self.fiber, self.rank
        V = np.zeros((2 * nth * f, 2 * nth * r), dtype=complex)
        for ci, cname in enumerate(("t0", "t1")):
            comp = spec.component(cname)
            for i, th in enumerate(self.grid.thetas):
                L = t_to_l(self.samples[cname], self.splits[cname], comp.T(th, s))
                row = (ci * nth + i) * f
                col = (ci * nth + i) * r
                V[row:row + f, col:col + r] = L.frame
        return V

    def compress(self, V_B: np.ndarray) -> np.ndarray:
        top = np.hstack([self._A_II, self._A_IB @ V_B])
        bottom = np.hstack([V_B.conj().T @ self._A_BI, V_B.conj().T @ self._A_BB @ V_B])
        return np.vstack([top, bottom])

    def lift(self, V_B: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Compressed coordinates -> H^1/2-scaled full grid vectors."""
        y = np.atleast_2d(y.T).T if y.ndim == 1 else y
        x = np.zeros((self.dim_full, y.shape[1]), dtype=complex)
        ni = self.idx_int.size
        x[self.idx_int] = y[:ni]
        x[self.idx_bdry] = V_B @ y[ni:]
        return x

    def grid_function(self, x: np.ndarray) -> np.ndarray:
        """Undo the H^1/2 scaling; shape (n_t, n_theta, 2, r, ...)."""
        u = x / np.sqrt(self.weights).reshape((-1,) + (1,) * (x.ndim - 1))
        return u.reshape((self.grid.n_t, self.grid.n_theta, 2, self.rank) + x.shape[1:])

    def unresolved_weight(self, x: np.ndarray) -> np.ndarray:
        """Weight of each (unit) column on angular modes |k| > n_theta / 4."""
        nth = self.grid.n_theta
        xr = x.reshape(self.grid.n_t, nth, self.fiber, -1)
        spec = np.abs(np.fft.fft(xr, axis=1)) ** 2 / nth
        k = np.abs(np.fft.fftfreq(nth, 1.0 / nth))
        return spec[:, k > nth / 4].sum(axis=(0, 1, 2))


def green_defect(op: CylinderOperator, u: np.ndarray, v: np.ndarray, flip_convention: bool = False
                 ) -> complex:
    """<A u, v>_H - <u, A v>_H - sum_bdry h_theta <i sigma(n) u_i, v_i>.

    ``u`` and ``v`` are unscaled full grid vectors.  With ``flip_convention``
    the boundary symbol is taken with the opposite sign (d -> +i xi), which
    must leave an O(1) defect.
    """
    u = np.asarray(u, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    if u.size != op.dim_full or v.size != op.dim_full:
        raise DimensionMismatch(f"grid vectors must have length {op.dim_full}")
    w = op.weights
    lhs = np.vdot(v, w * (op.A @ u)) - np.vdot(op.A @ v, w * u)
    sign = -1.0 if flip_convention else 1.0
    f = op.fiber
    total = 0.0 + 0.0j
    for cname, idx in (("t0", op.idx_t0), ("t1", op.idx_t1)):
        sn = sign * op.samples[cname].sigma_n
        ub = u[idx].reshape(-1, f)
        vb = v[idx].reshape(-1, f)
        total += op.grid.h_theta * np.sum(np.conj(vb) * ((1j * ub) @ sn.T))
    return complex(lhs - total)


def nyquist_check(spec: LoopFamilySpec, grid: CylinderGrid, n_s: int = 8, oversample: int = 8,
                  tol: float = NYQUIST_TOL) -> float:
    """Relative size of the angular Fourier content of T at |k| >= n_theta/2.

    Raises NyquistViolation above ``tol``; returns the measured ratio.
    """
    n_fine = oversample * grid.n_theta
    th = 2 * np.pi * np.arange(n_fine) / n_fine
    worst = 0.0
    for comp in spec.components:
        for s in 2 * np.pi * np.arange(n_s) / n_s:
            vals = np.array([comp.T(t, s) for t in th])
            coef = np.abs(np.fft.fft(vals, axis=0)) / n_fine
            k = np.abs(np.fft.fftfreq(n_fine, 1.0 / n_fine))
            top = coef.max()
            if top == 0:
                continue
            worst = max(worst, float(coef[k >= grid.n_theta / 2].max() / top))
    if worst > tol:
        raise NyquistViolation(
            f"T has angular content {worst:.2e} beyond the Nyquist limit of {grid.n_theta} nodes"
        )
    return worst


# ---------------------------------------------------------------- families

class LoopFamily(Protocol):
    n_params: int
    phase: float
    window: float

    def matrix(self, u: float) -> np.ndarray: ...

    def lift(self, u: float, vectors: np.ndarray) -> np.ndarray: ...

    def unresolved_weight(self, lifted: np.ndarray) -> np.ndarray: ...


@dataclass
class _EigenCache:
    band: float
    values: np.ndarray      # eigenvalues with |lambda| < band, ascending
    lifted: np.ndarray      # their lifted eigenvectors
    n_negative: int         # over the whole spectrum


class _CachedFamily:
    """Shared eigen cache keyed on the loop parameter.

    Only eigenpairs inside the requested band are computed; the global
    negative count comes from an LDL* inertia, so a sample costs one
    factorization plus a windowed eigensolve.
    """

    def __init__(self):
        self._cache: Dict[float, _EigenCache] = {}

    def eigen(self, u: float, band: float) -> _EigenCache:
        u = float(u) % 1.0
        hit = self._cache.get(u)
        if hit is not None and hit.band >= band:
            return hit
        M = self.matrix(u)
        w, V = linalg.hermitian_eig_window(M, band)
        neg = hit.n_negative if hit is not None else linalg.negative_count(M)
        entry = _EigenCache(band, w, self.lift(u, V), neg)
        self._cache[u] = entry
        return entry


class DiscreteFamily(_CachedFamily):
    """Loop of compressed matrices, parameter u in [0, 1), s = 2 pi u."""

    def __init__(self, spec: LoopFamilySpec, grid: CylinderGrid, n_params: int = 40,
                 window: float = DEFAULT_WINDOW, phase: float = DEFAULT_PHASE,
                 check_nyquist: bool = True, operator: CylinderOperator | None = None):
        super().__init__()
        if check_nyquist:
            nyquist_check(spec, grid)
        self.spec = spec
        self.grid = grid
        self.n_params = n_params
        self.window = window
        self.phase = phase
        self.op = operator if operator is not None else CylinderOperator(grid, spec.rank)
        self.defect_max = 0.0
        self._frames: Dict[float, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.op.idx_int.size + 2 * self.grid.n_theta * self.spec.rank

    def _frames_at(self, u: float) -> np.ndarray:
        u = float(u) % 1.0
        if u not in self._frames:
            self._frames[u] = self.op.boundary_frames(self.spec, 2 * np.pi * u)
        return self._frames[u]

    def matrix(self, u: float) -> np.ndarray:
        M = self.op.compress(self._frames_at(u))
        defect = linalg.hermitian_defect(M)
        self.defect_max = max(self.defect_max, defect)
        if defect > NOT_LAGRANGIAN_TOL:
            raise NotLagrangian(f"compressed matrix has Hermitian defect {defect:.2e}")
        return 0.5 * (M + M.conj().T)

    def lift(self, u: float, vectors: np.ndarray) -> np.ndarray:
        return self.op.lift(self._frames_at(u), vectors)

    def unresolved_weight(self, lifted: np.ndarray) -> np.ndarray:
        return self.op.unresolved_weight(lifted)

    def sample_points(self) -> np.ndarray:
        return (np.arange(self.n_params) + self.phase) / self.n_params


class MatrixLoop(_CachedFamily):
    """Toy loop given by a callable u -> Hermitian matrix.

    ``hidden`` optionally names coordinates that count as unresolved.
    """

    def __init__(self, fn: Callable[[float], np.ndarray], n_params: int = 40,
                 window: float = DEFAULT_WINDOW, phase: float = DEFAULT_PHASE,
                 hidden: Optional[np.ndarray] = None):
        super().__init__()
        self.fn = fn
        self.n_params = n_params
        self.window = window
        self.phase = phase
        self.hidden = None if hidden is None else np.asarray(hidden, dtype=complex)
        self.dim = np.asarray(fn(0.0)).shape[0]

    def matrix(self, u: float) -> np.ndarray:
        return np.asarray(self.fn(float(u) % 1.0), dtype=complex)

    def lift(self, u: float, vectors: np.ndarray) -> np.ndarray:
        return vectors

    def unresolved_weight(self, lifted: np.ndarray) -> np.ndarray:
        if self.hidden is None or lifted.shape[1] == 0:
            return np.zeros(lifted.shape[1])
        return (np.abs(self.hidden.conj().T @ lifted) ** 2).sum(axis=0)


class SumFamily(_CachedFamily):
    def __init__(self, f, g):
        super().__init__()
        if f.n_params != g.n_params or not math.isclose(f.phase, g.phase):
            raise ParamMismatch("families use different loop sampling")
        self.f, self.g = f, g
        self.n_params, self.phase = f.n_params, f.phase
        self.window = min(f.window, g.window)
        self.df = f.matrix(0.0).shape[0]
        self.dim = self.df + g.matrix(0.0).shape[0]
        self._lift_f = f.lift(0.0, np.zeros((self.df, 0))).shape[0]

    def matrix(self, u: float) -> np.ndarray:
        a, b = self.f.matrix(u), self.g.matrix(u)
        out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
        out[: a.shape[0], : a.shape[0]] = a
        out[a.shape[0]:, a.shape[0]:] = b
        return out

    def lift(self, u: float, vectors: np.ndarray) -> np.ndarray:
        return np.vstack([self.f.lift(u, vectors[: self.df]), self.g.lift(u, vectors[self.df:])])

    def unresolved_weight(self, lifted: np.ndarray) -> np.ndarray:
        n = self._lift_f
        return self.f.unresolved_weight(lifted[:n]) + self.g.unresolved_weight(lifted[n:])


def direct_sum(f, g) -> SumFamily:
    return SumFamily(f, g)


def conjugated(family, U: np.ndarray) -> MatrixLoop:
    """The loop u -> U M(u) U*, with unresolved weights pulled back."""
    U = np.asarray(U, dtype=complex)
    inner_lift = family.lift

    def fn(u):
        return U @ family.matrix(u) @ U.conj().T

    loop = MatrixLoop(fn, family.n_params, family.window, family.phase)
    loop.lift = lambda u, vec: inner_lift(u, U.conj().T @ vec)  # type: ignore[assignment]
    loop.unresolved_weight = family.unresolved_weight  # type: ignore[assignment]
    return loop


# ---------------------------------------------------------------- crossing tracker

@dataclass(frozen=True)
class Crossing:
    u0: float
    u1: float
    before: float
    after: float
    direction: int
    multiplicity: int
    resolved: bool


@dataclass
class FlowResult:
    value: int                 # trusted crossings: the analytical index
    window_total: int          # all crossings of 0 seen inside the window
    whole_spectrum: int        # net change of the negative count over the loop
    samples: List[float]
    crossings: List[Crossing]
    window: float
    eigen_rows: List[tuple] = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return len(self.samples)


def _clusters(values: np.ndarray, tol: float) -> List[np.ndarray]:
    if values.size == 0:
        return []
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] <= tol:
            cur.append(b)
        else:
            groups.append(np.array(cur))
            cur = [b]
    groups.append(np.array(cur))
    return groups


@dataclass
class _Level:
    n_negative: int         # over the whole spectrum
    in_window: np.ndarray   # eigenvalues of M with |lambda| < window
    near: np.ndarray        # route values inside the matching band
    lifted: np.ndarray      # their lifted eigenvectors
    unresolved: np.ndarray


class _Route:
    """How spectral data is obtained and what counts as small motion."""

    def __init__(self, family, window: float):
        self.family = family
        self.window = window
        self.band = window / 2
        self.near = window / 4
        self.motion = window / 4

    def level(self, u: float) -> _Level:
        e = self.family.eigen(u, self.window)
        sel = np.abs(e.values) < self.band
        lifted = e.lifted[:, sel]
        return _Level(e.n_negative, e.values, e.values[sel], lifted,
                      self.family.unresolved_weight(lifted))


class _CayleyRoute(_Route):
    """Phases of the unitary (M - i)(M + i)^-1 relative to -1.

    psi = arg(mu) - pi in (-pi, pi]; psi crosses 0 upward exactly when an
    eigenvalue of M crosses 0 upward.  Uses a general (non-Hermitian)
    eigensolver on the unitary, independent of the Hermitian route.
    """

    def __init__(self, family, window: float):
        super().__init__(family, window)
        self.band = 2 * math.atan(window / 2)
        self.near = 2 * math.atan(window / 4)
        self.motion = 2 * math.atan(window / 4)
        self._cache: Dict[float, _Level] = {}

    def level(self, u: float) -> _Level:
        u = float(u) % 1.0
        if u in self._cache:
            return self._cache[u]
        K = cayley(self.family.matrix(u))
        mu, V = np.linalg.eig(K)
        psi = np.angle(-mu)  # arg(mu) - pi, wrapped
        sel = np.abs(psi) < self.band
        Vs = V[:, sel]
        Vs = Vs / np.linalg.norm(Vs, axis=0, keepdims=True)
        lifted = self.family.lift(u, Vs)
        lam = np.tan(psi[np.abs(psi) < 2 * math.atan(self.window)] / 2)
        lvl = _Level(int((psi < 0).sum()), np.sort(lam), psi[sel], lifted,
                     self.family.unresolved_weight(lifted))
        self._cache[u] = lvl
        return lvl


def _step(route: _Route, a: _Level, b: _Level):
    """Crossings between two neighbouring samples, or None if unresolved."""
    tol = 1e-8 * max(1.0, route.window)
    ca, cb = _clusters(a.near, tol), _clusters(b.near, tol)
    if min(np.abs(a.in_window).min(initial=np.inf), np.abs(b.in_window).min(initial=np.inf)) < EPS_ZERO:
        raise AmbiguousCrossing("an eigenvalue sits on zero at a sample")
    ov = np.zeros((len(ca), len(cb)))
    for i, ga in enumerate(ca):
        for j, gb in enumerate(cb):
            ov[i, j] = np.linalg.norm(a.lifted[:, ga].conj().T @ b.lifted[:, gb]) ** 2 / len(ga)
    matched = []
    for i, ga in enumerate(ca):
        if np.abs(a.near[ga]).min() >= route.near:
            continue
        j = int(np.argmax(ov[i])) if len(cb) else -1
        if j < 0 or ov[i, j] < MATCH_OVERLAP or len(cb[j]) != len(ga):
            return None
        matched.append((i, j))
    for j, gb in enumerate(cb):
        if np.abs(b.near[gb]).min() >= route.near:
            continue
        i = int(np.argmax(ov[:, j])) if len(ca) else -1
        if i < 0 or ov[i, j] < MATCH_OVERLAP or len(ca[i]) != len(gb):
            return None
        if (i, j) not in matched:
            matched.append((i, j))
    found = []
    for i, j in matched:
        ga, gb = ca[i], cb[j]
        la, lb = float(a.near[ga].mean()), float(b.near[gb].mean())
        if abs(la - lb) >= route.motion:
            return None
        if (la < 0) == (lb < 0):
            continue
        direction = 1 if lb > la else -1
        res = bool(a.unresolved[ga].mean() < UNRESOLVED_LIMIT and b.unresolved[gb].mean() < UNRESOLVED_LIMIT)
        found.append((la, lb, direction * len(ga), len(ga), res))
    net = a.n_negative - b.n_negative
    if sum(f[2] for f in found) != net:
        return None
    return found


def _track(route: _Route, nodes: Sequence[float], closed: bool, max_depth: int = MAX_DEPTH) -> FlowResult:
    nodes = list(nodes)
    pairs = list(zip(nodes[:-1], nodes[1:]))
    if closed:
        pairs.append((nodes[-1], nodes[0] + 1.0))
    stack = [(a, b, 0) for a, b in reversed(pairs)]
    crossings: List[Crossing] = []
    visited = set(float(x) % 1.0 if closed else float(x) for x in nodes)
    while stack:
        a, b, depth = stack.pop()
        key_b = b % 1.0 if closed else b
        la, lb = route.level(a), route.level(key_b)
        found = _step(route, la, lb)
        if found is None:
            if depth >= max_depth:
                raise StepTooCoarse(f"could not resolve the step [{a:.6f}, {b:.6f}]")
            mid = 0.5 * (a + b)
            visited.add(mid % 1.0 if closed else mid)
            stack.append((mid, b, depth + 1))
            stack.append((a, mid, depth + 1))
            continue
        for before, after, signed, mult, res in found:
            crossings.append(Crossing(a, b, before, after, 1 if signed > 0 else -1, mult, res))
    value = sum(c.direction * c.multiplicity for c in crossings if c.resolved)
    total = sum(c.direction * c.multiplicity for c in crossings)
    first, last = route.level(nodes[0]), route.level(nodes[-1] if not closed else nodes[0])
    whole = first.n_negative - last.n_negative
    samples = sorted(visited)
    rows = []
    for u in samples:
        lvl = route.level(u)
        rows.append((u, lvl.in_window))
    return FlowResult(value, total, whole, samples, crossings, route.window, rows)


def spectral_flow_detail(family, window: float | None = None, max_depth: int = MAX_DEPTH) -> FlowResult:
    w = family.window if window is None else window
    nodes = (np.arange(family.n_params) + family.phase) / family.n_params
    return _track(_Route(family, w), nodes, closed=True, max_depth=max_depth)


def spectral_flow(family, window: float | None = None) -> int:
    return spectral_flow_detail(family, window).value


def cayley(h) -> np.ndarray:
    """kappa(H) = (H - i)(H + i)^-1."""
    h = linalg.as_complex_matrix(h, square=True)
    eye = np.eye(h.shape[0])
    return np.linalg.solve((h + 1j * eye).T, (h - 1j * eye).T).T


def cayley_flow_detail(family, window: float | None = None, max_depth: int = MAX_DEPTH) -> FlowResult:
    w = family.window if window is None else window
    nodes = (np.arange(family.n_params) + family.phase) / family.n_params
    return _track(_CayleyRoute(family, w), nodes, closed=True, max_depth=max_depth)


def cayley_flow(family, window: float | None = None) -> int:
    return cayley_flow_detail(family, window).value


def _path_spectral_flow(fn: Callable[[float], np.ndarray], n: int = 21, window: float = DEFAULT_WINDOW
                       ) -> int:
    """Spectral flow of an open path u in [0, 1] (endpoints included)."""
    loop = MatrixLoop(fn, n_params=n, window=window, phase=0.0)
    nodes = np.linspace(0.0, 1.0, n + 1)
    route = _Route(loop, window)
    # open path: parameters are not reduced mod 1, so 0 and 1 stay distinct
    loop.eigen = _open_eigen(loop)  # type: ignore[assignment]
    return _track(route, nodes, closed=False).value


def _open_eigen(loop: MatrixLoop):
    cache: Dict[float, _EigenCache] = {}

    def eigen(u, band):
        if u not in cache:
            M = np.asarray(loop.fn(float(u)), dtype=complex)
            w, V = linalg.hermitian_eig_window(M, band)
            cache[u] = _EigenCache(band, w, V, linalg.negative_count(M))
        return cache[u]

    return eigen


# ---------------------------------------------------------------- probes

def eigen_window(family, u: float, window: float | None = None, tol: float = 1e-9
                 ) -> List[tuple[float, int]]:
    """Eigenvalues in [-window, window] with multiplicities, ascending."""
    w = family.window if window is None else window
    vals = linalg.hermitian_eig(family.matrix(u)).eigenvalues
    vals = vals[np.abs(vals) <= w]
    out: List[tuple[float, int]] = []
    for g in _clusters(vals, tol):
        out.append((float(vals[g].mean()), len(g)))
    return out


def gap_probe(spec: LoopFamilySpec, grid: CylinderGrid, n_samples: int = 4) -> float:
    """min |lambda| over sampled members of the family."""
    fam = DiscreteFamily(spec, grid, n_params=n_samples)
    gap = np.inf
    for u in fam.sample_points():
        gap = min(gap, float(np.abs(linalg.hermitian_eig(fam.matrix(u)).eigenvalues).min()))
    return gap


def gap_at(spec: LoopFamilySpec, grid: CylinderGrid, s: float) -> float:
    fam = DiscreteFamily(spec, grid, n_params=1, check_nyquist=False)
    return float(np.abs(linalg.hermitian_eig(fam.matrix(s / (2 * np.pi))).eigenvalues).min())


# ---------------------------------------------------------------- toy families

def sawtooth_block(u0: float, direction: int, speed: float = 0.8, far: float = 5.0,
                   hop: float = 0.08) -> Callable[[float], np.ndarray]:
    """2 x 2 loop: a resolved level drifts through zero at u = u0 (moving in
    ``direction``); half a period later it hands over to the hidden
    coordinate and snaps back quickly, which compensates the crossing.
    Coordinate 0 is resolved, coordinate 1 hidden."""
    def wrap(x):
        return (x + 0.5) % 1.0 - 0.5

    def fn(u):
        x = wrap(u - u0)                  # x in [-1/2, 1/2), zero at u0
        edge = 0.5 - abs(x)               # distance to the snap point
        # slow drift, turned into a fast return inside the hop region
        if edge > hop:
            lam = direction * speed * x
        else:
            frac = edge / hop             # 1 at the hop boundary, 0 at the snap
            lam = direction * speed * np.sign(x) * (0.5 - hop) * frac
        # rotate the eigenvector into the hidden slot near the snap point
        beta = (np.pi / 2) * max(0.0, 1 - edge / (2 * hop)) if edge < 2 * hop else 0.0
        c, s = np.cos(beta), np.sin(beta)
        R = np.array([[c, -s], [s, c]])
        return R @ np.diag([lam, far]) @ R.T

    return fn


def random_toy_family(seed: int, n_params: int = 40, window: float = DEFAULT_WINDOW) -> tuple[MatrixLoop, int]:
    """Seeded toy loop made of sawtooth blocks plus a static block, scrambled
    by a fixed unitary.  Returns the family and its expected flow."""
    rng = np.random.default_rng(seed)
    nblocks = int(rng.integers(1, 4))
    blocks, expected = [], 0
    for _ in range(nblocks):
        d = int(rng.choice([-1, 1]))
        blocks.append(sawtooth_block(float(rng.uniform(0, 1)), d, float(rng.uniform(0.6, 1.2))))
        expected += d
    static = np.diag(rng.choice([-1, 1], size=2) * rng.uniform(2.0, 4.0, size=2))
    dim = 2 * nblocks + 2
    Z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    U, _ = np.linalg.qr(Z)
    hidden = U[:, [2 * b + 1 for b in range(nblocks)]]

    def fn(u):
        M = np.zeros((dim, dim), dtype=complex)
        for b, blk in enumerate(blocks):
            M[2 * b:2 * b + 2, 2 * b:2 * b + 2] = blk(u)
        M[-2:, -2:] = static
        return U @ M @ U.conj().T

    return MatrixLoop(fn, n_params, window, hidden=hidden), expected
