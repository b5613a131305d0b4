"""Boundary principal-symbol data and the E+ / E- splitting.

Symbol convention: a first-order operator sum_v a_v d_v has principal symbol
sigma(xi) = sum_v a_v (-i xi_v), i.e. d_v -> -i xi(v).  With this choice the
Green formula reads <Au, v> - <u, Av> = int_bdry <i sigma(n) u, v>, which the
discrete operators in ``spectral`` reproduce exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NotElliptic, SingularIterate

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

STRUCT_TOL = 1e-10
ISOTROPY_TOL = 1e-8


def inner(x, y) -> complex:
    """<x, y>, linear in the first slot."""
    return complex(np.vdot(np.asarray(y), np.asarray(x)))


@dataclass(frozen=True)
class BoundarySymbolSample:
    sigma_n: np.ndarray
    sigma_tau: np.ndarray

    def __post_init__(self):
        sn = linalg.as_complex_matrix(self.sigma_n, square=True)
        st = linalg.as_complex_matrix(self.sigma_tau, square=True)
        if sn.shape != st.shape:
            raise DimensionMismatch(f"symbol shapes differ: {sn.shape} vs {st.shape}")
        if sn.shape[0] % 2:
            raise DimensionMismatch("fiber dimension must be even")
        for name, m in (("sigma_n", sn), ("sigma_tau", st)):
            if linalg.hermitian_defect(m) > STRUCT_TOL:
                raise ValueError(f"{name} is not Hermitian")
        object.__setattr__(self, "sigma_n", sn)
        object.__setattr__(self, "sigma_tau", st)

    @property
    def dim(self) -> int:
        return self.sigma_n.shape[0]

    @property
    def m(self) -> int:
        return self.dim // 2

    def b(self) -> np.ndarray:
        """Tangential endomorphism sigma(n)^-1 sigma(tau)."""
        return np.linalg.solve(self.sigma_n, self.sigma_tau)

    def direct_sum(self, other: "BoundarySymbolSample") -> "BoundarySymbolSample":
        return BoundarySymbolSample(
            _block_diag(self.sigma_n, other.sigma_n), _block_diag(self.sigma_tau, other.sigma_tau)
        )

    def conjugate(self, g: np.ndarray) -> "BoundarySymbolSample":
        gh = g.conj().T
        return BoundarySymbolSample(g @ self.sigma_n @ gh, g @ self.sigma_tau @ gh)


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def elliptic_on_grid(sample: BoundarySymbolSample, t_max: float = 10.0, n: int = 1001,
                     tol: float = 1e-10) -> bool:
    """No real zero of t -> det(t sigma_n + sigma_tau) on a grid, and sigma_n
    (the leading coefficient) invertible."""
    scale = np.linalg.norm(sample.sigma_n) + np.linalg.norm(sample.sigma_tau)
    if np.linalg.svd(sample.sigma_n, compute_uv=False).min() <= tol * scale:
        return False
    for t in np.linspace(-t_max, t_max, n):
        sv = np.linalg.svd(t * sample.sigma_n + sample.sigma_tau, compute_uv=False)
        if sv.min() <= tol * scale * max(1.0, abs(t)):
            return False
    return True


def column_frame(p: np.ndarray, rank: int, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal frame of ran(p) built by Gram-Schmidt over p's columns in
    order.  For coordinate projectors this returns standard basis vectors,
    which keeps frame coordinates canonical."""
    vecs: list[np.ndarray] = []
    for j in range(p.shape[1]):
        v = p[:, j].copy()
        if np.linalg.norm(v) <= tol:
            continue
        for _ in range(2):
            for q in vecs:
                v -= (q.conj() @ v) * q
        nv = np.linalg.norm(v)
        if nv > tol:
            vecs.append(v / nv)
        if len(vecs) == rank:
            break
    if len(vecs) != rank:
        raise NotElliptic(f"projector range has dimension {len(vecs)}, expected {rank}")
    return np.column_stack(vecs) if vecs else np.zeros((p.shape[0], 0), complex)


@dataclass(frozen=True)
class Splitting:
    p_plus: np.ndarray
    p_minus: np.ndarray
    frame_plus: np.ndarray
    frame_minus: np.ndarray

    @property
    def m(self) -> int:
        return self.frame_minus.shape[1]


def split(sample: BoundarySymbolSample) -> Splitting:
    """E+ / E- from the sign function of b = sigma(n)^-1 sigma(tau)."""
    b = sample.b()
    try:
        pp = linalg.upper_half_projector(b)
    except SingularIterate as exc:
        raise NotElliptic(f"b has spectrum on the real axis: {exc}") from exc
    pm = np.eye(sample.dim) - pp
    rank = int(round(np.trace(pp).real))
    if rank != sample.m:
        raise NotElliptic(f"rank of P+ is {rank}, expected {sample.m}")
    return Splitting(pp, pm, column_frame(pp, sample.m), column_frame(pm, sample.m))


def symplectic_form(sigma_n, u, v) -> complex:
    """omega(u, v) = <i sigma(n) u, v>."""
    sn = np.asarray(sigma_n, dtype=complex)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if sn.shape[0] != u.shape[0] or sn.shape[0] != v.shape[0]:
        raise DimensionMismatch("vector and symbol dimensions differ")
    return inner(1j * (sn @ u), v)


def isotropy_defect(sigma_n, frame) -> float:
    f = linalg.frame_matrix(frame)
    if f.shape[1] == 0:
        return 0.0
    gram = f.conj().T @ (1j * np.asarray(sigma_n, dtype=complex)) @ f
    return float(np.abs(gram).max())


def check_lagrangian(sigma_n, frame, tol: float = ISOTROPY_TOL) -> bool:
    sn = np.asarray(sigma_n, dtype=complex)
    f = linalg.frame_matrix(frame)
    if f.shape[0] != sn.shape[0]:
        raise DimensionMismatch("frame and symbol dimensions differ")
    if f.shape[1] != sn.shape[0] // 2:
        return False
    return isotropy_defect(sn, f) <= tol


# ---------------------------------------------------------------- built-in operator

def dirac_symbol(xi_t: float, xi_theta: float, rank: int = 2) -> np.ndarray:
    """Principal symbol of [[0, D*], [D, 0]] with D = -i d_t + d_theta acting
    on C^rank blocks.  Fiber ordering is (chirality, block index)."""
    core = -xi_t * PAULI_X - xi_theta * PAULI_Y
    return np.kron(core, np.eye(rank))


def cylinder_boundary_sample(component: str, rank: int = 2) -> BoundarySymbolSample:
    """Boundary symbol sample of the odd Dirac operator on [0,1] x S^1.

    ``component`` is "t1" (outward conormal +dt, tangent +dtheta) or "t0"
    (outward conormal -dt; the positive tangent is then -dtheta).
    """
    if component == "t1":
        return BoundarySymbolSample(dirac_symbol(1, 0, rank), dirac_symbol(0, 1, rank))
    if component == "t0":
        return BoundarySymbolSample(dirac_symbol(-1, 0, rank), dirac_symbol(0, -1, rank))
    raise ValueError(f"unknown boundary component {component!r}")
