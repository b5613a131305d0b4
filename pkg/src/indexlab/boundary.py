"""Local boundary conditions.  Covers the L <-> T correspondence with its
ellipticity checks, plus the subspace F spanned by the negative eigenvectors of T.

T always acts in the coordinates of the E- frame returned by ``split``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import NotElliptic, NotInvertible, NotSelfAdjoint, ZeroEigenvalue
from .symbols import BoundarySymbolSample, Splitting

ANGLE_THRESHOLD = 1e-6
INVERTIBLE_TOL = 1e-10
SELF_ADJOINT_TOL = 1e-10


@dataclass(frozen=True)
class BoundaryConditionL:
    frame: np.ndarray  # (2m, m) orthonormal columns

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T


def _graph_map(sample: BoundarySymbolSample, sp: Splitting) -> np.ndarray:
    """G0 = -i P+ sigma(n)^-1 F-, so that L_T = {F- c + G0 T c}."""
    return -1j * sp.p_plus @ np.linalg.solve(sample.sigma_n, sp.frame_minus)


def _orthonormalize(cols: np.ndarray) -> np.ndarray:
    # Householder QR keeps the frame a smooth function of T, which the
    # spectral assembly relies on.
    q, r = np.linalg.qr(cols)
    phases = np.diag(r).copy()
    phases[np.abs(phases) == 0] = 1
    return q * (phases / np.abs(phases)).conj()[None, :]


def t_to_l(sample: BoundarySymbolSample, sp: Splitting, T) -> BoundaryConditionL:
    """Kernel of P_T = P+ (1 + i sigma(n)^-1 T P-)."""
    T = linalg.as_complex_matrix(T, square=True)
    if T.shape[0] != sp.m:
        raise ValueError(f"T must be {sp.m}x{sp.m}")
    if sp.m and np.linalg.svd(T, compute_uv=False).min() <= INVERTIBLE_TOL * max(1.0, np.linalg.norm(T)):
        raise NotInvertible("T is singular to tolerance")
    cols = sp.frame_minus + _graph_map(sample, sp) @ T
    return BoundaryConditionL(_orthonormalize(cols))


def p_t_matrix(sample: BoundarySymbolSample, sp: Splitting, T) -> np.ndarray:
    T = np.asarray(T, dtype=complex)
    t_full = sp.frame_minus @ T @ sp.frame_minus.conj().T @ sp.p_minus
    return sp.p_plus @ (np.eye(sample.dim) + 1j * np.linalg.solve(sample.sigma_n, t_full))


def principal_angles(frame_a: np.ndarray, frame_b: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between two subspaces."""
    if frame_a.shape[1] == 0 or frame_b.shape[1] == 0:
        return np.array([np.pi / 2])
    c = np.linalg.svd(frame_a.conj().T @ frame_b, compute_uv=False)
    c = np.clip(c, 0.0, 1.0)
    # arcsin of the complementary sines is accurate for tiny angles
    s = np.sqrt(np.clip(1 - c ** 2, 0, 1))
    return np.sort(np.arcsin(s))


@dataclass(frozen=True)
class EllipticDiagnostics:
    ok: bool
    angle_plus: float   # smallest principal angle between L and E+
    angle_minus: float  # smallest principal angle between L and E-
    span_plus: float    # smallest singular value of [L | E+]
    span_minus: float   # smallest singular value of [L | E-]

    def __bool__(self):
        return self.ok


def check_elliptic_bc(sp: Splitting, L: BoundaryConditionL, threshold: float = ANGLE_THRESHOLD
                      ) -> EllipticDiagnostics:
    """L cap E+- = 0 and L + E+- = E, all four with a margin."""
    fl = L.frame
    a_plus = float(principal_angles(fl, sp.frame_plus)[0])
    a_minus = float(principal_angles(fl, sp.frame_minus)[0])
    dim = fl.shape[0]

    def span_margin(other):
        both = np.hstack([fl, other])
        if both.shape[1] < dim:
            return 0.0
        return float(np.linalg.svd(both, compute_uv=False)[dim - 1])

    s_plus = span_margin(sp.frame_plus)
    s_minus = span_margin(sp.frame_minus)
    ok = min(a_plus, a_minus) > threshold and min(s_plus, s_minus) > threshold
    return EllipticDiagnostics(ok, a_plus, a_minus, s_plus, s_minus)


def l_to_t(sample: BoundarySymbolSample, sp: Splitting, L: BoundaryConditionL,
           threshold: float = ANGLE_THRESHOLD) -> np.ndarray:
    """Invert the graph description: u+ = G0 T c with c the E- coordinates."""
    diag = check_elliptic_bc(sp, L, threshold)
    if not diag.ok:
        raise NotElliptic(
            f"L is not transverse to E+/E- (angles {diag.angle_plus:.2e}, {diag.angle_minus:.2e})"
        )
    fl = L.frame
    u_plus = sp.p_plus @ fl
    c = sp.frame_minus.conj().T @ (sp.p_minus @ fl)
    g0 = _graph_map(sample, sp)
    rhs = u_plus @ np.linalg.inv(c)
    T, *_ = np.linalg.lstsq(g0, rhs, rcond=None)
    if np.linalg.norm(g0 @ T - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise NotElliptic("L is not a graph over E- in the expected form")
    return T


def _check_self_adjoint(T: np.ndarray, tol: float) -> np.ndarray:
    T = linalg.as_complex_matrix(T, square=True)
    if np.abs(T - T.conj().T).max() > tol * max(1.0, np.abs(T).max()):
        raise NotSelfAdjoint("T is not self-adjoint")
    return 0.5 * (T + T.conj().T)


def f_subspace(T, sp: Splitting | None = None, tol: float = INVERTIBLE_TOL) -> np.ndarray:
    """Orthonormal frame (E- coordinates) of the negative spectral subspace."""
    T = _check_self_adjoint(T, SELF_ADJOINT_TOL)
    if sp is not None and T.shape[0] != sp.m:
        raise ValueError("T does not match the E- dimension")
    w, v = linalg.hermitian_eig(T)
    if w.size and np.abs(w).min() <= tol:
        raise NotInvertible(f"T has eigenvalue {w[np.argmin(np.abs(w))]:.3e}")
    return v[:, w < 0]


class TClass(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    INDEFINITE = "Indefinite"


def classify(T, tol: float = INVERTIBLE_TOL) -> TClass:
    T = _check_self_adjoint(T, SELF_ADJOINT_TOL)
    w = linalg.hermitian_eig(T).eigenvalues
    if np.abs(w).min() < tol:
        raise ZeroEigenvalue(f"smallest |eigenvalue| {np.abs(w).min():.3e}")
    if w.min() > 0:
        return TClass.POSITIVE_DEFINITE
    if w.max() < 0:
        return TClass.NEGATIVE_DEFINITE
    return TClass.INDEFINITE


def realize_t(frame: np.ndarray, m: int) -> np.ndarray:
    """T = I - 2 F F*: -1 on span(F), +1 on its complement."""
    f = np.asarray(frame, dtype=complex).reshape(m, -1)
    return np.eye(m) - 2 * f @ f.conj().T
