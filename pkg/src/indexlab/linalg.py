"""Dense complex linear algebra kernel.

Matrices are plain ``numpy`` complex arrays.  ``as_complex_matrix`` is the
single validation gate (2-D, finite entries).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NotHermitian, RankDeficient, SingularIterate

EIG_RESIDUAL = 1e-10
SIGN_TOL = 1e-12
SIGN_MAX_ITER = 100
# an iterate with condition number beyond this is treated as singular
SINGULAR_COND = 1e13


def as_complex_matrix(a, square: bool = False) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermitian_defect(h: np.ndarray) -> float:
    """||H - H*|| / ||H|| in the Frobenius norm (0 for the zero matrix)."""
    scale = np.linalg.norm(h)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(h - h.conj().T) / scale)


def norm_estimate(h: np.ndarray, iters: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral norm (a lower bound)."""
    h = as_complex_matrix(h)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(h.shape[1]) + 1j * rng.standard_normal(h.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = h.conj().T @ (h @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        est = np.sqrt(nw)
    return float(est)


@dataclass(frozen=True)
class HermitianEigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


def hermitian_eig(h, tol: float = 1e-10, check: bool = True) -> HermitianEigenResult:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    LAPACK (via numpy) does the work; this wrapper enforces the input
    symmetry contract and, with ``check``, the residual and unitarity bounds.
    """
    h = as_complex_matrix(h, square=True)
    n = h.shape[0]
    if n == 0:
        return HermitianEigenResult(np.zeros(0), np.zeros((0, 0), complex))
    if hermitian_defect(h) > tol:
        raise NotHermitian(f"symmetry defect {hermitian_defect(h):.3e} exceeds {tol:.1e}")
    hs = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(hs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    if check:
        scale = max(np.linalg.norm(hs, 2), 1.0)
        res = np.linalg.norm(hs @ v - v * w, axis=0).max()
        if res > EIG_RESIDUAL * scale:
            raise NoConvergence(f"eigen residual {res:.3e} too large")
        unit = np.abs(v.conj().T @ v - np.eye(n)).max()
        if unit > EIG_RESIDUAL * max(1, np.sqrt(n)):
            raise NoConvergence(f"eigenvectors not unitary ({unit:.3e})")
    return HermitianEigenResult(w, v)


def hermitian_eig_window(h, bound: float, tol: float = 1e-10) -> HermitianEigenResult:
    """Eigenpairs with |lambda| < bound only (LAPACK MRRR on a value range).

    Same residual contract as ``hermitian_eig``; much cheaper when few
    eigenvalues fall in the range.
    """
    h = as_complex_matrix(h, square=True)
    if h.shape[0] == 0:
        return HermitianEigenResult(np.zeros(0), np.zeros((0, 0), complex))
    if hermitian_defect(h) > tol:
        raise NotHermitian(f"symmetry defect {hermitian_defect(h):.3e} exceeds {tol:.1e}")
    hs = 0.5 * (h + h.conj().T)
    try:
        w, v = sla.eigh(hs, driver="evr", subset_by_value=(-bound, bound))
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
        raise NoConvergence(str(exc)) from exc
    if w.size:
        scale = max(norm_estimate(hs), 1.0)
        res = np.linalg.norm(hs @ v - v * w, axis=0).max()
        if res > EIG_RESIDUAL * scale:
            raise NoConvergence(f"eigen residual {res:.3e} too large")
    return HermitianEigenResult(w, v)


def negative_count(h) -> int:
    """Number of negative eigenvalues, from the inertia of a Bunch-Kaufman
    LDL* factorization (Sylvester's law)."""
    h = as_complex_matrix(h, square=True)
    if h.shape[0] == 0:
        return 0
    _, d, _ = sla.ldl(0.5 * (h + h.conj().T), hermitian=True)
    n = d.shape[0]
    count, i = 0, 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0:
            count += int((np.linalg.eigvalsh(d[i:i + 2, i:i + 2]) < 0).sum())
            i += 2
        else:
            count += int(d[i, i].real < 0)
            i += 1
    return count


def matrix_sign(x, tol: float = SIGN_TOL, max_iter: int = SIGN_MAX_ITER) -> np.ndarray:
    """Sign function via the scaled Newton iteration S <- (mu S + (mu S)^-1)/2.

    Determinant scaling is used until the iterates settle, then plain Newton
    steps finish the job (scaling would spoil quadratic convergence).
    """
    s = as_complex_matrix(x, square=True).copy()
    n = s.shape[0]
    if n == 0:
        return s
    scaled = True
    for _ in range(max_iter):
        cond = np.linalg.cond(s)
        if not np.isfinite(cond) or cond > SINGULAR_COND:
            raise SingularIterate(f"iterate condition number {cond:.3e}")
        inv = np.linalg.inv(s)
        if scaled:
            _, logdet = np.linalg.slogdet(s)
            mu = np.exp(-logdet / n)
            new = 0.5 * (mu * s + inv / mu)
        else:
            new = 0.5 * (s + inv)
        delta = np.linalg.norm(new - s) / max(np.linalg.norm(new), 1.0)
        s = new
        if delta < 1e-2:
            scaled = False
        if delta <= tol:
            return s
    raise NoConvergence(f"sign iteration did not converge in {max_iter} steps")


def upper_half_projector(b, tol: float = SIGN_TOL, max_iter: int = SIGN_MAX_ITER) -> np.ndarray:
    """Spectral projector onto the generalized eigenspaces of ``b`` whose
    eigenvalues have positive imaginary part.

    Eigenvalues mu of b with Im mu > 0 become eigenvalues of -i b with
    positive real part, so P+ = (I + sign(-i b)) / 2.
    """
    b = as_complex_matrix(b, square=True)
    s = matrix_sign(-1j * b, tol=tol, max_iter=max_iter)
    return 0.5 * (np.eye(b.shape[0]) + s)


def orthonormal_frame(vectors: Sequence, tol: float = 1e-10) -> list[np.ndarray]:
    """Gram-Schmidt with one re-orthogonalization pass per vector."""
    out: list[np.ndarray] = []
    for raw in vectors:
        v = np.asarray(raw, dtype=complex).ravel().copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            raise RankDeficient("zero vector in frame")
        for _ in range(2):
            for q in out:
                v -= (q.conj() @ v) * q
        nv = np.linalg.norm(v)
        if nv <= tol * norm0:
            raise RankDeficient(f"vector {len(out)} is dependent (residual {nv / norm0:.2e})")
        out.append(v / nv)
    return out


def frame_matrix(frame) -> np.ndarray:
    """Stack a list of column vectors (or pass through a 2-D array)."""
    if isinstance(frame, np.ndarray) and frame.ndim == 2:
        return frame.astype(complex)
    if len(frame) == 0:
        raise ValueError("empty frame has no dimension; pass a (d, 0) array instead")
    return np.column_stack([np.asarray(v, dtype=complex) for v in frame])


def projector(frame) -> np.ndarray:
    """Orthogonal projector onto the span of an orthonormal frame."""
    f = frame_matrix(frame)
    return f @ f.conj().T


def projector_distance(frame_a, frame_b) -> float:
    """Spectral-norm distance between the orthogonal projectors of two frames."""
    return float(np.linalg.norm(projector(frame_a) - projector(frame_b), 2))


def span_frame(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the column space of ``m``."""
    m = as_complex_matrix(m)
    if m.shape[1] == 0:
        return np.zeros((m.shape[0], 0), complex)
    u, sv, _ = np.linalg.svd(m, full_matrices=False)
    rank = int((sv > tol * max(sv.max(), 1.0)).sum())
    return u[:, :rank]


def null_frame(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of ker m."""
    m = as_complex_matrix(m)
    _, sv, vh = np.linalg.svd(m)
    rank = int((sv > tol * max(sv.max(initial=0.0), 1.0)).sum())
    return vh[rank:].conj().T
