"""Topological side: the subbundle field F over each boundary torus
(theta, s) and its lattice Chern number.

Chern numbers use gauge-invariant plaquette products of normalized link
determinants, so the raw flux sum is an integer multiple of 2 pi up to
rounding.  Each component carries an orientation sign, see
``ORIENTATION``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import numpy as np

from . import linalg
from .boundary import f_subspace, realize_t
from .errors import GridTooCoarse, RankJump, RankTooLarge, ZeroEigenvalue, NotInvertible
from .symbols import BoundarySymbolSample, cylinder_boundary_sample

LINK_FLOOR = 0.1
RESIDUE_TOL = 1e-6
RESIDUE_FAIL = 1e-3
T_INVERTIBLE_TOL = 1e-8

# Lattice index order runs theta upward on both circles.  On t = 1 that is
# the induced boundary orientation; on t = 0 it is the reverse, hence the
# relative minus.  The overall sign was pinned once against the spectral
# flow of the canonical winding family and is frozen here.
ORIENTATION: Dict[str, int] = {"t1": -1, "t0": +1}

AutomorphismField = Callable[[float, float], np.ndarray]  # (theta, s) -> T


@dataclass
class BoundaryComponent:
    name: str
    sample: BoundarySymbolSample
    T: AutomorphismField
    orientation: int = 1

    @property
    def m(self) -> int:
        return self.sample.m


@dataclass
class LoopFamilySpec:
    """A loop s in [0, 2 pi) of boundary conditions for the built-in
    operator.  ``T`` fields take (theta, s) in radians and return m x m
    self-adjoint invertible matrices."""

    components: List[BoundaryComponent]
    rank: int = 2
    name: str = "family"
    metadata: dict = field(default_factory=dict)

    def component(self, name: str) -> BoundaryComponent:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def sample_T(self, name: str, n_theta: int, n_s: int) -> np.ndarray:
        comp = self.component(name)
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        ss = 2 * np.pi * np.arange(n_s) / n_s
        out = np.empty((n_theta, n_s, comp.m, comp.m), dtype=complex)
        for i, t in enumerate(th):
            for j, s in enumerate(ss):
                out[i, j] = comp.T(t, s)
        return out

    def validate(self, n_theta: int = 16, n_s: int = 16, tol: float = T_INVERTIBLE_TOL):
        for comp in self.components:
            vals = self.sample_T(comp.name, n_theta, n_s)
            if np.abs(vals - np.conj(np.swapaxes(vals, -1, -2))).max() > 1e-10:
                raise ValueError(f"T on {comp.name} is not self-adjoint")
            w = np.linalg.eigvalsh(vals)
            if np.abs(w).min() <= tol:
                raise ZeroEigenvalue(f"T on {comp.name} is not invertible on the lattice")

    def direct_sum(self, other: "LoopFamilySpec") -> "LoopFamilySpec":
        """Blockwise sum.  The operator rank adds; T fields are block diagonal."""
        comps = []
        for a in self.components:
            b = other.component(a.name)

            def T(th, s, fa=a.T, fb=b.T):
                x, y = fa(th, s), fb(th, s)
                out = np.zeros((x.shape[0] + y.shape[0],) * 2, dtype=complex)
                out[: x.shape[0], : x.shape[0]] = x
                out[x.shape[0]:, x.shape[0]:] = y
                return out

            comps.append(BoundaryComponent(a.name, cylinder_boundary_sample(a.name, self.rank + other.rank),
                                           T, a.orientation))
        return LoopFamilySpec(comps, self.rank + other.rank, f"{self.name}+{other.name}")


@dataclass
class TorusSubbundleField:
    n_theta: int
    n_s: int
    frames: np.ndarray          # (n_theta, n_s, m, r)
    component_id: str
    orientation: int = 1

    @property
    def rank(self) -> int:
        return self.frames.shape[-1]

    @property
    def m(self) -> int:
        return self.frames.shape[-2]

    def gauge_transform(self, gauges: np.ndarray) -> "TorusSubbundleField":
        """Right-multiply every node frame by an r x r unitary."""
        return TorusSubbundleField(self.n_theta, self.n_s, self.frames @ gauges,
                                   self.component_id, self.orientation)


def build_f_field(spec: LoopFamilySpec, n_theta: int, n_s: int) -> List[TorusSubbundleField]:
    fields = []
    for comp in spec.components:
        vals = spec.sample_T(comp.name, n_theta, n_s)
        rank = None
        frames = None
        for i in range(n_theta):
            for j in range(n_s):
                try:
                    f = f_subspace(vals[i, j])
                except NotInvertible as exc:
                    raise ZeroEigenvalue(f"{comp.name} node ({i}, {j}): {exc}") from exc
                if rank is None:
                    rank = f.shape[1]
                    frames = np.zeros((n_theta, n_s, comp.m, rank), dtype=complex)
                elif f.shape[1] != rank:
                    raise RankJump(f"{comp.name}: rank {f.shape[1]} at node ({i}, {j}), expected {rank}")
                frames[i, j] = f
        fields.append(TorusSubbundleField(n_theta, n_s, frames, comp.name, comp.orientation))
    return fields


def link_variables(fld: TorusSubbundleField) -> tuple[np.ndarray, np.ndarray]:
    """Normalized det(F(k)* F(k + e_mu)) in the theta and s directions."""
    f = fld.frames
    fh = np.conj(np.swapaxes(f, -1, -2))
    ov_t = fh @ np.roll(f, -1, axis=0)
    ov_s = fh @ np.roll(f, -1, axis=1)
    det_t = np.linalg.det(ov_t)
    det_s = np.linalg.det(ov_s)
    weakest = min(np.abs(det_t).min(), np.abs(det_s).min())
    if weakest <= LINK_FLOOR:
        raise GridTooCoarse(f"link determinant {weakest:.3f} below floor {LINK_FLOOR}")
    return det_t / np.abs(det_t), det_s / np.abs(det_s)


def plaquette_flux(fld: TorusSubbundleField) -> np.ndarray:
    """Flux through each plaquette in (-pi, pi], shape (n_theta, n_s)."""
    if fld.rank == 0:
        return np.zeros((fld.n_theta, fld.n_s))
    u_t, u_s = link_variables(fld)
    loop = u_t * np.roll(u_s, -1, axis=0) / (np.roll(u_t, -1, axis=1) * u_s)
    return np.angle(loop)


@dataclass(frozen=True)
class ChernResult:
    value: int          # orientation applied
    raw: int            # lattice-order value, before orientation
    residue: float


def chern_detail(fld: TorusSubbundleField) -> ChernResult:
    flux = plaquette_flux(fld)
    # fixed-order summation keeps the result bit-reproducible
    total = float(np.sum(flux.ravel(order="C"))) / (2 * np.pi)
    n = int(round(total))
    residue = abs(total - n)
    if residue > RESIDUE_FAIL:
        raise GridTooCoarse(f"flux sum residue {residue:.2e}")
    if residue > RESIDUE_TOL:  # pragma: no cover - would indicate an arithmetic bug
        raise ArithmeticError(f"plaquette sum not integral (residue {residue:.2e})")
    return ChernResult(n * fld.orientation, n, residue)


def chern_number(fld: TorusSubbundleField) -> int:
    return chern_detail(fld).value


@dataclass(frozen=True)
class TopologicalIndex:
    total: int
    per_component: Dict[str, int]


def topological_index_detail(spec: LoopFamilySpec, n_theta: int = 32, n_s: int = 32) -> TopologicalIndex:
    per = {f.component_id: chern_number(f) for f in build_f_field(spec, n_theta, n_s)}
    return TopologicalIndex(sum(per.values()), per)


def topological_index(spec: LoopFamilySpec, n_theta: int = 32, n_s: int = 32) -> int:
    return topological_index_detail(spec, n_theta, n_s).total


def flux_rows(spec: LoopFamilySpec, n_theta: int, n_s: int) -> list[tuple]:
    """(component, i, j, flux) rows for the CSV export."""
    rows = []
    for fld in build_f_field(spec, n_theta, n_s):
        flux = plaquette_flux(fld)
        for i in range(fld.n_theta):
            for j in range(fld.n_s):
                rows.append((fld.component_id, i, j, float(flux[i, j])))
    return rows


# ---------------------------------------------------------------- constructions

FrameFunction = Callable[[float, float], np.ndarray]  # (theta, s) -> (m, r) frame


def _projector_interpolant(fld: TorusSubbundleField) -> FrameFunction:
    """Continuous extension of a lattice field: bilinear interpolation of the
    projectors, then the spectral projector onto eigenvalues above 1/2."""
    P = fld.frames @ np.conj(np.swapaxes(fld.frames, -1, -2))
    r = fld.rank

    def frame(theta, s):
        x = (theta / (2 * np.pi)) * fld.n_theta
        y = (s / (2 * np.pi)) * fld.n_s
        i0, j0 = int(np.floor(x)), int(np.floor(y))
        fx, fy = x - i0, y - j0
        i0 %= fld.n_theta
        j0 %= fld.n_s
        i1, j1 = (i0 + 1) % fld.n_theta, (j0 + 1) % fld.n_s
        p = ((1 - fx) * (1 - fy) * P[i0, j0] + fx * (1 - fy) * P[i1, j0]
             + (1 - fx) * fy * P[i0, j1] + fx * fy * P[i1, j1])
        w, v = np.linalg.eigh(p)
        return v[:, w.size - r:] if r else v[:, :0]

    return frame


def realize_family(prescribed: Sequence, rank: int = 2, name: str = "realized",
                   components: Sequence[str] = ("t0", "t1")) -> LoopFamilySpec:
    """Odd Dirac family whose F field is the prescribed one on each component.

    ``prescribed`` holds, per component, a TorusSubbundleField or a callable
    (theta, s) -> frame.  T = I - 2 F F*.
    """
    if len(prescribed) != len(components):
        raise ValueError("one prescription per boundary component")
    comps = []
    for cname, pres in zip(components, prescribed):
        if isinstance(pres, TorusSubbundleField):
            if pres.m != rank:
                raise ValueError(f"prescribed frames live in C^{pres.m}, operator needs C^{rank}")
            if pres.rank > rank:
                raise RankTooLarge(f"rank {pres.rank} exceeds {rank}")
            frame_fn = _projector_interpolant(pres)
        else:
            frame_fn = pres
            probe = np.asarray(frame_fn(0.0, 0.0))
            if probe.reshape(rank, -1).shape[1] > rank:
                raise RankTooLarge(f"rank exceeds {rank}")

        def T(theta, s, fn=frame_fn):
            return realize_t(fn(theta, s), rank)

        comps.append(BoundaryComponent(cname, cylinder_boundary_sample(cname, rank), T, ORIENTATION[cname]))
    return LoopFamilySpec(comps, rank, name)


# ---------------------------------------------------------------- d-vector model

def d_vector(theta, s, mass: float = 1.0, k_theta: int = 1, k_s: int = 1) -> np.ndarray:
    return np.array([
        np.sin(k_theta * theta),
        np.sin(k_s * s),
        mass + np.cos(k_theta * theta) + np.cos(k_s * s),
    ])


def d_hamiltonian(theta, s, mass: float = 1.0, k_theta: int = 1, k_s: int = 1) -> np.ndarray:
    from .symbols import PAULI_X, PAULI_Y, PAULI_Z

    d = d_vector(theta, s, mass, k_theta, k_s)
    nd = np.linalg.norm(d)
    if nd < 1e-12:
        raise ZeroEigenvalue(f"d vanishes at theta={theta}, s={s}")
    d = d / nd
    return d[0] * PAULI_X + d[1] * PAULI_Y + d[2] * PAULI_Z


def lower_band_frame(theta, s, mass: float = 1.0, k_theta: int = 1, k_s: int = 1) -> np.ndarray:
    w, v = np.linalg.eigh(d_hamiltonian(theta, s, mass, k_theta, k_s))
    return v[:, :1]


def d_model_field(n_theta: int, n_s: int, mass: float = 1.0, k_theta: int = 1, k_s: int = 1,
                  component_id: str = "model", orientation: int = 1) -> TorusSubbundleField:
    frames = np.zeros((n_theta, n_s, 2, 1), dtype=complex)
    for i in range(n_theta):
        for j in range(n_s):
            frames[i, j] = lower_band_frame(2 * np.pi * i / n_theta, 2 * np.pi * j / n_s,
                                            mass, k_theta, k_s)
    return TorusSubbundleField(n_theta, n_s, frames, component_id, orientation)


# ---------------------------------------------------------------- builtins

def _const(mat):
    mat = np.asarray(mat, dtype=complex)
    return lambda theta, s: mat


def winding_family(mass: float = 1.0, k_theta: int = 1, k_s: int = 1, rank: int = 2) -> LoopFamilySpec:
    """T = d_hat . sigma on t = 1, T = +I on t = 0."""
    if rank != 2:
        raise ValueError("the winding family is defined for rank-2 blocks")

    def T1(theta, s):
        return d_hamiltonian(theta, s, mass, k_theta, k_s)

    comps = [
        BoundaryComponent("t0", cylinder_boundary_sample("t0", rank), _const(np.eye(rank)), ORIENTATION["t0"]),
        BoundaryComponent("t1", cylinder_boundary_sample("t1", rank), T1, ORIENTATION["t1"]),
    ]
    return LoopFamilySpec(comps, rank, f"winding(m={mass},k=({k_theta},{k_s}))",
                          {"mass": mass, "k_theta": k_theta, "k_s": k_s})


def dirichlet_family(sign: int, rank: int = 2) -> LoopFamilySpec:
    """Constant T = +I or -I on both components."""
    mat = sign * np.eye(rank)
    comps = [BoundaryComponent(c, cylinder_boundary_sample(c, rank), _const(mat), ORIENTATION[c])
             for c in ("t0", "t1")]
    return LoopFamilySpec(comps, rank, "dir-plus" if sign > 0 else "dir-minus")


def locally_constant_family(k_theta: int = 1, rank: int = 2) -> LoopFamilySpec:
    """s-independent T that winds in theta on t = 1."""
    from .symbols import PAULI_X, PAULI_Z

    def T1(theta, s):
        return np.cos(k_theta * theta) * PAULI_Z + np.sin(k_theta * theta) * PAULI_X

    comps = [
        BoundaryComponent("t0", cylinder_boundary_sample("t0", rank), _const(np.eye(rank)), ORIENTATION["t0"]),
        BoundaryComponent("t1", cylinder_boundary_sample("t1", rank), T1, ORIENTATION["t1"]),
    ]
    return LoopFamilySpec(comps, rank, "locally-constant", {"k_theta": k_theta})


def swept_family(k_theta: int, k_s: int, mass: float = 1.0) -> LoopFamilySpec:
    """Winding family with frequencies (k_theta, k_s), built through
    ``realize_family`` from the prescribed lower-band field."""
    empty = lambda theta, s: np.zeros((2, 0), dtype=complex)  # noqa: E731

    def band(theta, s):
        return lower_band_frame(theta, s, mass, k_theta, k_s)

    fam = realize_family([empty, band], rank=2, name=f"swept({k_theta},{k_s})")
    fam.metadata.update({"mass": mass, "k_theta": k_theta, "k_s": k_s})
    return fam
