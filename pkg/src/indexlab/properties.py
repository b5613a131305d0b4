"""Seeded randomized invariant suites (the ``properties`` CLI verb).

Every suite takes a ``numpy.random.Generator`` and returns a SuiteResult;
nothing here depends on wall-clock time or global state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from . import boundary as bd
from . import ktheory as kt
from . import linalg
from . import spectral as sp
from . import topology as tp
from .symbols import BoundarySymbolSample, check_lagrangian, cylinder_boundary_sample, split


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: List[str] = field(default_factory=list)
    worst: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"name": self.name, "cases": self.cases, "passed": self.passed,
                "worst": self.worst, "failures": self.failures[:10]}


# ---------------------------------------------------------------- generators

def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_elliptic_sample(rng: np.random.Generator, m: int = 2) -> BoundarySymbolSample:
    """Congruence g* sigma g of the cylinder sample; ellipticity survives
    because sigma(xi) stays invertible for xi != 0."""
    base = cylinder_boundary_sample("t1", m)
    g = rng.standard_normal((2 * m, 2 * m)) + 1j * rng.standard_normal((2 * m, 2 * m))
    g += 2 * np.eye(2 * m)
    gh = g.conj().T
    return BoundarySymbolSample(gh @ base.sigma_n @ g, gh @ base.sigma_tau @ g)


def random_self_adjoint_invertible(rng: np.random.Generator, m: int, margin: float = 0.2) -> np.ndarray:
    u = random_unitary(rng, m)
    w = rng.uniform(margin, 2.0, size=m) * rng.choice([-1.0, 1.0], size=m)
    return u @ np.diag(w) @ u.conj().T


def random_non_self_adjoint(rng: np.random.Generator, m: int) -> np.ndarray:
    t = random_self_adjoint_invertible(rng, m)
    k = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return t + 0.5 * (k - k.conj().T)


# ---------------------------------------------------------------- suites

def suite_round_trip(rng: np.random.Generator, n: int = 200, m: int = 2) -> SuiteResult:
    res = SuiteResult("l_to_t o t_to_l round trip")
    for i in range(n):
        sample = random_elliptic_sample(rng, m)
        spl = split(sample)
        T = random_self_adjoint_invertible(rng, m)
        L = bd.t_to_l(sample, spl, T)
        T2 = bd.l_to_t(sample, spl, L)
        d = linalg.projector_distance(L.frame, bd.t_to_l(sample, spl, T2).frame)
        res.worst = max(res.worst, d)
        res.cases += 1
        if d > 1e-8:
            res.failures.append(f"case {i}: projector distance {d:.2e}")
    return res


def suite_lagrangian_iff_self_adjoint(rng: np.random.Generator, n: int = 200, m: int = 2) -> SuiteResult:
    res = SuiteResult("Lagrangian iff self-adjoint")
    for i in range(n):
        sample = random_elliptic_sample(rng, m)
        spl = split(sample)
        sa = bool(rng.integers(2))
        T = random_self_adjoint_invertible(rng, m) if sa else random_non_self_adjoint(rng, m)
        L = bd.t_to_l(sample, spl, T)
        res.cases += 1
        if check_lagrangian(sample.sigma_n, L.frame) != sa:
            res.failures.append(f"case {i}: self_adjoint={sa} but Lagrangian={not sa}")
    return res


def suite_green(rng: np.random.Generator, n: int = 20, grid: sp.CylinderGrid | None = None) -> SuiteResult:
    res = SuiteResult("discrete Green identity")
    op = sp.CylinderOperator(grid or sp.CylinderGrid(8, 8), 2)
    scale = np.linalg.norm(op.A, 2) if op.dim_full <= 600 else linalg.norm_estimate(op.A)
    for i in range(n):
        u = rng.standard_normal(op.dim_full) + 1j * rng.standard_normal(op.dim_full)
        v = rng.standard_normal(op.dim_full) + 1j * rng.standard_normal(op.dim_full)
        nrm = np.sqrt(np.sum(op.weights * abs(u) ** 2) * np.sum(op.weights * abs(v) ** 2))
        d = abs(sp.green_defect(op, u, v)) / (scale * nrm)
        res.worst = max(res.worst, d)
        res.cases += 1
        if d > 1e-12:
            res.failures.append(f"pair {i}: relative defect {d:.2e}")
    return res


def suite_additivity(rng: np.random.Generator, n: int = 10) -> SuiteResult:
    res = SuiteResult("spectral flow additivity on toy loops")
    for i in range(n):
        f, ef = sp.random_toy_family(int(rng.integers(2 ** 32)))
        g, eg = sp.random_toy_family(int(rng.integers(2 ** 32)))
        a, b = sp.spectral_flow(f), sp.spectral_flow(g)
        ab = sp.spectral_flow(sp.direct_sum(f, g))
        res.cases += 1
        if (a, b) != (ef, eg) or ab != a + b:
            res.failures.append(f"pair {i}: sf(f)={a} sf(g)={b} sf(f+g)={ab} expected {ef}+{eg}")
    return res


def suite_conjugation(rng: np.random.Generator, n: int = 5) -> SuiteResult:
    res = SuiteResult("conjugation invariance on toy loops")
    for i in range(n):
        f, e = sp.random_toy_family(int(rng.integers(2 ** 32)))
        g = sp.conjugated(f, random_unitary(rng, f.dim))
        a, b = sp.spectral_flow(f), sp.spectral_flow(g)
        res.cases += 1
        if a != b:
            res.failures.append(f"case {i}: {a} vs {b}")
    return res


def suite_gauge(rng: np.random.Generator, n: int = 5) -> SuiteResult:
    res = SuiteResult("Chern number gauge invariance")
    for i in range(n):
        mass = float(rng.choice([-1.0, 1.0, 3.0]))
        fld = tp.d_model_field(16, 16, mass)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(16, 16, 1, 1)))
        a = tp.chern_detail(fld)
        b = tp.chern_detail(fld.gauge_transform(phases))
        res.cases += 1
        if a.raw != b.raw:
            res.failures.append(f"mass {mass}: {a.raw} vs {b.raw}")
    return res


def suite_ring_map(rng: np.random.Generator, n: int = 10, nvars: int = 3) -> SuiteResult:
    res = SuiteResult("coinvariant reduction is multiplicative")
    for i in range(n):
        p = _random_poly(rng, nvars)
        q = _random_poly(rng, nvars)
        lhs = kt.reduce_mod_jn(p * q, nvars)
        rhs = kt.reduce_mod_jn(kt.reduce_mod_jn(p, nvars).lift() * kt.reduce_mod_jn(q, nvars).lift(), nvars)
        res.cases += 1
        if lhs != rhs:
            res.failures.append(f"case {i}")
    return res


def _random_poly(rng: np.random.Generator, nvars: int, terms: int = 4, deg: int = 3) -> kt.IntPoly:
    d: Dict[tuple, int] = {}
    for _ in range(terms):
        e = tuple(int(x) for x in rng.integers(0, deg + 1, size=nvars))
        d[e] = d.get(e, 0) + int(rng.integers(-5, 6))
    return kt.IntPoly(nvars, d)


SUITES: Dict[str, Callable[[np.random.Generator], SuiteResult]] = {
    "round_trip": suite_round_trip,
    "lagrangian": suite_lagrangian_iff_self_adjoint,
    "green": suite_green,
    "additivity": suite_additivity,
    "conjugation": suite_conjugation,
    "gauge": suite_gauge,
    "ring_map": suite_ring_map,
}


def run_all(seed: int, only: List[str] | None = None) -> dict:
    out = {}
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, sum(map(ord, name))])
        out[name] = fn(rng).to_json()
    return {"seed": seed, "suites": out, "all_passed": all(s["passed"] for s in out.values())}
