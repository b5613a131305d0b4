"""Scenario files (JSON, schema version 1).

Example::

    {
      "schema_version": 1,
      "name": "winding-default",
      "family": {"builtin": "winding", "mass": 1.0, "k_theta": 1, "k_s": 1},
      "grid": "16x16",
      "lattice": "32x32",
      "window": 1.0,
      "n_params": 40,
      "seed": 0
    }

``family`` is one of

* ``{"builtin": "winding" | "dir-plus" | "dir-minus" | "locally-constant", ...}``
* ``{"realize": {"t0": P, "t1": P}}`` with P either ``{"model": "empty"}``,
  ``{"model": "full"}`` or ``{"model": "lower-band", "mass": .., "k_theta": .., "k_s": ..}``
* ``{"inline": {"t0": F, "t1": F}}`` with F = ``{"n_theta": a, "n_s": b,
  "real": [...], "imag": [...]}`` holding T on an a x b lattice as nested
  a x b x 2 x 2 lists.  T between lattice points is the trigonometric
  interpolant, so the field is band-limited by construction.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import topology as tp
from .errors import InvalidScenario, ZeroEigenvalue
from .spectral import DEFAULT_WINDOW, CylinderGrid
from .symbols import cylinder_boundary_sample

SCHEMA_VERSION = 1
BUILTINS = ("winding", "dir-plus", "dir-minus", "locally-constant")
COMPONENTS = ("t0", "t1")
# d vanishes somewhere on the torus exactly for these masses
_CRITICAL_MASSES = (-2.0, 0.0, 2.0)

DEFAULTS: dict[str, Any] = {
    "grid": "16x16",
    "lattice": "32x32",
    "window": DEFAULT_WINDOW,
    "n_params": 40,
    "seed": 0,
}


@dataclass
class Scenario:
    name: str
    family: dict
    grid: CylinderGrid
    lattice: tuple[int, int]
    window: float = DEFAULT_WINDOW
    n_params: int = 40
    seed: int = 0
    raw: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "family": self.family,
            "grid": self.grid.label(),
            "lattice": f"{self.lattice[0]}x{self.lattice[1]}",
            "window": self.window,
            "n_params": self.n_params,
            "seed": self.seed,
        }

    def content_hash(self, extra: str = "") -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")) + extra
        return hashlib.sha256(blob.encode()).hexdigest()

    def build(self) -> tp.LoopFamilySpec:
        return build_family(self.family)

    @property
    def constant_t(self) -> bool:
        return self.family.get("builtin") in ("dir-plus", "dir-minus")


def _parse_pair(value, what: str) -> tuple[int, int]:
    try:
        if isinstance(value, str):
            a, b = value.lower().split("x")
            out = int(a), int(b)
        elif isinstance(value, dict):
            keys = ("n_t", "n_theta") if what == "grid" else ("n_theta", "n_s")
            out = int(value[keys[0]]), int(value[keys[1]])
        else:
            out = int(value[0]), int(value[1])
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise InvalidScenario(f"cannot parse {what} {value!r}") from exc
    if min(out) < 4 or max(out) > 512:
        raise InvalidScenario(f"{what} {value!r} out of range [4, 512]")
    return out


def from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise InvalidScenario("scenario must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidScenario(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    unknown = set(data) - {"schema_version", "name", "family", "grid", "lattice", "window", "n_params", "seed"}
    if unknown:
        raise InvalidScenario(f"unknown keys {sorted(unknown)}")
    if "family" not in data:
        raise InvalidScenario("scenario needs a family")
    merged = {**DEFAULTS, **data}
    nt, nth = _parse_pair(merged["grid"], "grid")
    lat = _parse_pair(merged["lattice"], "lattice")
    try:
        window = float(merged["window"])
        n_params = int(merged["n_params"])
        seed = int(merged["seed"])
    except (TypeError, ValueError) as exc:
        raise InvalidScenario(str(exc)) from exc
    if not (window > 0 and math.isfinite(window)):
        raise InvalidScenario("window must be positive")
    if not 4 <= n_params <= 4096:
        raise InvalidScenario("n_params must lie in [4, 4096]")
    if not 0 <= seed < 2 ** 64:
        raise InvalidScenario("seed must be an unsigned 64-bit integer")
    sc = Scenario(str(data.get("name", "scenario")), data["family"], CylinderGrid(nt, nth), lat,
                  window, n_params, seed, data)
    spec = sc.build()  # validates the family eagerly
    try:
        spec.validate(2 * lat[0], 2 * lat[1])
    except (ValueError, ZeroEigenvalue) as exc:
        raise InvalidScenario(f"family fails validation: {exc}") from exc
    return sc


def builtin_scenario(name: str, **family_args) -> Scenario:
    if name not in BUILTINS:
        raise InvalidScenario(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    return from_dict({"schema_version": SCHEMA_VERSION, "name": name,
                      "family": {"builtin": name, **family_args}})


def load(ref: str) -> Scenario:
    """A path to a scenario file, or the name of a builtin family."""
    path = Path(ref)
    if path.is_file():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidScenario(f"{ref}: {exc}") from exc
        return from_dict(data)
    if ref in BUILTINS:
        return builtin_scenario(ref)
    raise InvalidScenario(f"no scenario file or builtin named {ref!r}")


# ---------------------------------------------------------------- family construction

def _int_in(d: dict, key: str, default: int, lo: int, hi: int) -> int:
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or not lo <= v <= hi:
        raise InvalidScenario(f"{key} must be an integer in [{lo}, {hi}], got {v!r}")
    return v


def _mass(d: dict) -> float:
    m = d.get("mass", 1.0)
    if not isinstance(m, (int, float)) or isinstance(m, bool) or not math.isfinite(m):
        raise InvalidScenario(f"mass must be a finite number, got {m!r}")
    if any(abs(m - c) < 1e-6 for c in _CRITICAL_MASSES):
        raise InvalidScenario(f"mass {m} closes the gap of the d-model")
    return float(m)


def build_family(fam: dict) -> tp.LoopFamilySpec:
    if not isinstance(fam, dict) or len(fam) == 0:
        raise InvalidScenario("family must be a non-empty object")
    if "builtin" in fam:
        name = fam["builtin"]
        allowed = {"winding": {"builtin", "mass", "k_theta", "k_s"},
                   "locally-constant": {"builtin", "k_theta"}}.get(name, {"builtin"})
        if name not in BUILTINS:
            raise InvalidScenario(f"unknown builtin {name!r}")
        if set(fam) - allowed:
            raise InvalidScenario(f"unexpected parameters {sorted(set(fam) - allowed)} for {name}")
        if name == "winding":
            return tp.winding_family(_mass(fam), _int_in(fam, "k_theta", 1, 1, 4), _int_in(fam, "k_s", 1, 1, 4))
        if name == "dir-plus":
            return tp.dirichlet_family(+1)
        if name == "dir-minus":
            return tp.dirichlet_family(-1)
        return tp.locally_constant_family(_int_in(fam, "k_theta", 1, 1, 4))
    if "realize" in fam:
        pres = fam["realize"]
        if not isinstance(pres, dict) or set(pres) != set(COMPONENTS):
            raise InvalidScenario("realize needs prescriptions for t0 and t1")
        return tp.realize_family([_prescription(pres[c]) for c in COMPONENTS], rank=2, name="realized")
    if "inline" in fam:
        data = fam["inline"]
        if not isinstance(data, dict) or set(data) != set(COMPONENTS):
            raise InvalidScenario("inline needs T data for t0 and t1")
        comps = [tp.BoundaryComponent(c, cylinder_boundary_sample(c, 2), _inline_field(data[c]),
                                      tp.ORIENTATION[c]) for c in COMPONENTS]
        return tp.LoopFamilySpec(comps, 2, "inline")
    raise InvalidScenario("family needs one of builtin, realize, inline")


def _prescription(p) -> Callable:
    if not isinstance(p, dict) or "model" not in p:
        raise InvalidScenario("prescription must name a model")
    model = p["model"]
    if model == "empty":
        return lambda theta, s: np.zeros((2, 0), dtype=complex)
    if model == "full":
        return lambda theta, s: np.eye(2, dtype=complex)
    if model == "lower-band":
        mass, kt, ks = _mass(p), _int_in(p, "k_theta", 1, 1, 4), _int_in(p, "k_s", 1, 1, 4)
        return lambda theta, s: tp.lower_band_frame(theta, s, mass, kt, ks)
    raise InvalidScenario(f"unknown prescription model {model!r}")


def _inline_field(d) -> Callable:
    try:
        a, b = int(d["n_theta"]), int(d["n_s"])
        vals = np.asarray(d["real"], dtype=float) + 1j * np.asarray(d["imag"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"malformed inline field: {exc}") from exc
    if vals.shape != (a, b, 2, 2):
        raise InvalidScenario(f"inline T has shape {vals.shape}, expected {(a, b, 2, 2)}")
    if not np.all(np.isfinite(vals)):
        raise InvalidScenario("inline T has non-finite entries")
    if np.abs(vals - np.conj(np.swapaxes(vals, -1, -2))).max() > 1e-10:
        raise InvalidScenario("inline T is not self-adjoint")
    coef = np.fft.fft2(vals, axes=(0, 1)) / (a * b)
    ka = np.fft.fftfreq(a, 1.0 / a)
    kb = np.fft.fftfreq(b, 1.0 / b)
    # split Nyquist coefficients symmetrically so the interpolant stays real-analytic and Hermitian
    wa = np.where(np.abs(ka) == a / 2, 0.5, 1.0)
    wb = np.where(np.abs(kb) == b / 2, 0.5, 1.0)

    def T(theta, s):
        ea = wa * np.exp(1j * ka * theta)
        eb = wb * np.exp(1j * kb * s)
        if a % 2 == 0:
            ea = ea + np.where(np.abs(ka) == a / 2, wa * np.exp(-1j * ka * theta), 0)
        if b % 2 == 0:
            eb = eb + np.where(np.abs(kb) == b / 2, wb * np.exp(-1j * kb * s), 0)
        out = np.einsum("i,j,ijkl->kl", ea, eb, coef)
        return 0.5 * (out + out.conj().T)

    return T
