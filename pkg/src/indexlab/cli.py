"""Command line entry point: ``indexlab <verb> [options]``.

Exit codes: 0 success / match, 2 mismatch or failed check, 3 invalid input,
4 numerical failure, 5 internal error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from . import ktheory as kt
from . import properties
from . import reports
from . import scenario as scn
from . import spectral as sp
from . import topology as tp
from .errors import IndexLabError, InvalidInput, MissingData, NumericalFailure

log = logging.getLogger("indexlab")

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_NUMERICAL, EXIT_INTERNAL = 0, 2, 3, 4, 5

EIGEN_CSV = "eigenvalues.csv"
FLUX_CSV = "flux.csv"
RECORD = "record.json"


# ---------------------------------------------------------------- cache

def cache_dir() -> Path:
    env = os.environ.get("INDEXLAB_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "indexlab"


class RunCache:
    """Hash-addressed store of immutable run directories.

    Entries are written to a temporary directory and renamed into place, so
    a reader never sees a partial record and an existing record is never
    overwritten.
    """

    def __init__(self, root: Path, enabled: bool = True):
        self.root = root
        self.enabled = enabled

    def get(self, key: str) -> dict[str, str] | None:
        if not self.enabled:
            return None
        d = self.root / key
        if not (d / RECORD).is_file():
            return None
        return {p.name: p.read_text() for p in sorted(d.iterdir()) if p.is_file()}

    def put(self, key: str, files: dict[str, str]) -> None:
        if not self.enabled:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        final = self.root / key
        if final.exists():
            return
        tmp = Path(tempfile.mkdtemp(prefix=f".{key[:12]}-", dir=self.root))
        for name, text in files.items():
            (tmp / name).write_text(text)
        try:
            os.rename(tmp, final)
        except OSError:  # another writer won the race; keep theirs
            for p in tmp.iterdir():
                p.unlink()
            tmp.rmdir()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------- computations

def _overrides(sc: scn.Scenario, args) -> scn.Scenario:
    data = sc.canonical()
    if getattr(args, "grid", None):
        data["grid"] = args.grid
    if getattr(args, "lattice", None):
        data["lattice"] = args.lattice
    if getattr(args, "window", None) is not None:
        data["window"] = args.window
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    return scn.from_dict(data)


def _flow_block(sc: scn.Scenario, spec, with_cayley: bool = True):
    fam = sp.DiscreteFamily(spec, sc.grid, n_params=sc.n_params, window=sc.window)
    res = sp.spectral_flow_detail(fam)
    block = {
        "spectral_flow": res.value,
        "window_total": res.window_total,
        "whole_spectrum": res.whole_spectrum,
        "n_samples": res.n_samples,
        "crossings": [
            {"s": round(2 * math.pi * c.u1 % (2 * math.pi), 6), "direction": c.direction,
             "multiplicity": c.multiplicity, "resolved": c.resolved}
            for c in res.crossings
        ],
        "window": sc.window,
        "grid": sc.grid.label(),
    }
    if with_cayley:
        block["cayley_flow"] = sp.cayley_flow_detail(fam).value
    block["defect_max"] = fam.defect_max
    return fam, res, block


def _chern_block(sc: scn.Scenario, spec):
    ti = tp.topological_index_detail(spec, *sc.lattice)
    rows = tp.flux_rows(spec, *sc.lattice)
    return {"total": ti.total, "per_component": dict(sorted(ti.per_component.items())),
            "lattice": f"{sc.lattice[0]}x{sc.lattice[1]}"}, reports.flux_csv(rows)


def compute_verify(sc: scn.Scenario, ladder: Sequence[str] = ()) -> dict[str, str]:
    spec = sc.build()
    ind_t, flux_text = _chern_block(sc, spec)
    fam, res, flow = _flow_block(sc, spec)
    gap = sp.gap_probe(spec, sc.grid) if sc.constant_t else None
    rungs = []
    for g in ladder:
        grid = sp.CylinderGrid.parse(g)
        f2 = sp.DiscreteFamily(spec, grid, n_params=sc.n_params, window=sc.window)
        rungs.append({"grid": grid.label(), "spectral_flow": sp.spectral_flow(f2)})
    match = ind_t["total"] == flow["spectral_flow"] == flow["cayley_flow"]
    record = {
        "tool_version": __version__,
        "verb": "verify",
        "scenario": sc.canonical(),
        "scenario_hash": sc.content_hash(),
        "ind_t": ind_t,
        "ind_a": flow["spectral_flow"],
        "cayley_flow": flow["cayley_flow"],
        "flow": flow,
        "gap": gap,
        "defect_max": fam.defect_max,
        "ladder": rungs,
        "status": "MATCH" if match else "MISMATCH",
        "created": _now(),
    }
    return {RECORD: reports.dumps(record), EIGEN_CSV: reports.eigen_csv(res.eigen_rows), FLUX_CSV: flux_text}


def compute_sf(sc: scn.Scenario) -> dict[str, str]:
    spec = sc.build()
    fam, res, flow = _flow_block(sc, spec)
    summary = {k: flow[k] for k in ("spectral_flow", "cayley_flow", "window", "grid", "defect_max")}
    record = {"tool_version": __version__, "verb": "sf", "scenario": sc.canonical(),
              "scenario_hash": sc.content_hash(), "summary": summary, "flow": flow, "created": _now()}
    return {RECORD: reports.dumps(record), EIGEN_CSV: reports.eigen_csv(res.eigen_rows)}


def compute_chern(sc: scn.Scenario) -> dict[str, str]:
    ind_t, flux_text = _chern_block(sc, sc.build())
    record = {"tool_version": __version__, "verb": "chern", "scenario": sc.canonical(),
              "scenario_hash": sc.content_hash(), "ind_t": ind_t, "created": _now()}
    return {RECORD: reports.dumps(record), FLUX_CSV: flux_text}


def compute_gap(sc: scn.Scenario) -> dict[str, str]:
    gap = sp.gap_probe(sc.build(), sc.grid)
    record = {"tool_version": __version__, "verb": "gap", "scenario": sc.canonical(),
              "scenario_hash": sc.content_hash(), "gap": gap, "grid": sc.grid.label(), "created": _now()}
    return {RECORD: reports.dumps(record)}


def emit_plots(files: dict[str, str]) -> dict[str, str]:
    """SVGs from the CSV members of a run directory (titles come from the
    record, so re-plotting a stored run reproduces the same bytes)."""
    out = {}
    record = json.loads(files.get(RECORD, "{}") or "{}")
    title = record.get("scenario", {}).get("name", "")
    if EIGEN_CSV in files:
        rows = reports.read_eigen_csv(files[EIGEN_CSV])
        flow = record.get("flow", {})
        window = float(flow.get("window", max((abs(v) for _, vs in rows for v in vs), default=1.0)))
        marks = [c["s"] for c in flow.get("crossings", []) if c.get("resolved")]
        out["flow.svg"] = reports.flow_svg(rows, window, marks, title or "spectral flow")
    if FLUX_CSV in files:
        out["flux.svg"] = reports.flux_svg(reports.read_flux_csv(files[FLUX_CSV]), title or "plaquette flux")
    if not out:
        raise MissingData("run directory has neither eigenvalue nor flux CSV")
    return out


# ---------------------------------------------------------------- verbs

def _run_cached(args, verb: str, compute: Callable[[scn.Scenario], dict[str, str]], extra: str = ""):
    sc = _overrides(scn.load(args.scenario), args)
    key = sc.content_hash(f"|{verb}|{__version__}{extra}")
    cache = RunCache(cache_dir(), enabled=not args.no_cache)
    files = cache.get(key)
    hit = files is not None
    if files is None:
        files = compute(sc)
        cache.put(key, files)
    log.info("%s %s (%s)", verb, "cache hit" if hit else "computed", key[:12])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text)
        for name, text in emit_plots(files).items():
            (out / name).write_text(text)
    sys.stdout.write(files[RECORD])
    return json.loads(files[RECORD])


def cmd_verify(args) -> int:
    ladder = [g for g in (args.ladder or "").split(",") if g]
    rec = _run_cached(args, "verify", lambda sc: compute_verify(sc, ladder), "|" + ",".join(ladder))
    return EXIT_OK if rec["status"] == "MATCH" else EXIT_MISMATCH


def cmd_sf(args) -> int:
    _run_cached(args, "sf", compute_sf)
    return EXIT_OK


def cmd_chern(args) -> int:
    _run_cached(args, "chern", compute_chern)
    return EXIT_OK


def cmd_gap(args) -> int:
    _run_cached(args, "gap", compute_gap)
    return EXIT_OK


def cmd_ktheory(args) -> int:
    report = kt.run_report(args.n_max)
    text = reports.dumps(report)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "ktheory.json").write_text(text)
    sys.stdout.write(text)
    if report["errors"]:
        return EXIT_INVALID
    return EXIT_OK if report["all_passed"] else EXIT_MISMATCH


def cmd_plot(args) -> int:
    src = Path(args.run_dir)
    if not src.is_dir():
        raise MissingData(f"{src} is not a run directory")
    files = {p.name: p.read_text() for p in sorted(src.iterdir())
             if p.name in (EIGEN_CSV, FLUX_CSV, RECORD)}
    out = Path(args.out or src)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in emit_plots(files).items():
        (out / name).write_text(text)
        print(out / name)
    return EXIT_OK


def cmd_properties(args) -> int:
    only = [s for s in (args.suites or "").split(",") if s]
    unknown = set(only) - set(properties.SUITES)
    if unknown:
        raise InvalidInput(f"unknown suites {sorted(unknown)}")
    seed = 0 if args.seed is None else args.seed
    report = properties.run_all(seed, only or None)
    text = reports.dumps(report)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "properties.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if report["all_passed"] else EXIT_MISMATCH


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indexlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def scenario_opts(q):
        q.add_argument("--scenario", required=True,
                       help="scenario JSON file or builtin name (" + ", ".join(scn.BUILTINS) + ")")
        q.add_argument("--grid", help="override grid, NtxNtheta")
        q.add_argument("--lattice", help="override Chern lattice, NthetaxNs")
        q.add_argument("--window", type=float, help="trusted spectral window")
        q.add_argument("--seed", type=_u64)
        q.add_argument("--out", help="directory for the run files")
        q.add_argument("--no-cache", action="store_true", help="ignore and do not write the run cache")

    q = sub.add_parser("verify", help="topological index vs spectral flow")
    scenario_opts(q)
    q.add_argument("--ladder", help="comma separated extra grids for a stability ladder")
    q.set_defaults(fn=cmd_verify)
    for name, fn, text in (("sf", cmd_sf, "spectral and Cayley flow"),
                           ("chern", cmd_chern, "topological index from plaquette fluxes"),
                           ("gap", cmd_gap, "smallest |eigenvalue| over the family")):
        q = sub.add_parser(name, help=text)
        scenario_opts(q)
        q.set_defaults(fn=fn)
    q = sub.add_parser("ktheory", help="exact coinvariant-algebra identities")
    q.add_argument("--n-max", type=int, default=4)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_ktheory)
    q = sub.add_parser("plot", help="render SVGs from a run directory")
    q.add_argument("run_dir")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_plot)
    q = sub.add_parser("properties", help="seeded randomized invariant suites")
    q.add_argument("--seed", type=_u64)
    q.add_argument("--suites", help="comma separated subset of " + ", ".join(properties.SUITES))
    q.add_argument("--out")
    q.set_defaults(fn=cmd_properties)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except InvalidInput as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except IndexLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
