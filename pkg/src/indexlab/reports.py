"""Report files with their deterministic SVG renderings.

All numbers are formatted with fixed precision so equal inputs give equal
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import MissingData

FMT = "{:.10g}"


def _num(x: float) -> str:
    return FMT.format(float(x))


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


# ---------------------------------------------------------------- CSV

def eigen_csv(rows: Sequence[tuple]) -> str:
    """rows: (u, eigenvalues) with u the loop parameter in [0, 1).  Columns:
    s (radians) followed by lambda_1..lambda_k, padded with blanks."""
    width = max((len(v) for _, v in rows), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s"] + [f"lambda_{i + 1}" for i in range(width)])
    for u, vals in rows:
        cells = [_num(2 * math.pi * u)] + [_num(v) for v in vals]
        w.writerow(cells + [""] * (width - len(vals)))
    return buf.getvalue()


def read_eigen_csv(text: str) -> list[tuple[float, list[float]]]:
    lines = list(csv.reader(io.StringIO(text)))
    if not lines or not lines[0] or lines[0][0] != "s":
        raise MissingData("eigenvalue CSV lacks its header")
    out = []
    for row in lines[1:]:
        if not row:
            continue
        out.append((float(row[0]), [float(c) for c in row[1:] if c != ""]))
    if not out:
        raise MissingData("eigenvalue CSV has no samples")
    return out


def flux_csv(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["component", "i_theta", "j_s", "flux"])
    for comp, i, j, f in rows:
        w.writerow([comp, i, j, _num(f)])
    return buf.getvalue()


def read_flux_csv(text: str) -> dict[str, np.ndarray]:
    lines = list(csv.reader(io.StringIO(text)))
    if not lines or lines[0][:1] != ["component"]:
        raise MissingData("flux CSV lacks its header")
    cells: dict[str, dict[tuple[int, int], float]] = {}
    for row in lines[1:]:
        if row:
            cells.setdefault(row[0], {})[(int(row[1]), int(row[2]))] = float(row[3])
    if not cells:
        raise MissingData("flux CSV has no rows")
    out = {}
    for comp, d in sorted(cells.items()):
        ni = max(i for i, _ in d) + 1
        nj = max(j for _, j in d) + 1
        arr = np.zeros((ni, nj))
        for (i, j), f in d.items():
            arr[i, j] = f
        out[comp] = arr
    return out


# ---------------------------------------------------------------- SVG

def _svg_open(w: int, h: int) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]


def flow_svg(samples: Sequence[tuple[float, Sequence[float]]], window: float,
             crossings: Sequence[float] = (), title: str = "spectral flow") -> str:
    """Eigenvalues in the window against s; crossings of zero marked.

    ``samples`` are (s, eigenvalues) with s in radians; ``crossings`` are s
    positions of trusted crossings.
    """
    if not samples:
        raise MissingData("no eigenvalue samples to plot")
    W, H, pad = 640, 400, 50
    sx = lambda s: pad + (W - 2 * pad) * s / (2 * math.pi)  # noqa: E731
    sy = lambda lam: H / 2 - (H / 2 - pad) * lam / window  # noqa: E731
    out = _svg_open(W, H)
    out.append(f'<text x="{W // 2}" y="25" text-anchor="middle" font-size="14">{_esc(title)}</text>')
    out.append(f'<line x1="{pad}" y1="{H / 2:.2f}" x2="{W - pad}" y2="{H / 2:.2f}" stroke="gray"/>')
    out.append(f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" '
               f'fill="none" stroke="black"/>')
    out.append(f'<text x="{pad - 5}" y="{pad + 4}" text-anchor="end" font-size="10">{_num(window)}</text>')
    out.append(f'<text x="{pad - 5}" y="{H - pad + 4}" text-anchor="end" font-size="10">{_num(-window)}</text>')
    out.append(f'<text x="{W - pad}" y="{H - pad + 15}" text-anchor="end" font-size="10">2pi</text>')
    out.append(f'<text x="{pad}" y="{H - pad + 15}" font-size="10">0</text>')
    for s, vals in sorted(samples, key=lambda r: r[0]):
        for lam in vals:
            if abs(lam) <= window:
                out.append(f'<circle cx="{sx(s):.2f}" cy="{sy(lam):.2f}" r="1.6" fill="navy"/>')
    for s in sorted(crossings):
        out.append(f'<circle cx="{sx(s):.2f}" cy="{H / 2:.2f}" r="5" fill="none" stroke="red" '
                   f'stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def flux_svg(flux: dict[str, np.ndarray], title: str = "plaquette flux") -> str:
    """Heatmap per boundary component; colour encodes flux / max |flux|."""
    if not flux:
        raise MissingData("no flux data to plot")
    cell, pad, gap = 8, 30, 30
    panels = sorted(flux.items())
    widths = [a.shape[0] * cell for _, a in panels]
    W = pad * 2 + sum(widths) + gap * (len(panels) - 1)
    H = pad * 2 + max(a.shape[1] for _, a in panels) * cell + 20
    out = _svg_open(W, H)
    out.append(f'<text x="{W // 2}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>')
    x0 = pad
    for (name, arr), wd in zip(panels, widths):
        scale = float(np.abs(arr).max()) or 1.0
        for i in range(arr.shape[0]):
            for j in range(arr.shape[1]):
                out.append(f'<rect x="{x0 + i * cell}" y="{pad + j * cell}" width="{cell}" '
                           f'height="{cell}" fill="{_colour(arr[i, j] / scale)}"/>')
        out.append(f'<text x="{x0 + wd // 2}" y="{H - 8}" text-anchor="middle" font-size="11">'
                   f'{_esc(name)} total {_num(arr.sum() / (2 * math.pi))}</text>')
        x0 += wd + gap
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _colour(v: float) -> str:
    v = max(-1.0, min(1.0, float(v)))
    if v >= 0:
        r, g, b = 255, int(255 * (1 - v)), int(255 * (1 - v))
    else:
        r, g, b = int(255 * (1 + v)), int(255 * (1 + v)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
