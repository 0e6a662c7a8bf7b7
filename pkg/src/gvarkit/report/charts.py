"""Deterministic SVG band charts for forecast fans and impulse responses.

Each selected (country, variable) gets its own panel with the 90% band
(5%-95%), the 68% band (16%-84%) drawn darker on top, and the median line.
Coordinates are printed with fixed precision so identical input gives a
byte-identical file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..errors import ConfigError

PANEL_W, PANEL_H = 260, 180
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 56, 12, 26, 30
OUTER_FILL = "#c6dbef"
INNER_FILL = "#6baed6"
MEDIAN = "#08306b"


def _f(x: float) -> str:
    return f"{x:.2f}"


def _band_polygon(xs, lo, hi, sx, sy, fill) -> str | None:
    if np.array_equal(lo, hi):
        return None
    pts = [f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, hi)]
    pts += [f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs[::-1], lo[::-1])]
    return f'<polygon points="{" ".join(pts)}" fill="{fill}" stroke="none"/>'


def _panel(title: str, xs, q: np.ndarray, ox: float, oy: float) -> list[str]:
    """q is (5, n) in 5/16/50/84/95 order."""
    lo, hi = float(np.min(q)), float(np.max(q))
    if hi == lo:
        pad = max(abs(hi) * 0.05, 1e-12)
        lo, hi = lo - pad, hi + pad
    x0, x1 = float(xs[0]), float(xs[-1])
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pw = PANEL_W - MARGIN_L - MARGIN_R
    ph = PANEL_H - MARGIN_T - MARGIN_B

    def sx(x):
        return ox + MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return oy + MARGIN_T + (hi - y) / (hi - lo) * ph

    out = [f'<g class="panel">',
           f'<text x="{_f(ox + PANEL_W / 2)}" y="{_f(oy + 16)}" text-anchor="middle" '
           f'font-size="12">{escape(title)}</text>',
           f'<rect x="{_f(ox + MARGIN_L)}" y="{_f(oy + MARGIN_T)}" width="{_f(pw)}" '
           f'height="{_f(ph)}" fill="none" stroke="#444" stroke-width="0.5"/>']
    for band, fill in (((0, 4), OUTER_FILL), ((1, 3), INNER_FILL)):
        poly = _band_polygon(xs, q[band[0]], q[band[1]], sx, sy, fill)
        if poly:
            out.append(poly)
    pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, q[2]))
    out.append(f'<polyline points="{pts}" fill="none" stroke="{MEDIAN}" stroke-width="1.5"/>')
    for y, anchor in ((hi, MARGIN_T), (lo, MARGIN_T + ph)):
        out.append(f'<text x="{_f(ox + MARGIN_L - 4)}" y="{_f(oy + anchor + 4)}" '
                   f'text-anchor="end" font-size="9">{y:.4g}</text>')
    for x in xs:
        out.append(f'<text x="{_f(sx(x))}" y="{_f(oy + PANEL_H - MARGIN_B + 12)}" '
                   f'text-anchor="middle" font-size="9">{int(x)}</text>')
    out.append("</g>")
    return out


def render_chart(result, labels: Sequence[tuple[str, str]] | None = None, title: str = "",
                 provenance: str = "") -> str:
    """SVG text for a ForecastFan or GirfResult."""
    q = np.asarray(result.quantiles, dtype=float)
    if q.size == 0:
        raise ConfigError("nothing to chart: empty quantile table")
    if hasattr(result, "horizons"):
        xs = np.asarray(result.horizons, dtype=float)
    else:
        xs = np.arange(1, result.n_ahead + 1, dtype=float)
    labels = list(labels) if labels is not None else list(result.labels)
    idx = [result.index(c, v) for c, v in labels]
    ncol = min(len(idx), 3)
    nrow = -(-len(idx) // ncol)
    top = 24 if title else 0
    W, H = ncol * PANEL_W, nrow * PANEL_H + top
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif">',
           f"<desc>{escape(provenance)}</desc>"]
    if title:
        out.append(f'<text x="{_f(W / 2)}" y="17" text-anchor="middle" font-size="14">'
                   f"{escape(title)}</text>")
    for n, (j, (c, v)) in enumerate(zip(idx, labels)):
        ox = (n % ncol) * PANEL_W
        oy = top + (n // ncol) * PANEL_H
        out.extend(_panel(f"{c}.{v}", xs, q[:, :, j], ox, oy))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(result, path: str | Path, labels=None, title: str = "", provenance: str = "") -> Path:
    path = Path(path)
    path.write_text(render_chart(result, labels, title, provenance), encoding="utf-8", newline="")
    return path
