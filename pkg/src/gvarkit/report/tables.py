"""CSV emitters for result grids.

A :class:`Grid` holds labelled values plus optional per-cell markers; the
style decides number format and which cells are blanked. Provenance (config
hash and seed) goes into the top-left header cell, so a grid with ``R`` rows
is always an ``R + 1`` line file.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from ..stattests import stars

STYLES = ("stationarity", "granger", "johansen", "rolling", "weights")


@dataclass(frozen=True)
class Grid:
    """Values laid out as rows x columns.

    ``row_labels`` entries are tuples: one level for plain grids, two levels
    ``(country, variable)`` for per-country blocks.
    """

    row_labels: list[tuple[str, ...]]
    col_labels: list[str]
    values: np.ndarray
    marks: np.ndarray | None = None     # strings appended to the formatted value
    corner: tuple[str, ...] = ("",)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.row_labels), len(self.col_labels)):
            raise ConfigError(f"grid values have shape {v.shape}, labels imply "
                              f"{(len(self.row_labels), len(self.col_labels))}")
        depth = {len(r) for r in self.row_labels}
        if len(depth) > 1:
            raise ConfigError("row labels must all have the same depth")
        if self.marks is not None and np.shape(self.marks) != v.shape:
            raise ConfigError("marks must match the value grid")
        object.__setattr__(self, "values", v)

    @property
    def depth(self) -> int:
        return len(self.row_labels[0]) if self.row_labels else len(self.corner)


def rolling_mark(p: float) -> str:
    """'**' for p <= 0.01, '*' for p <= 0.05, '+' for p <= 0.10."""
    if not np.isfinite(p):
        return ""
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    if p <= 0.10:
        return "+"
    return ""


def star_marks(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=float)
    return np.vectorize(lambda x: stars(x) if np.isfinite(x) else "", otypes=[object])(p)


_FORMAT = {
    "stationarity": "{:.4f}",
    "granger": "{:.6f}",
    "johansen": "{:.2f}",
    "rolling": "{:.5f}",
    "weights": "{:.4f}",
}


def _own_variable(grid: Grid, i: int, j: int) -> bool:
    return grid.row_labels[i][-1] == grid.col_labels[j]


def _cell(grid: Grid, style: str, i: int, j: int) -> str:
    x = grid.values[i, j]
    if style == "weights" and (i == j or x == 0.0):
        return "0"
    if style in ("johansen", "rolling"):
        # upper triangle only: a row variable pairs with columns to its right
        ri = grid.col_labels.index(grid.row_labels[i][-1])
        if j <= ri:
            return ""
    if style == "granger" and _own_variable(grid, i, j):
        return "-"
    if not np.isfinite(x):
        return "NA"
    text = _FORMAT[style].format(x)
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    if grid.marks is not None:
        text += str(grid.marks[i, j] or "")
    return text


def _check(grid: Grid, style: str) -> None:
    if style not in STYLES:
        raise ConfigError(f"unknown table style {style!r}; choose from {', '.join(STYLES)}")
    if style in ("granger", "johansen", "rolling"):
        cols = set(grid.col_labels)
        if grid.depth != 2 or any(r[-1] not in cols for r in grid.row_labels):
            raise ConfigError(f"{style} grids need (country, variable) rows over the variable columns")
    if style == "weights":
        if grid.depth != 1 or [r[0] for r in grid.row_labels] != list(grid.col_labels):
            raise ConfigError("weight grids must be square with matching labels")
    if style == "stationarity" and grid.depth != 1:
        raise ConfigError("stationarity grids have one row label per country")


def render_table(grid: Grid, style: str, provenance: str = "") -> str:
    _check(grid, style)
    corner = list(grid.corner) + [""] * (grid.depth - len(grid.corner))
    if provenance:
        corner[0] = f"{corner[0]} [{provenance}]".strip()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(corner[:grid.depth] + list(grid.col_labels))
    for i, lab in enumerate(grid.row_labels):
        w.writerow(list(lab) + [_cell(grid, style, i, j) for j in range(len(grid.col_labels))])
    return buf.getvalue()


def emit_table(grid: Grid, style: str, path: str | Path, provenance: str = "") -> Path:
    """Write ``grid`` as CSV in the given style."""
    path = Path(path)
    path.write_text(render_table(grid, style, provenance), encoding="utf-8", newline="")
    return path


def emit_tidy(header: Sequence[str], rows, path: str | Path, provenance: str = "") -> Path:
    """Long-format CSV; a leading ``#`` line carries the provenance."""
    buf = io.StringIO()
    if provenance:
        buf.write(f"# {provenance}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path
