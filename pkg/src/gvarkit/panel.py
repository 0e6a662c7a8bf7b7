"""Panel data model, variable transformations and trade weights.

A :class:`Panel` is a dense country x variable x time tensor. It is built
from long-format CSV files (``country,variable,date,value``) and never holds
silent NaNs: every series is either fully observed or its interpolated
periods are recorded in ``gaps``.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    CoverageError,
    DataError,
    DomainError,
    NormalizationError,
    ParseError,
)

HEADER = ["country", "variable", "date", "value"]
DEFAULT_VARIABLES = ("cpi", "emp", "gdp", "mpi", "exp", "imp", "exc", "mny")

_ANNUAL = re.compile(r"^(\d{4})$")
_QUARTERLY = re.compile(r"^(\d{4})-?Q([1-4])$")


def parse_period(label: str) -> tuple[str, int]:
    """Return ``(frequency, ordinal)`` for an annual or quarterly label."""
    m = _ANNUAL.match(label)
    if m:
        return "annual", int(m.group(1))
    m = _QUARTERLY.match(label)
    if m:
        return "quarterly", int(m.group(1)) * 4 + int(m.group(2)) - 1
    raise ValueError(f"unrecognised period label {label!r} (expected YYYY or YYYYQn)")


def _frequency(labels: Iterable[str]) -> str | None:
    freqs = {parse_period(lab)[0] for lab in labels}
    if len(freqs) > 1:
        raise DataError(f"mixed period frequencies in one panel: {sorted(freqs)}")
    return freqs.pop() if freqs else None


@dataclass(frozen=True)
class TransformStep:
    """One application of :func:`transform`.

    ``anchors`` holds, per series, the leading values of the (logged) level
    series that differencing discarded; they make the step invertible.
    """

    log: Mapping[str, bool]
    diff: Mapping[str, int]
    dropped_periods: tuple[str, ...]
    anchors: np.ndarray  # (country, variable, len(dropped_periods))


@dataclass(frozen=True)
class Panel:
    countries: tuple[str, ...]
    variables: tuple[str, ...]
    time_index: tuple[str, ...]
    values: np.ndarray
    transform_log: tuple[TransformStep, ...] = ()
    gaps: Mapping[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "time_index", tuple(self.time_index))
        values = np.array(self.values, dtype=float, copy=True)
        shape = (len(self.countries), len(self.variables), len(self.time_index))
        if values.shape != shape:
            raise DataError(f"values have shape {values.shape}, expected {shape}")
        if len(set(self.countries)) != len(self.countries):
            raise DataError("duplicate country identifiers")
        if len(set(self.variables)) != len(self.variables):
            raise DataError("duplicate variable codes")
        _frequency(self.time_index)
        ords = [parse_period(t)[1] for t in self.time_index]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise DataError("time_index must be strictly increasing without duplicates")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            c, v, t = (int(i) for i in bad)
            raise DataError(
                f"non-finite value in ({self.countries[c]},{self.variables[v]},{self.time_index[t]})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def frequency(self) -> str | None:
        return _frequency(self.time_index)

    def series(self, country: str, variable: str) -> np.ndarray:
        return self.values[self.countries.index(country), self.variables.index(variable)]

    def country_block(self, country: str) -> np.ndarray:
        """Return the (time, variable) block of one country."""
        return self.values[self.countries.index(country)].T.copy()

    def global_matrix(self) -> np.ndarray:
        """Return the (time, country*variable) matrix, country-major columns."""
        n_c, n_v, n_t = self.values.shape
        return self.values.reshape(n_c * n_v, n_t).T.copy()

    def labels(self) -> list[tuple[str, str]]:
        return [(c, v) for c in self.countries for v in self.variables]

    def select(self, countries: Sequence[str] | None = None,
               variables: Sequence[str] | None = None) -> "Panel":
        countries = list(countries) if countries else list(self.countries)
        variables = list(variables) if variables else list(self.variables)
        for c in countries:
            if c not in self.countries:
                raise ConfigError(f"country {c!r} not in panel")
        for v in variables:
            if v not in self.variables:
                raise ConfigError(f"variable {v!r} not in panel")
        ci = [self.countries.index(c) for c in countries]
        vi = [self.variables.index(v) for v in variables]
        gaps = {k: g for k, g in self.gaps.items() if k[0] in countries and k[1] in variables}
        return Panel(tuple(countries), tuple(variables), self.time_index,
                     self.values[np.ix_(ci, vi)], (), gaps)

    def equals(self, other: "Panel") -> bool:
        """Bit-level equality of labels and values."""
        return (
            self.countries == other.countries
            and self.variables == other.variables
            and self.time_index == other.time_index
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )


def ingest_long_csv(path: str | Path, interpolate: bool = False) -> Panel:
    """Read a long-format ``country,variable,date,value`` CSV into a Panel.

    Countries and variables keep their order of first appearance; periods
    are sorted. Empty or ``NA`` values count as missing. Missing observations
    raise :class:`CoverageError` unless ``interpolate`` is set, in which case
    interior gaps are filled linearly and recorded in ``Panel.gaps``; leading
    and trailing gaps always raise.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    obs: dict[tuple[str, str, str], float] = {}
    countries: list[str] = []
    variables: list[str] = []
    dates: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if [h.strip() for h in header] != HEADER:
            raise ParseError(f"header must be exactly {','.join(HEADER)}, got {','.join(header)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
            country, variable, date, raw = (cell.strip() for cell in row)
            if not country or not variable:
                raise ParseError("empty country or variable", lineno)
            try:
                parse_period(date)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            key = (country, variable, date)
            if key in obs:
                raise ParseError(f"duplicate row for {key}", lineno)
            if raw == "" or raw.upper() in ("NA", "NAN"):
                value = math.nan
            else:
                try:
                    value = float(raw)
                except ValueError:
                    raise ParseError(f"value {raw!r} is not a number", lineno) from None
                if not math.isfinite(value):
                    raise ParseError(f"value {raw!r} is not finite", lineno)
            obs[key] = value
            if country not in countries:
                countries.append(country)
            if variable not in variables:
                variables.append(variable)
            dates.add(date)
    if not obs:
        raise ParseError("no data rows", 2)
    _frequency(dates)
    time_index = sorted(dates, key=lambda d: parse_period(d)[1])
    values = np.full((len(countries), len(variables), len(time_index)), np.nan)
    pos = {d: i for i, d in enumerate(time_index)}
    ci = {c: i for i, c in enumerate(countries)}
    vi = {v: i for i, v in enumerate(variables)}
    for (c, v, d), x in obs.items():
        values[ci[c], vi[v], pos[d]] = x

    missing = [
        (countries[c], variables[v], time_index[t])
        for c, v, t in np.argwhere(np.isnan(values))
    ]
    gaps: dict[tuple[str, str], tuple[str, ...]] = {}
    if missing:
        if not interpolate:
            raise CoverageError(missing)
        edge = []
        for c in range(len(countries)):
            for v in range(len(variables)):
                s = values[c, v]
                bad = np.isnan(s)
                if not bad.any():
                    continue
                if bad[0] or bad[-1]:
                    edge.extend(
                        (countries[c], variables[v], time_index[t]) for t in np.flatnonzero(bad)
                    )
                    continue
                idx = np.arange(len(s))
                s[bad] = np.interp(idx[bad], idx[~bad], s[~bad])
                gaps[(countries[c], variables[v])] = tuple(time_index[t] for t in np.flatnonzero(bad))
        if edge:
            raise CoverageError(edge, "leading/trailing gaps cannot be interpolated: "
                                + ", ".join(f"({c},{v},{d})" for c, v, d in edge[:20]))
    return Panel(tuple(countries), tuple(variables), tuple(time_index), values, (), gaps)


def write_long_csv(panel: Panel, path: str | Path) -> Path:
    """Write a Panel as long-format CSV; values use shortest round-trip repr."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for ci, c in enumerate(panel.countries):
            for vi, v in enumerate(panel.variables):
                for ti, d in enumerate(panel.time_index):
                    writer.writerow([c, v, d, repr(float(panel.values[ci, vi, ti]))])
    return path


@dataclass(frozen=True)
class TransformSpec:
    log: bool = False
    diff: int = 0

    @classmethod
    def parse(cls, ops: "TransformSpec | Sequence[str] | str") -> "TransformSpec":
        """Accept ``"log,diff"``, ``["log", "diff2"]`` or a TransformSpec."""
        if isinstance(ops, TransformSpec):
            return ops
        if isinstance(ops, str):
            ops = [o for o in ops.split(",") if o.strip()]
        log, diff = False, 0
        for op in ops:
            op = op.strip().lower()
            if op == "log":
                if diff:
                    raise ConfigError("log must precede differencing")
                log = True
            elif op.startswith("diff"):
                diff += int(op[4:] or 1)
            else:
                raise ConfigError(f"unknown transformation {op!r}")
        return cls(log, diff)


def transform(panel: Panel, spec: Mapping[str, TransformSpec | Sequence[str] | str]) -> Panel:
    """Apply per-variable log and/or d-th differences.

    Variables absent from ``spec`` are left as they are. All series are
    trimmed to the largest difference order so the panel stays rectangular.
    """
    parsed = {v: TransformSpec.parse(s) for v, s in spec.items()}
    for v, s in parsed.items():
        if v not in panel.variables:
            raise ConfigError(f"transformation given for unknown variable {v!r}")
        if s.diff < 0:
            raise ConfigError(f"difference order must be >= 0 for {v!r}")
    log = {v: parsed.get(v, TransformSpec()).log for v in panel.variables}
    diff = {v: parsed.get(v, TransformSpec()).diff for v in panel.variables}
    trim = max(diff.values(), default=0)
    n_t = len(panel.time_index)
    if trim >= n_t:
        raise DataError(f"difference order {trim} leaves no observations")

    levels = np.array(panel.values, dtype=float)
    for vi, v in enumerate(panel.variables):
        if not log[v]:
            continue
        block = levels[:, vi, :]
        bad = np.argwhere(block <= 0)
        if bad.size:
            c, t = bad[0]
            raise DomainError(
                f"log of nonpositive value {block[c, t]!r} in series "
                f"({panel.countries[c]},{v}) at period {panel.time_index[t]}"
            )
        levels[:, vi, :] = np.log(block)

    out = np.empty(levels.shape[:2] + (n_t - trim,))
    for vi, v in enumerate(panel.variables):
        d = np.diff(levels[:, vi, :], n=diff[v], axis=-1) if diff[v] else levels[:, vi, :]
        out[:, vi, :] = d[:, trim - diff[v]:]
    step = TransformStep(log, diff, panel.time_index[:trim], levels[:, :, :trim].copy())
    return Panel(panel.countries, panel.variables, panel.time_index[trim:], out,
                 panel.transform_log + (step,), panel.gaps)


def undo_differences(z: np.ndarray, anchors: np.ndarray, d: int) -> np.ndarray:
    """Rebuild levels from d-th differences ``z`` and the leading levels."""
    anchors = np.asarray(anchors, dtype=float)
    n0 = anchors.shape[-1]
    y = np.concatenate([anchors, np.zeros(np.shape(z))], axis=-1)
    if d == 0:
        y[..., n0:] = z
        return y
    binom = [math.comb(d, i) * (-1) ** i for i in range(1, d + 1)]
    for t in range(n0, y.shape[-1]):
        acc = z[..., t - n0]
        for i, b in enumerate(binom, start=1):
            acc = acc - b * y[..., t - i]
        y[..., t] = acc
    return y


def inverse_transform(panel: Panel) -> Panel:
    """Undo the most recent :func:`transform` step."""
    if not panel.transform_log:
        raise ConfigError("panel has no transformation to invert")
    step = panel.transform_log[-1]
    trim = len(step.dropped_periods)
    out = np.empty(panel.values.shape[:2] + (panel.values.shape[2] + trim,))
    for vi, v in enumerate(panel.variables):
        d = step.diff[v]
        anchors = step.anchors[:, vi, :]
        if d == 0:
            y = np.concatenate([anchors, panel.values[:, vi, :]], axis=-1)
        else:
            # leading levels beyond the d-th order are recomputed from anchors
            head = anchors[:, : trim - d] if trim > d else anchors[:, :0]
            rec = undo_differences(panel.values[:, vi, :], anchors[:, trim - d:], d)
            y = np.concatenate([head, rec], axis=-1)
        out[:, vi, :] = np.exp(y) if step.log[v] else y
    return Panel(panel.countries, panel.variables, step.dropped_periods + panel.time_index,
                 out, panel.transform_log[:-1], panel.gaps)


ROW_STOCHASTIC = "row_stochastic"
MAX_NORMALIZED = "max_normalized"
_MODES = (ROW_STOCHASTIC, MAX_NORMALIZED)


@dataclass(frozen=True)
class WeightMatrix:
    countries: tuple[str, ...]
    w: np.ndarray
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        w = np.array(self.w, dtype=float, copy=True)
        n = len(self.countries)
        if self.mode not in _MODES:
            raise ConfigError(f"unknown weight mode {self.mode!r}")
        if w.shape != (n, n):
            raise DataError(f"weight matrix shape {w.shape} does not match {n} countries")
        if np.any(np.diag(w) != 0.0):
            raise DataError("weight matrix diagonal must be exactly zero")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DataError("weights must be finite and nonnegative")
        if self.mode == ROW_STOCHASTIC and n > 1:
            if np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-12):
                raise DataError("row_stochastic weights must have unit row sums")
        if self.mode == MAX_NORMALIZED and n > 1:
            if w.max() != 1.0 or w.min() < 0:
                raise DataError("max_normalized weights must lie in [0,1] with maximum 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def row(self, country: str) -> np.ndarray:
        return self.w[self.countries.index(country)]


def build_weights(flows, mode: str = ROW_STOCHASTIC,
                  countries: Sequence[str] | None = None) -> WeightMatrix:
    """Normalise raw bilateral flows into a :class:`WeightMatrix`.

    The diagonal is ignored. ``row_stochastic`` divides each row by its sum
    (star-variable weights); ``max_normalized`` divides by the largest
    off-diagonal entry (the display scaling of a trade-intensity table).
    """
    if isinstance(flows, WeightMatrix):
        countries = flows.countries if countries is None else countries
        flows = flows.w
    f = np.array(flows, dtype=float, copy=True)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise DataError(f"flows must be a square matrix, got shape {f.shape}")
    n = f.shape[0]
    if countries is None:
        countries = tuple(f"c{i}" for i in range(n))
    if len(countries) != n:
        raise ConfigError("number of country labels does not match flows")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise DataError("flows must be finite and nonnegative")
    np.fill_diagonal(f, 0.0)
    if mode == ROW_STOCHASTIC:
        sums = f.sum(axis=1)
        zero = [countries[i] for i in np.flatnonzero(sums == 0)]
        if zero and n > 1:
            raise NormalizationError(f"all-zero flow rows cannot be row-normalised: {zero}")
        w = f / sums[:, None] if n > 1 else f
    elif mode == MAX_NORMALIZED:
        top = f.max() if n > 1 else 0.0
        if top <= 0:
            raise NormalizationError("all flows are zero")
        w = f / top
    else:
        raise ConfigError(f"unknown weight mode {mode!r}")
    return WeightMatrix(tuple(countries), w, mode)


def read_square_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a square matrix CSV with a header row and a label column."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError("empty weights file", 1)
    cols = tuple(c.strip() for c in rows[0][1:])
    labels, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols) + 1:
            raise ParseError(f"expected {len(cols) + 1} fields, got {len(row)}", lineno)
        labels.append(row[0].strip())
        try:
            data.append([float(x) for x in row[1:]])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if tuple(labels) != cols:
        raise DataError(f"row labels {labels} do not match column labels {list(cols)}")
    return cols, np.array(data)


def read_weights_csv(path: str | Path, mode: str = ROW_STOCHASTIC) -> WeightMatrix:
    countries, flows = read_square_csv(path)
    return build_weights(flows, mode, countries)


def write_square_csv(countries: Sequence[str], matrix: np.ndarray, path: str | Path,
                     corner: str = "") -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([corner, *countries])
        for c, row in zip(countries, matrix):
            writer.writerow([c, *(repr(float(x)) for x in row)])
    return path


def write_weights_csv(weights: WeightMatrix, path: str | Path) -> Path:
    return write_square_csv(weights.countries, weights.w, path)


def align_weights(weights: WeightMatrix, countries: Sequence[str]) -> WeightMatrix:
    """Restrict and reorder weights to ``countries``, renormalising rows."""
    missing = [c for c in countries if c not in weights.countries]
    if missing:
        raise ConfigError(f"weights lack countries {missing}")
    idx = [weights.countries.index(c) for c in countries]
    sub = weights.w[np.ix_(idx, idx)]
    if tuple(countries) == weights.countries:
        return weights
    return build_weights(sub, weights.mode, countries)
