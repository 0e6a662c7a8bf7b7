"""Convergence and residual diagnostics for posterior draws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from ..errors import ConfigError, InsufficientDataError

AUTOCORR_BUCKETS = ("> 0.10", "0.05 - 0.10", "0.01 - 0.05", "< 0.01")
CROSS_CORR_BUCKETS = ("< 0.1", "0.1 - 0.2", "0.2 - 0.5", "> 0.5")


def spectral_density_zero(chains: np.ndarray) -> np.ndarray:
    """Bartlett-window estimate of the spectral density at frequency zero.

    Works column-wise on an (n, P) array; the bandwidth is
    ``floor(4 (n/100)^(2/9))``.
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    d = x - x.mean(axis=0)
    bw = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    s = (d * d).sum(axis=0) / n
    for j in range(1, bw + 1):
        s = s + 2.0 * (1.0 - j / (bw + 1.0)) * (d[j:] * d[:-j]).sum(axis=0) / n
    return s


@dataclass(frozen=True)
class GewekeResult:
    z: np.ndarray               # NaN for excluded parameters
    names: list[str]
    exceed_count: int
    total: int
    excluded: list[str] = field(default_factory=list)
    threshold: float = 1.96

    @property
    def fraction(self) -> float:
        return self.exceed_count / self.total if self.total else 0.0

    def summary(self) -> str:
        return (f"{self.exceed_count} out of {self.total} variables' z-values exceed the "
                f"{self.threshold:.2f} threshold ({format_percent(self.exceed_count, self.total, 2)}%).")


def geweke_diag(chains, names: Sequence[str] | None = None, first: float = 0.1,
                last: float = 0.5, threshold: float = 1.96) -> GewekeResult:
    """Geweke z-scores comparing the first and last segments of each chain.

    Parameters whose chain is constant are excluded and listed in
    ``excluded``.
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, P = x.shape
    if n < 100:
        raise InsufficientDataError(f"Geweke diagnostic needs >= 100 draws, got {n}")
    if not (0 < first < 1 and 0 < last < 1 and first + last <= 1):
        raise ConfigError("invalid Geweke window fractions")
    names = list(names) if names is not None else [f"p{j}" for j in range(P)]
    na = int(math.floor(first * n))
    nb = int(math.floor(last * n))
    a = x[:na]
    b = x[n - nb:]
    z = np.full(P, np.nan)
    const = np.ptp(x, axis=0) == 0
    ok = ~const
    sa = spectral_density_zero(a[:, ok])
    sb = spectral_density_zero(b[:, ok])
    denom = np.sqrt(sa / na + sb / nb)
    with np.errstate(divide="ignore", invalid="ignore"):
        zz = (a[:, ok].mean(axis=0) - b[:, ok].mean(axis=0)) / denom
    z[ok] = zz
    valid = np.isfinite(z)
    excluded = [names[j] for j in np.flatnonzero(~valid)]
    exceed = int(np.sum(np.abs(z[valid]) > threshold))
    return GewekeResult(z, names, exceed, int(valid.sum()), excluded, threshold)


def bucket_autocorr(pvalues) -> list[int]:
    """Counts in the buckets p > 0.10, (0.05, 0.10], [0.01, 0.05], p < 0.01."""
    p = np.asarray(pvalues, dtype=float)
    return [
        int(np.sum(p > 0.10)),
        int(np.sum((p > 0.05) & (p <= 0.10))),
        int(np.sum((p >= 0.01) & (p <= 0.05))),
        int(np.sum(p < 0.01)),
    ]


def bucket_cross_corr(values) -> list[int]:
    """Counts in the buckets < 0.1, [0.1, 0.2), [0.2, 0.5], > 0.5."""
    v = np.asarray(values, dtype=float)
    return [
        int(np.sum(v < 0.1)),
        int(np.sum((v >= 0.1) & (v < 0.2))),
        int(np.sum((v >= 0.2) & (v <= 0.5))),
        int(np.sum(v > 0.5)),
    ]


def format_percent(count: int, total: int, digits: int = 1) -> str:
    if total == 0:
        return "nan"
    return f"{100.0 * count / total:.{digits}f}"


@dataclass(frozen=True)
class AutocorrSummary:
    labels: list[str]
    pvalues: np.ndarray
    counts: list[int]

    @property
    def total(self) -> int:
        return len(self.pvalues)

    @property
    def percents(self) -> list[str]:
        return [format_percent(c, self.total, 1) for c in self.counts]


def residual_autocorr_ftest(residuals, labels: Sequence[str] | None = None) -> AutocorrSummary:
    """F-test of first-order serial correlation for every residual series.

    ``residuals`` is a (T, N) array or a mapping country -> (T, k) array;
    each column is regressed on a constant and its own first lag.
    """
    if isinstance(residuals, Mapping):
        cols, lab = [], []
        for c, r in residuals.items():
            r = np.asarray(r, dtype=float)
            if r.ndim == 1:
                r = r[:, None]
            for j in range(r.shape[1]):
                cols.append(r[:, j])
                lab.append(f"{c}.{labels[j]}" if labels is not None else f"{c}.{j}")
        E = np.column_stack(cols)
        labels = lab
    else:
        E = np.asarray(residuals, dtype=float)
        if E.ndim == 1:
            E = E[:, None]
        labels = list(labels) if labels is not None else [f"e{j}" for j in range(E.shape[1])]
    T = E.shape[0]
    if T < 20:
        raise InsufficientDataError(f"autocorrelation F-test needs >= 20 residuals, got {T}")
    p = np.empty(E.shape[1])
    n = T - 1
    for j in range(E.shape[1]):
        y = E[1:, j]
        x = E[:-1, j]
        X = np.column_stack([np.ones(n), x])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        r = y - X @ coef
        rss_u = float(r @ r)
        rss_r = float(((y - y.mean()) ** 2).sum())
        if rss_u <= 0:
            p[j] = 0.0
            continue
        f = (rss_r - rss_u) / (rss_u / (n - 2))
        p[j] = float(stats.f.sf(f, 1, n - 2))
    return AutocorrSummary(list(labels), p, bucket_autocorr(p))


@dataclass(frozen=True)
class CrossCorrTable:
    variables: list[str]
    countries: list[str]
    average: np.ndarray          # (n_countries, n_variables)
    counts: dict[str, list[int]]  # variable -> bucket counts

    def percents(self, variable: str) -> list[str]:
        total = len(self.countries)
        return [format_percent(c, total, 0) for c in self.counts[variable]]


def cross_unit_corr(residuals: Mapping[str, np.ndarray], variables: Sequence[str]) -> CrossCorrTable:
    """Average pairwise cross-country residual correlation per variable.

    For each variable and country, the correlations of that country's
    residual with every other country's residual of the same variable are
    averaged; the averages are then bucketed across countries.
    """
    countries = list(residuals)
    if len(countries) < 2:
        raise ConfigError("cross-unit correlation needs at least two countries")
    arrs = [np.asarray(residuals[c], dtype=float) for c in countries]
    T = {a.shape[0] for a in arrs}
    if len(T) != 1:
        raise ConfigError("residual samples must be aligned across countries")
    V = len(variables)
    avg = np.empty((len(countries), V))
    for v in range(V):
        block = np.column_stack([a[:, v] for a in arrs])
        corr = np.corrcoef(block, rowvar=False)
        corr = np.nan_to_num(corr, nan=0.0)
        np.fill_diagonal(corr, np.nan)
        avg[:, v] = np.nanmean(corr, axis=1)
    counts = {variables[v]: bucket_cross_corr(avg[:, v]) for v in range(V)}
    return CrossCorrTable(list(variables), countries, avg, counts)
