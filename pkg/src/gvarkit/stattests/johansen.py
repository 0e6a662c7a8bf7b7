"""Johansen trace test for cointegration rank."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from ..errors import CollinearityError, ConfigError, InsufficientDataError
from ..linalg import check_full_rank, lstsq_qr
from . import _johansen_tables as tables

_TABLES = {
    "none": tables.TRACE_NONE,
    "constant": tables.TRACE_CONSTANT,
    "constant_trend": tables.TRACE_TREND,
}
_LEVEL_COL = {0.10: 0, 0.05: 1, 0.01: 2}


@dataclass(frozen=True)
class JohansenResult:
    trace_stats: np.ndarray            # r = 0 .. k-1
    critical_values: list[dict[float, float]]
    selected_rank: int
    eigenvalues: np.ndarray
    level: float
    nobs: int
    lag: int
    deterministic: str
    p_brackets: list[tuple[float, float]] = field(default_factory=list)

    def rejects(self, rank: int = 0, alpha: float = 0.05) -> bool:
        return bool(self.trace_stats[rank] > self.critical_values[rank][alpha])

    def stars(self, rank: int = 0) -> str:
        out = ""
        for alpha, mark in ((0.10, "*"), (0.05, "**"), (0.01, "***")):
            if self.rejects(rank, alpha):
                out = mark
        return out


def _bracket(stat: float, cv: dict[float, float]) -> tuple[float, float]:
    if stat > cv[0.01]:
        return (0.0, 0.01)
    if stat > cv[0.05]:
        return (0.01, 0.05)
    if stat > cv[0.10]:
        return (0.05, 0.10)
    return (0.10, 1.0)


def johansen_trace(series_matrix, lag: int = 2, deterministic: str = "constant",
                   level: float = 0.05, names=None) -> JohansenResult:
    """Johansen trace statistics for ranks r = 0 .. k-1.

    ``lag`` is the order of the VAR in levels, so the error-correction form
    carries ``lag - 1`` lagged differences. Deterministic terms enter the
    auxiliary regressions unrestricted and select the matching table of
    critical values.
    """
    Y = np.asarray(series_matrix, dtype=float)
    if Y.ndim != 2 or Y.shape[1] < 2:
        raise ConfigError("johansen_trace needs at least two series as columns")
    if deterministic not in _TABLES:
        raise ConfigError(f"unknown deterministic specification {deterministic!r}")
    if level not in _LEVEL_COL:
        raise ConfigError(f"level must be one of {sorted(_LEVEL_COL)}")
    if lag < 1:
        raise ConfigError("lag must be >= 1")
    T, k = Y.shape
    if k > len(_TABLES[deterministic]):
        raise ConfigError(f"critical values tabulated only up to {len(_TABLES[deterministic])} series")
    n = T - lag
    n_aux = k * (lag - 1) + (deterministic != "none") + (deterministic == "constant_trend")
    if n <= n_aux + k + 2:
        raise InsufficientDataError(f"{T} observations are too few for lag {lag} with {k} series")
    names = list(names) if names is not None else [f"y{j}" for j in range(k)]

    dY = np.diff(Y, axis=0)
    resp = dY[lag - 1:]
    level_lag = Y[lag - 1:-1]
    aux = [dY[lag - 1 - i: len(dY) - i] for i in range(1, lag)]
    if deterministic != "none":
        aux.append(np.ones((n, 1)))
    if deterministic == "constant_trend":
        aux.append(np.arange(1.0, n + 1.0)[:, None])
    if aux:
        Z = np.hstack(aux)
        r0 = lstsq_qr(Z, resp).resid
        r1 = lstsq_qr(Z, level_lag).resid
    else:
        r0, r1 = resp, level_lag
    try:
        check_full_rank(r1, names)
        check_full_rank(r0, [f"d.{nm}" for nm in names])
    except CollinearityError as exc:
        raise CollinearityError(f"rank-deficient system: {exc}", exc.columns) from None
    s00 = r0.T @ r0 / n
    s11 = r1.T @ r1 / n
    s01 = r0.T @ r1 / n
    m = s01.T @ np.linalg.solve(s00, s01)
    m = 0.5 * (m + m.T)
    try:
        lam = sla.eigh(m, s11, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise CollinearityError(f"rank-deficient system: {exc}", names) from None
    lam = np.clip(np.sort(lam)[::-1], 0.0, 1.0 - 1e-15)
    log1m = np.log1p(-lam)
    trace = np.array([-n * log1m[r:].sum() for r in range(k)])
    table = _TABLES[deterministic]
    cvs = []
    for r in range(k):
        row = table[k - r - 1]
        cvs.append({0.10: row[0], 0.05: row[1], 0.01: row[2]})
    col = level
    selected = k
    for r in range(k):
        if trace[r] <= cvs[r][col]:
            selected = r
            break
    return JohansenResult(
        trace_stats=trace,
        critical_values=cvs,
        selected_rank=selected,
        eigenvalues=lam,
        level=level,
        nobs=n,
        lag=lag,
        deterministic=deterministic,
        p_brackets=[_bracket(trace[r], cvs[r]) for r in range(k)],
    )
