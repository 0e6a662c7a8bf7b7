"""Augmented Dickey-Fuller and Phillips-Perron unit-root tests.

Both tests use the conventional null of a unit root, so rejection means the
series is stationary. P-values come from MacKinnon's response surfaces.
"""

from __future__ import annotations

import math

import numpy as np
from statsmodels.tsa.adfvalues import mackinnoncrit, mackinnonp

from ..errors import ConfigError, DegenerateInputError, InsufficientDataError
from ..linalg import lstsq_qr
from .results import LEVELS, TestResult, decisions_from_p

DETERMINISTIC = {"none": "n", "constant": "c", "constant_trend": "ct"}
NULL_UNIT_ROOT = "unit_root"


def _check_series(series, min_len: int) -> np.ndarray:
    y = np.asarray(series, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise DegenerateInputError("series contains non-finite values")
    if len(y) < min_len:
        raise InsufficientDataError(f"series of length {len(y)} is too short (need >= {min_len})")
    if np.ptp(y) == 0:
        raise DegenerateInputError("series is constant")
    return y


def _det_columns(n: int, deterministic: str) -> list[np.ndarray]:
    if deterministic not in DETERMINISTIC:
        raise ConfigError(f"unknown deterministic specification {deterministic!r}")
    cols = []
    if deterministic in ("constant", "constant_trend"):
        cols.append(np.ones(n))
    if deterministic == "constant_trend":
        cols.append(np.arange(1.0, n + 1.0))
    return cols


def _adf_regression(y: np.ndarray, lag: int, deterministic: str, start: int):
    """Regress dy_t on y_{t-1}, lags of dy and deterministic terms.

    ``start`` is the first usable index into ``dy`` (>= lag) so that several
    lag orders can share one estimation sample.
    """
    dy = np.diff(y)
    resp = dy[start:]
    n = len(resp)
    cols = [y[start:-1]]
    for i in range(1, lag + 1):
        cols.append(dy[start - i: len(dy) - i])
    cols.extend(_det_columns(n, deterministic))
    X = np.column_stack(cols)
    fit = lstsq_qr(X, resp)
    return fit, X, resp


def _ic(fit, n: int, k: int, criterion: str) -> float:
    rss = float(fit.resid @ fit.resid)
    pen = 2.0 * k if criterion == "aic" else k * math.log(n)
    return n * math.log(rss / n) + pen


def adf_test(series, max_lag: int = 1, deterministic: str = "constant",
             ic: str | None = None) -> TestResult:
    """Augmented Dickey-Fuller test.

    With ``ic=None`` exactly ``max_lag`` lagged differences are used.
    With ``ic`` in {"aic", "bic"} the lag order is chosen over 0..max_lag on a
    common sample and the chosen model is refitted on all usable data.
    """
    if max_lag < 0:
        raise ConfigError("max_lag must be >= 0")
    y = _check_series(series, max_lag + 11)
    lag = max_lag
    if ic is not None:
        if ic not in ("aic", "bic"):
            raise ConfigError(f"unknown information criterion {ic!r}")
        best = None
        for p in range(max_lag + 1):
            fit, X, resp = _adf_regression(y, p, deterministic, max_lag)
            val = _ic(fit, len(resp), X.shape[1], ic)
            if best is None or val < best[0]:
                best = (val, p)
        lag = best[1]
    fit, X, resp = _adf_regression(y, lag, deterministic, lag)
    n, k = X.shape
    rss = float(fit.resid @ fit.resid)
    if rss <= 0.0:
        raise DegenerateInputError("ADF regression fits exactly; statistic undefined")
    s2 = rss / (n - k)
    se = math.sqrt(s2 * fit.xtx_inv[0, 0])
    stat = float(fit.coef[0] / se)
    reg = DETERMINISTIC[deterministic]
    p = float(mackinnonp(stat, regression=reg, N=1))
    crit = mackinnoncrit(N=1, regression=reg, nobs=n)
    cv = {0.01: float(crit[0]), 0.05: float(crit[1]), 0.10: float(crit[2])}
    return TestResult(
        statistic=stat,
        p_value=p,
        null_hypothesis=NULL_UNIT_ROOT,
        decision_at=decisions_from_p(p),
        nuisance={"lag": lag, "deterministic": deterministic, "nobs": n, "ic": ic},
        critical_values=cv,
    )


def newey_west_lrv(u: np.ndarray, lags: int) -> float:
    """Bartlett-kernel long-run variance of a (mean-zero) residual series."""
    n = len(u)
    lrv = float(u @ u) / n
    for j in range(1, lags + 1):
        lrv += 2.0 * (1.0 - j / (lags + 1.0)) * float(u[j:] @ u[:-j]) / n
    return lrv


def pp_short_lags(n: int) -> int:
    return int(math.trunc(4.0 * (n / 100.0) ** 0.25))


def pp_test(series, deterministic: str = "constant", lags: int | None = None) -> TestResult:
    """Phillips-Perron Z-tau test with a Newey-West long-run variance.

    ``lags`` defaults to ``trunc(4 (n/100)^(1/4))``.
    """
    y = _check_series(series, 12)
    resp = y[1:]
    n = len(resp)
    X = np.column_stack([y[:-1], *_det_columns(n, deterministic)])
    fit = lstsq_qr(X, resp)
    k = X.shape[1]
    u = fit.resid
    rss = float(u @ u)
    if rss <= 0.0:
        raise DegenerateInputError("PP regression fits exactly; statistic undefined")
    if lags is None:
        lags = pp_short_lags(n)
    s2 = rss / (n - k)
    se = math.sqrt(s2 * fit.xtx_inv[0, 0])
    t_rho = (fit.coef[0] - 1.0) / se
    gamma0 = rss / n
    lam2 = newey_west_lrv(u, lags)
    if lam2 <= 0:
        raise DegenerateInputError("non-positive long-run variance estimate")
    lam = math.sqrt(lam2)
    stat = float(math.sqrt(gamma0 / lam2) * t_rho
                 - 0.5 * (lam2 - gamma0) / lam * n * se / math.sqrt(s2))
    reg = DETERMINISTIC[deterministic]
    p = float(mackinnonp(stat, regression=reg, N=1))
    crit = mackinnoncrit(N=1, regression=reg, nobs=n)
    cv = {0.01: float(crit[0]), 0.05: float(crit[1]), 0.10: float(crit[2])}
    return TestResult(
        statistic=stat,
        p_value=p,
        null_hypothesis=NULL_UNIT_ROOT,
        decision_at=decisions_from_p(p),
        nuisance={"lags": lags, "deterministic": deterministic, "nobs": n},
        critical_values=cv,
    )


STATIONARY = "stationary"
TREND_STATIONARY = "trend-stationary"
NONSTATIONARY = "nonstationary"


def stationarity_verdict(series, alpha: float = 0.05, adf_lag: int = 1,
                         adf_ic: str | None = None) -> str:
    """Combine ADF and PP under constant and constant+trend specifications.

    Both tests rejecting with a constant gives "stationary". Disagreement
    between the tests, or rejection only once a trend is allowed, gives
    "trend-stationary". Otherwise the series is "nonstationary".
    """
    if alpha not in LEVELS:
        raise ConfigError(f"alpha must be one of {LEVELS}")
    adf_c = adf_test(series, adf_lag, "constant", adf_ic).rejects(alpha)
    pp_c = pp_test(series, "constant").rejects(alpha)
    if adf_c and pp_c:
        return STATIONARY
    if adf_c != pp_c:
        return TREND_STATIONARY
    adf_t = adf_test(series, adf_lag, "constant_trend", adf_ic).rejects(alpha)
    pp_t = pp_test(series, "constant_trend").rejects(alpha)
    return TREND_STATIONARY if (adf_t or pp_t) else NONSTATIONARY
