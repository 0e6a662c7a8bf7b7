"""Granger causality and Jarque-Bera normality tests."""

from __future__ import annotations

import numpy as np
from scipy import stats

from ..errors import ConfigError, DegenerateInputError, InsufficientDataError
from ..linalg import lstsq_qr
from .results import TestResult, decisions_from_p

NULL_NO_CAUSALITY = "no_granger_causality"
NULL_NORMAL = "normality"


def _lags(x: np.ndarray, lag: int) -> np.ndarray:
    n = len(x)
    return np.column_stack([x[lag - i: n - i] for i in range(1, lag + 1)])


def granger_test(cause, effect, lag: int = 1) -> TestResult:
    """F-test that lags of ``cause`` add nothing to an AR(lag) for ``effect``."""
    x = np.asarray(cause, dtype=float).ravel()
    y = np.asarray(effect, dtype=float).ravel()
    if len(x) != len(y):
        raise ConfigError("cause and effect must have equal length")
    if lag < 1:
        raise ConfigError("lag must be >= 1")
    n = len(y) - lag
    k_u = 2 * lag + 1
    if n <= k_u:
        raise InsufficientDataError(
            f"{n} usable observations cannot support {k_u} parameters"
        )
    resp = y[lag:]
    const = np.ones((n, 1))
    own = _lags(y, lag)
    other = _lags(x, lag)
    restricted = lstsq_qr(np.hstack([const, own]), resp)
    unrestricted = lstsq_qr(np.hstack([const, own, other]), resp,
                            ["const", *[f"effect.L{i}" for i in range(1, lag + 1)],
                             *[f"cause.L{i}" for i in range(1, lag + 1)]])
    rss_r = float(restricted.resid @ restricted.resid)
    rss_u = float(unrestricted.resid @ unrestricted.resid)
    df_den = n - k_u
    if rss_u <= 0:
        raise DegenerateInputError("unrestricted regression fits exactly")
    f = ((rss_r - rss_u) / lag) / (rss_u / df_den)
    p = float(stats.f.sf(f, lag, df_den))
    return TestResult(
        statistic=float(f),
        p_value=p,
        null_hypothesis=NULL_NO_CAUSALITY,
        decision_at=decisions_from_p(p),
        nuisance={"lag": lag, "df": (lag, df_den), "nobs": n},
    )


def jarque_bera(residuals) -> TestResult:
    """JB = n/6 (S^2 + (K-3)^2/4) with moment-based skewness and kurtosis."""
    e = np.asarray(residuals, dtype=float).ravel()
    n = len(e)
    if n < 8:
        raise InsufficientDataError(f"Jarque-Bera needs at least 8 observations, got {n}")
    d = e - e.mean()
    m2 = float(np.mean(d ** 2))
    if m2 <= 0:
        raise DegenerateInputError("residuals have zero variance")
    skew = float(np.mean(d ** 3)) / m2 ** 1.5
    kurt = float(np.mean(d ** 4)) / m2 ** 2
    jb = n / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0)
    p = float(stats.chi2.sf(jb, 2))
    return TestResult(
        statistic=jb,
        p_value=p,
        null_hypothesis=NULL_NORMAL,
        decision_at=decisions_from_p(p),
        nuisance={"skewness": skew, "kurtosis": kurt, "nobs": n},
    )
