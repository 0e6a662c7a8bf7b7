"""Ordinary least squares and rolling-window regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import CollinearityError, ConfigError, InsufficientDataError
from .linalg import lstsq_qr

MIN_WINDOW = 4


@dataclass(frozen=True)
class OlsFit:
    intercept: float
    slopes: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    r_squared: float
    adj_r_squared: float
    f_pvalue: float
    n: int
    bse: np.ndarray          # standard errors, intercept first when present
    rss: float
    has_intercept: bool = True

    @property
    def params(self) -> np.ndarray:
        if self.has_intercept:
            return np.concatenate([[self.intercept], self.slopes])
        return self.slopes


def ols_fit(X, y, intercept: bool = True) -> OlsFit:
    """Least-squares fit of ``y`` on the columns of ``X``.

    The solve goes through a QR factorisation of the design. A fit with zero
    residual degrees of freedom is allowed (exact interpolation); its adjusted
    R-squared, F p-value and standard errors are NaN.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if n != len(y):
        raise ConfigError(f"X has {n} rows but y has {len(y)} entries")
    design = np.hstack([np.ones((n, 1)), X]) if intercept else X
    p = design.shape[1]
    if n < p:
        raise InsufficientDataError(f"{n} observations cannot identify {p} coefficients")
    names = (["const"] if intercept else []) + [f"x{j}" for j in range(k)]
    try:
        fit = lstsq_qr(design, y, names)
    except CollinearityError as exc:
        raise CollinearityError(f"perfect multicollinearity: {exc}", exc.columns) from None
    beta = fit.coef
    resid = fit.resid
    fitted = design @ beta
    rss = float(resid @ resid)
    if intercept:
        tss = float(((y - y.mean()) ** 2).sum())
    else:
        tss = float(y @ y)
    r2 = 0.0 if tss == 0.0 else min(max(1.0 - rss / tss, 0.0), 1.0)
    df_model = k
    df_resid = n - p
    if df_resid > 0:
        adj = 1.0 - (1.0 - r2) * (n - int(intercept)) / df_resid
        s2 = rss / df_resid
        bse = np.sqrt(np.diag(fit.xtx_inv) * s2)
        if df_model == 0:
            f_p = np.nan
        elif rss == 0.0:
            f_p = 0.0 if tss > 0 else np.nan
        else:
            ess = max(tss - rss, 0.0)
            f = (ess / df_model) / (rss / df_resid)
            f_p = float(stats.f.sf(f, df_model, df_resid))
    else:
        adj = np.nan
        bse = np.full(p, np.nan)
        f_p = np.nan
    return OlsFit(
        intercept=float(beta[0]) if intercept else 0.0,
        slopes=beta[1:] if intercept else beta,
        residuals=resid,
        fitted=fitted,
        r_squared=r2,
        adj_r_squared=float(adj),
        f_pvalue=float(f_p),
        n=n,
        bse=bse,
        rss=rss,
        has_intercept=intercept,
    )


@dataclass(frozen=True)
class RollingResult:
    window: int
    per_window_fits: tuple[OlsFit, ...]
    mean_adj_r_squared: float
    pooled_f_pvalue: float

    @property
    def slopes(self) -> np.ndarray:
        return np.array([f.slopes for f in self.per_window_fits])

    @property
    def adj_r_squared(self) -> np.ndarray:
        return np.array([f.adj_r_squared for f in self.per_window_fits])


def rolling_ols(x, y, window: int) -> RollingResult:
    """Slide a fixed window one step at a time and fit OLS with intercept.

    ``pooled_f_pvalue`` is the F-test p-value of the same regression fitted
    on the full sample.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    if window < MIN_WINDOW:
        raise ConfigError(f"rolling window must be >= {MIN_WINDOW}, got {window}")
    if window > n:
        raise ConfigError(f"rolling window {window} exceeds sample length {n}")
    if len(x) != n:
        raise ConfigError("x and y must have equal length")
    fits = tuple(ols_fit(x[s:s + window], y[s:s + window]) for s in range(n - window + 1))
    pooled = ols_fit(x, y)
    return RollingResult(
        window=window,
        per_window_fits=fits,
        mean_adj_r_squared=float(np.mean([f.adj_r_squared for f in fits])),
        pooled_f_pvalue=pooled.f_pvalue,
    )
