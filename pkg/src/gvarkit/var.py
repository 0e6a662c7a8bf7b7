"""Reduced-form VAR(p) estimation for a single block of variables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .linalg import companion, is_stable_radius, lstsq_qr

DETERMINISTIC = ("none", "constant", "constant_trend")


@dataclass(frozen=True)
class VarEstimate:
    alpha: np.ndarray            # (k,) intercepts, zeros without a constant
    phi: tuple[np.ndarray, ...]  # p matrices of shape (k, k)
    det_coeffs: np.ndarray       # (k, d) coefficients on non-constant deterministic terms
    residuals: np.ndarray        # (T - p, k)
    fitted: np.ndarray           # (T - p, k)
    sigma_w: np.ndarray          # (k, k), dof-corrected
    p: int
    deterministic: str
    stderr: np.ndarray           # (m, k) coefficient standard errors in design order
    names: tuple[str, ...]

    @property
    def k(self) -> int:
        return self.alpha.shape[0]

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]

    @property
    def n_params(self) -> int:
        return self.k * self.p + _n_det(self.deterministic)

    def companion(self) -> np.ndarray:
        return companion(self.phi)


def _n_det(deterministic: str) -> int:
    return {"none": 0, "constant": 1, "constant_trend": 2}[deterministic]


def var_design(block: np.ndarray, p: int, deterministic: str, start: int | None = None,
               names: Sequence[str] | None = None):
    """Build (Y, X, column names) for a VAR(p); ``start`` trims a common sample.

    The trend regressor is the 1-based row number of the observation in
    ``block``.
    """
    if deterministic not in DETERMINISTIC:
        raise ConfigError(f"unknown deterministic specification {deterministic!r}")
    T, k = block.shape
    start = p if start is None else start
    names = list(names) if names is not None else [f"y{j}" for j in range(k)]
    cols, cnames = [], []
    n = T - start
    if deterministic != "none":
        cols.append(np.ones((n, 1)))
        cnames.append("const")
    if deterministic == "constant_trend":
        cols.append(np.arange(start + 1.0, T + 1.0)[:, None])
        cnames.append("trend")
    for lag in range(1, p + 1):
        cols.append(block[start - lag: T - lag])
        cnames.extend(f"{nm}.L{lag}" for nm in names)
    return block[start:], np.hstack(cols), cnames


def estimate_var(block, p: int = 1, deterministic: str = "constant",
                 names: Sequence[str] | None = None) -> VarEstimate:
    """Equation-by-equation least squares for a VAR(p)."""
    block = np.asarray(block, dtype=float)
    if block.ndim == 1:
        block = block[:, None]
    T, k = block.shape
    if p < 1:
        raise ConfigError("lag order p must be >= 1")
    m_det = _n_det(deterministic) if deterministic in DETERMINISTIC else 0
    if T <= k * p + m_det + 10:
        raise InsufficientDataError(
            f"T={T} observations too few for VAR({p}) with {k} variables (need > {k * p + m_det + 10})"
        )
    Y, X, cnames = var_design(block, p, deterministic, names=names)
    fit = lstsq_qr(X, Y, cnames)
    B = fit.coef                       # (m, k)
    resid = fit.resid
    n, m = X.shape
    sigma = resid.T @ resid / (n - m)
    sigma = 0.5 * (sigma + sigma.T)
    stderr = np.sqrt(np.outer(np.diag(fit.xtx_inv), np.diag(sigma)))
    d = _n_det(deterministic)
    alpha = B[0] if deterministic != "none" else np.zeros(k)
    det_coeffs = B[1:d].T if d > 1 else np.zeros((k, 0))
    phi = tuple(B[d + j * k: d + (j + 1) * k].T.copy() for j in range(p))
    return VarEstimate(
        alpha=np.array(alpha),
        phi=phi,
        det_coeffs=det_coeffs,
        residuals=resid,
        fitted=X @ B,
        sigma_w=sigma,
        p=p,
        deterministic=deterministic,
        stderr=stderr,
        names=tuple(cnames),
    )


def select_lag(block, p_max: int, criterion: str = "bic",
               deterministic: str = "constant") -> int:
    """Lag order in 1..p_max minimising AIC or BIC on a common sample."""
    if p_max < 1:
        raise ConfigError("p_max must be >= 1")
    if criterion not in ("aic", "bic"):
        raise ConfigError(f"unknown criterion {criterion!r}")
    if p_max == 1:
        return 1
    block = np.asarray(block, dtype=float)
    if block.ndim == 1:
        block = block[:, None]
    T, k = block.shape
    best = None
    for p in range(1, p_max + 1):
        Y, X, names = var_design(block, p, deterministic, start=p_max)
        n = Y.shape[0]
        if n <= X.shape[1]:
            raise InsufficientDataError(f"too few observations for lag {p}")
        fit = lstsq_qr(X, Y, names)
        sigma_ml = fit.resid.T @ fit.resid / n
        sign, logdet = np.linalg.slogdet(sigma_ml)
        n_par = k * X.shape[1]
        pen = 2.0 * n_par if criterion == "aic" else math.log(n) * n_par
        val = logdet + pen / n
        if best is None or val < best[0]:
            best = (val, p)
    return best[1]


@dataclass(frozen=True)
class Rms:
    per_equation: np.ndarray
    pooled: float


def residual_rms(estimate: VarEstimate) -> Rms:
    """Root mean square of the residuals over the N - L fitted points."""
    u = estimate.residuals
    return Rms(np.sqrt(np.mean(u ** 2, axis=0)), float(np.sqrt(np.mean(u ** 2))))


def var_stability(estimate: VarEstimate | Sequence[np.ndarray]) -> np.ndarray:
    """Companion-matrix eigenvalue moduli in descending order."""
    phis = estimate.phi if isinstance(estimate, VarEstimate) else tuple(estimate)
    mods = np.abs(np.linalg.eigvals(companion(phis)))
    return np.sort(mods)[::-1]


def is_stable(estimate) -> bool:
    return bool(is_stable_radius(var_stability(estimate)[0]))


def simulate_var(phis: Sequence[np.ndarray], T: int, rng: np.random.Generator,
                 alpha=None, sigma=None, burn: int = 100) -> np.ndarray:
    """Simulate a Gaussian VAR(p) path of length ``T`` after ``burn`` steps."""
    phis = [np.atleast_2d(np.asarray(f, dtype=float)) for f in phis]
    k = phis[0].shape[0]
    p = len(phis)
    alpha = np.zeros(k) if alpha is None else np.asarray(alpha, dtype=float)
    chol = np.eye(k) if sigma is None else np.linalg.cholesky(np.asarray(sigma, dtype=float))
    total = T + burn
    x = np.zeros((total + p, k))
    shocks = rng.standard_normal((total, k)) @ chol.T
    for t in range(p, total + p):
        acc = alpha + shocks[t - p]
        for j, f in enumerate(phis, start=1):
            acc = acc + f @ x[t - j]
        x[t] = acc
    return x[p + burn:]
