"""Small dense linear-algebra helpers shared by the estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .errors import CollinearityError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class LstsqResult:
    coef: np.ndarray        # (m,) or (m, k)
    resid: np.ndarray
    xtx_inv: np.ndarray     # (m, m) unscaled covariance
    rank: int


def lstsq_qr(X: np.ndarray, Y: np.ndarray, names: Sequence[str] | None = None) -> LstsqResult:
    """Least squares through a QR factorisation of ``X``.

    Raises :class:`CollinearityError` naming the offending columns when ``X``
    does not have full column rank.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, m = X.shape
    if n < m:
        raise CollinearityError(f"{m} regressors but only {n} observations",
                                list(names or []))
    check_full_rank(X, names)
    q, r = np.linalg.qr(X, mode="reduced")
    coef = sla.solve_triangular(r, q.T @ Y)
    resid = Y - X @ coef
    r_inv = sla.solve_triangular(r, np.eye(m))
    return LstsqResult(coef, resid, r_inv @ r_inv.T, m)


def check_full_rank(X: np.ndarray, names: Sequence[str] | None = None) -> None:
    n, m = X.shape
    if m == 0:
        return
    names = list(names) if names is not None else [f"x{j}" for j in range(m)]
    scale = np.sqrt((X * X).sum(axis=0))
    zero = [names[j] for j in np.flatnonzero(scale == 0)]
    if zero:
        raise CollinearityError(f"zero-variance regressor columns: {zero}", zero)
    Xs = X / scale
    _, s, vt = np.linalg.svd(Xs, full_matrices=False)
    if s[-1] <= RANK_TOL * s[0]:
        null = np.abs(vt[-1])
        involved = [names[j] for j in np.flatnonzero(null > 1e-3 * null.max())]
        raise CollinearityError(
            f"design matrix is rank deficient (collinear columns: {involved})", involved
        )


def psd_sqrt(S: np.ndarray) -> np.ndarray:
    """A factor ``L`` with ``L @ L.T == S`` for a symmetric PSD matrix."""
    S = 0.5 * (S + S.T)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(S)
        return v * np.sqrt(np.clip(w, 0.0, None))


def companion(phis: Sequence[np.ndarray]) -> np.ndarray:
    """Companion matrix of a VAR(p) with lag matrices ``phis``."""
    k = phis[0].shape[0]
    p = len(phis)
    top = np.hstack(phis)
    if p == 1:
        return top.copy()
    bottom = np.hstack([np.eye(k * (p - 1)), np.zeros((k * (p - 1), k))])
    return np.vstack([top, bottom])


# eigen-solvers return unit-modulus roots up to a few ulps below one
UNIT_ROOT_TOL = 1e-10


def spectral_radius(F: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(F)))) if F.size else 0.0


def is_stable_radius(radius):
    """True where the spectral radius is strictly inside the unit circle.

    Radii within ``UNIT_ROOT_TOL`` of one count as unit roots.
    """
    return np.asarray(radius) < 1.0 - UNIT_ROOT_TOL
