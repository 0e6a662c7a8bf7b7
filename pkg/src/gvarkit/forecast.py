"""Forecast fans and generalized impulse responses over sets of global models.

Every function accepts either a :class:`~gvarkit.bgvar.PosteriorDraws`, a
single :class:`~gvarkit.gvar.GlobalModel` or a sequence of them. For
posterior draws only the stable ones are used unless ``stable_only=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import AnalysisError, ConfigError, NumericalError
from .gvar import GlobalModel, global_labels
from .linalg import psd_sqrt

QUANTILES = (0.05, 0.16, 0.50, 0.84, 0.95)
QUANTILE_NAMES = ("q05", "q16", "q50", "q84", "q95")


class DegenerateShockError(NumericalError):
    pass


@dataclass(frozen=True)
class _Dynamics:
    """The pieces of a solved global model needed to simulate it."""

    b0: np.ndarray
    b1: np.ndarray
    F: np.ndarray
    sigma_e: np.ndarray

    def step(self, x_prev, t, shock=None):
        # same expression as GlobalModel.step, so zero-shock paths agree bitwise
        x = self.b0 + self.b1 * t + self.F @ x_prev
        if shock is not None:
            x = x + shock
        return x


def _collect(draws, stable_only: bool = True):
    """Return (labels, list of _Dynamics, draw numbers)."""
    from .bgvar.sampler import PosteriorDraws

    if isinstance(draws, PosteriorDraws):
        idx = np.flatnonzero(draws.stable_flags) if stable_only else np.arange(draws.n_draws)
        if idx.size == 0:
            raise AnalysisError("no stable posterior draws to forecast from")
        dyn = [_Dynamics(draws.b0[d], draws.b1[d], draws.F[d], draws.sigma_e[d]) for d in idx]
        return global_labels(draws.countries, draws.variables), dyn, idx
    if isinstance(draws, GlobalModel):
        draws = [draws]
    models = list(draws)
    if not models:
        raise AnalysisError("no models to forecast from")
    if stable_only:
        keep = [i for i, m in enumerate(models) if m.is_stable]
        if not keep:
            raise AnalysisError("no stable models to forecast from")
    else:
        keep = list(range(len(models)))
    labels = models[0].labels
    for m in models:
        if m.labels != labels:
            raise ConfigError("models disagree on their variable layout")
    dyn = [_Dynamics(models[i].b0, models[i].b1, models[i].F, models[i].sigma_e) for i in keep]
    return labels, dyn, np.asarray(keep)


def _rng(seed: int, *keys) -> np.random.Generator:
    from .bgvar.sampler import substream

    return substream(seed, *keys)


@dataclass(frozen=True)
class ForecastFan:
    n_ahead: int
    labels: list[tuple[str, str]]
    paths: np.ndarray              # (n_paths, n_ahead, K)
    quantiles: np.ndarray          # (5, n_ahead, K) in QUANTILES order
    conditioning: str = "none"     # none | fixed | band
    half_width: float | None = None
    constraints: dict = field(default_factory=dict)
    t_last: int = 0

    def index(self, country: str, variable: str) -> int:
        try:
            return self.labels.index((country, variable))
        except ValueError:
            raise ConfigError(f"({country},{variable}) is not in the fan") from None

    def band(self, country: str, variable: str) -> np.ndarray:
        """(n_ahead, 5) quantile table for one variable."""
        return self.quantiles[:, :, self.index(country, variable)].T

    def to_rows(self):
        """Tidy rows (country, variable, horizon, q05..q95)."""
        rows = []
        for j, (c, v) in enumerate(self.labels):
            for h in range(self.n_ahead):
                rows.append((c, v, h + 1, *self.quantiles[:, h, j]))
        return rows


def _quantiles(paths: np.ndarray) -> np.ndarray:
    q = np.quantile(paths, QUANTILES, axis=0)
    # guard against interpolation round-off breaking the nesting
    return np.maximum.accumulate(q, axis=0)


def forecast_unconditional(draws, x_last=None, t_last: int | None = None, n_ahead: int = 5,
                           seed: int = 0, paths_per_draw: int = 1, shocks: bool = True,
                           stable_only: bool = True) -> ForecastFan:
    """Simulate x_{t+h} = b0 + b1 (t+h) + F x_{t+h-1} + e for every draw.

    ``x_last`` and ``t_last`` default to the values stored with posterior
    draws. With ``shocks=False`` each draw contributes its deterministic
    path.
    """
    if n_ahead < 1:
        raise ConfigError("n_ahead must be >= 1")
    x_last, t_last = _origin(draws, x_last, t_last)
    labels, dyn, idx = _collect(draws, stable_only)
    K = len(labels)
    reps = paths_per_draw if shocks else 1
    paths = np.empty((len(dyn) * reps, n_ahead, K))
    row = 0
    for m, d in zip(dyn, idx):
        rng = _rng(seed, "forecast", int(d))
        L = psd_sqrt(m.sigma_e) if shocks else None
        for _ in range(reps):
            x = x_last
            for h in range(1, n_ahead + 1):
                e = L @ rng.standard_normal(K) if shocks else None
                x = m.step(x, t_last + h, e)
                paths[row, h - 1] = x
            row += 1
    return ForecastFan(n_ahead, labels, paths, _quantiles(paths), "none", t_last=t_last)


def _origin(draws, x_last, t_last):
    if x_last is None:
        x_last = getattr(draws, "x_last", None)
        if x_last is None:
            raise ConfigError("x_last is required")
    if t_last is None:
        t_last = getattr(draws, "t_last", None)
        if t_last is None:
            raise ConfigError("t_last is required")
    return np.asarray(x_last, dtype=float), int(t_last)


def _constraint_grid(labels, constraints: Mapping, n_ahead: int, x_last) -> np.ndarray:
    """(n_ahead, K) array of constrained values, NaN where free.

    Values may be a scalar (every horizon), a sequence of length
    ``n_ahead`` with NaN for free horizons, or the string ``"last"`` for
    the last observed value.
    """
    K = len(labels)
    grid = np.full((n_ahead, K), np.nan)
    for key, val in constraints.items():
        try:
            j = labels.index(tuple(key))
        except ValueError:
            raise ConfigError(f"constraint on unknown variable {tuple(key)}") from None
        if isinstance(val, str):
            if val != "last":
                raise ConfigError(f"unknown constraint value {val!r}")
            grid[:, j] = x_last[j]
            continue
        arr = np.asarray(val, dtype=float)
        if arr.ndim == 0:
            grid[:, j] = float(arr)
        elif arr.shape == (n_ahead,):
            grid[:, j] = arr
        else:
            raise ConfigError(f"constraint for {tuple(key)} must be a scalar or {n_ahead} values")
    if not np.isfinite(grid).any():
        raise ConfigError("no constrained coordinates")
    return grid


def forecast_conditional(draws, constraints: Mapping, x_last=None, t_last: int | None = None,
                         n_ahead: int = 5, mode: str = "fixed", half_width: float = 0.001,
                         seed: int = 0, paths_per_draw: int = 1,
                         stable_only: bool = True) -> ForecastFan:
    """Forecast fan with some coordinates pinned to given paths.

    For each draw the stacked shocks over the horizon are drawn from their
    Gaussian distribution conditional on the constraints holding exactly.
    In ``band`` mode each constrained value is first moved uniformly within
    ``+- half_width * |value|``, independently per path.
    """
    if n_ahead < 1:
        raise ConfigError("n_ahead must be >= 1")
    if mode not in ("fixed", "band"):
        raise ConfigError(f"unknown conditioning mode {mode!r}")
    if mode == "band" and not half_width > 0:
        raise ConfigError("half_width must be positive in band mode")
    x_last, t_last = _origin(draws, x_last, t_last)
    labels, dyn, idx = _collect(draws, stable_only)
    K = len(labels)
    grid = _constraint_grid(labels, constraints, n_ahead, x_last)
    hs, js = np.nonzero(np.isfinite(grid))
    target = grid[hs, js]
    rows = hs * K + js                        # positions in the stacked path vector
    nK = n_ahead * K
    paths = np.empty((len(dyn) * paths_per_draw, n_ahead, K))
    row = 0
    for m, d in zip(dyn, idx):
        rng = _rng(seed, "forecast-conditional", int(d))
        # separate stream so band and fixed fans share their shock draws
        band_rng = _rng(seed, "forecast-band", int(d))
        # stacked path = mean + M e, with e = (e_1, ..., e_n)
        mean = np.empty(nK)
        x = x_last
        for h in range(1, n_ahead + 1):
            x = m.step(x, t_last + h)
            mean[(h - 1) * K:h * K] = x
        powers = [np.eye(K)]
        for _ in range(n_ahead - 1):
            powers.append(m.F @ powers[-1])
        M = np.zeros((nK, nK))
        for h in range(n_ahead):
            for s in range(h + 1):
                M[h * K:(h + 1) * K, s * K:(s + 1) * K] = powers[h - s]
        R = M[rows]                            # constrained rows of the impact map
        Omega = np.kron(np.eye(n_ahead), m.sigma_e)
        RO = R @ Omega
        C = RO @ R.T
        s = np.linalg.svd(C, compute_uv=False)
        if s.size == 0 or s[-1] <= 1e-12 * max(s[0], 1e-300):
            raise NumericalError(
                f"constraint covariance is singular for draw {int(d)}; "
                "constraints are redundant or target shock-free variables")
        gain = np.linalg.solve(C, RO).T       # Omega R' C^-1
        L = psd_sqrt(m.sigma_e)
        for _ in range(paths_per_draw):
            tgt = target
            if mode == "band":
                tgt = target + band_rng.uniform(-1.0, 1.0, target.size) * half_width * np.abs(target)
            e = (L @ rng.standard_normal((K, n_ahead))).T.reshape(nK)
            e = e + gain @ (tgt - mean[rows] - R @ e)
            x = x_last
            for h in range(1, n_ahead + 1):
                x = m.step(x, t_last + h, e[(h - 1) * K:h * K])
                sel = hs == h - 1
                if sel.any():
                    x = x.copy()
                    x[js[sel]] = tgt[sel]   # remove floating-point residue
                paths[row, h - 1] = x
            row += 1
    cons = {labels[j]: grid[:, j].tolist() for j in sorted(set(js.tolist()))}
    return ForecastFan(n_ahead, labels, paths, _quantiles(paths), mode,
                       half_width if mode == "band" else None, cons, t_last)


@dataclass(frozen=True)
class GirfResult:
    shock_target: tuple[str, str]
    horizons: np.ndarray              # 0..H
    labels: list[tuple[str, str]]
    responses: np.ndarray             # (n_draws, H+1, K)
    quantiles: np.ndarray             # (5, H+1, K)

    @property
    def median(self) -> np.ndarray:
        return self.quantiles[2]

    def index(self, country: str, variable: str) -> int:
        try:
            return self.labels.index((country, variable))
        except ValueError:
            raise ConfigError(f"({country},{variable}) is not in the response set") from None

    def band(self, country: str, variable: str) -> np.ndarray:
        return self.quantiles[:, :, self.index(country, variable)].T

    def to_rows(self):
        rows = []
        for j, (c, v) in enumerate(self.labels):
            for h in self.horizons:
                rows.append((c, v, int(h), *self.quantiles[:, h, j]))
        return rows


def girf_single(F: np.ndarray, sigma_e: np.ndarray, j: int, H: int) -> np.ndarray:
    """(H+1, K) generalized responses to a one-s.d. shock in variable ``j``."""
    s = float(sigma_e[j, j])
    if not s > 0:
        raise DegenerateShockError(f"shocked variable {j} has zero residual variance")
    out = np.empty((H + 1, F.shape[0]))
    out[0] = sigma_e[:, j] / math.sqrt(s)
    for h in range(1, H + 1):
        out[h] = F @ out[h - 1]
    return out


def girf(draws, shock_target: tuple[str, str], H: int = 10, stable_only: bool = True) -> GirfResult:
    """Generalized impulse responses, per draw, to a one-s.d. shock."""
    if H < 0:
        raise ConfigError("H must be >= 0")
    labels, dyn, _ = _collect(draws, stable_only)
    try:
        j = labels.index(tuple(shock_target))
    except ValueError:
        raise ConfigError(f"shock target {tuple(shock_target)} is not a model variable") from None
    resp = np.stack([girf_single(m.F, m.sigma_e, j, H) for m in dyn])
    return GirfResult(tuple(shock_target), np.arange(H + 1), labels, resp, _quantiles(resp))
