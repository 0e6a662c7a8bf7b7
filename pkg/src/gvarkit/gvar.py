"""Two-layer global VAR.

Country models are VARX*(1,1):

    x_it = a_i0 + a_i1 t + Psi_i1 x_i,t-1 + Lambda_i0 x*_it + Lambda_i1 x*_i,t-1 + eps_it

with foreign ("star") variables built as trade-weighted averages of the
other countries. With link matrices ``z_it = W_i x_t`` the country models
stack into ``G x_t = a0 + a1 t + H x_t-1 + eps_t`` which is solved as
``x_t = b0 + b1 t + F x_t-1 + e_t``.

Time ``t`` is the 1-based position of a period in the estimation panel.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg as sla

from .errors import (
    CollinearityError,
    ConfigError,
    DataError,
    DegenerateInputError,
    InsufficientDataError,
    SolvabilityError,
)
from .linalg import is_stable_radius, lstsq_qr, spectral_radius
from .panel import ROW_STOCHASTIC, Panel, WeightMatrix, align_weights

COND_MAX = 1e10
FORMAT_TAG = "GVARKIT-GLOBAL-MODEL"
FORMAT_VERSION = 1


def build_star(panel: Panel, weights: WeightMatrix, country: str) -> np.ndarray:
    """Foreign variables of ``country`` as a (time, variable) block."""
    if weights.mode != ROW_STOCHASTIC:
        raise ConfigError(
            f"star variables need row_stochastic weights, got {weights.mode}"
        )
    missing = [c for c in weights.countries if c not in panel.countries]
    if missing:
        raise ConfigError(f"panel lacks countries present in weights: {missing}")
    if country not in weights.countries:
        raise ConfigError(f"country {country!r} not in weight matrix")
    row = weights.row(country)
    out = np.zeros((len(panel.time_index), len(panel.variables)))
    for j, other in enumerate(weights.countries):
        if row[j] != 0.0:
            out += row[j] * panel.country_block(other)
    return out


@dataclass(frozen=True)
class CountryModel:
    country: str
    a_i0: np.ndarray          # (k_i,)
    a_i1: np.ndarray          # (k_i,)
    psi_i1: np.ndarray        # (k_i, k_i)
    lambda_i0: np.ndarray     # (k_i, k_i*)
    lambda_i1: np.ndarray     # (k_i, k_i*)
    sigma_i: np.ndarray       # (k_i, k_i)
    residuals: np.ndarray | None = None  # (T - 1, k_i), rows for t = 2 .. T
    stderr: np.ndarray | None = None     # (m, k_i) in regressor order
    deterministic: str = "constant_trend"

    def __post_init__(self):
        k = self.psi_i1.shape[0]
        ks = self.lambda_i0.shape[1]
        shapes = {
            "a_i0": (self.a_i0.shape, (k,)),
            "a_i1": (self.a_i1.shape, (k,)),
            "psi_i1": (self.psi_i1.shape, (k, k)),
            "lambda_i0": (self.lambda_i0.shape, (k, ks)),
            "lambda_i1": (self.lambda_i1.shape, (k, ks)),
            "sigma_i": (self.sigma_i.shape, (k, k)),
        }
        bad = {n: s for n, s in shapes.items() if s[0] != s[1]}
        if bad:
            raise DataError(f"inconsistent country model dimensions: {bad}")

    @property
    def k_i(self) -> int:
        return self.psi_i1.shape[0]

    @property
    def k_i_star(self) -> int:
        return self.lambda_i0.shape[1]

    @property
    def A(self) -> np.ndarray:
        return np.hstack([np.eye(self.k_i), -self.lambda_i0])

    @property
    def B(self) -> np.ndarray:
        return np.hstack([self.psi_i1, self.lambda_i1])

    def coefficient_matrix(self) -> np.ndarray:
        """Coefficients stacked in regressor order, shape (m, k_i)."""
        return np.vstack([self.a_i0[None], self.a_i1[None], self.psi_i1.T,
                          self.lambda_i0.T, self.lambda_i1.T])

    @classmethod
    def from_coefficients(cls, country: str, coef: np.ndarray, k_star: int,
                          sigma: np.ndarray, **kw) -> "CountryModel":
        """Inverse of :meth:`coefficient_matrix`."""
        k = coef.shape[1]
        a0, a1 = coef[0], coef[1]
        psi = coef[2:2 + k].T
        l0 = coef[2 + k:2 + k + k_star].T
        l1 = coef[2 + k + k_star:2 + k + 2 * k_star].T
        return cls(country, a0.copy(), a1.copy(), psi.copy(), l0.copy(), l1.copy(),
                   np.array(sigma, dtype=float), **kw)


def varx_design(x_block: np.ndarray, star_block: np.ndarray, deterministic: str,
                names: Sequence[str] | None = None):
    """Response and regressors of a VARX*(1,1), with column names.

    Columns: constant, trend, own lags, contemporaneous stars, lagged stars.
    Without a trend the trend column is omitted.
    """
    T, k = x_block.shape
    ks = star_block.shape[1]
    names = list(names) if names is not None else [f"x{j}" for j in range(k)]
    star_names = [f"{nm}*" for nm in names[:ks]] if ks <= len(names) else [f"s{j}*" for j in range(ks)]
    t = np.arange(2.0, T + 1.0)[:, None]
    cols = [np.ones((T - 1, 1))]
    cnames = ["const"]
    if deterministic == "constant_trend":
        cols.append(t)
        cnames.append("trend")
    elif deterministic != "constant":
        raise ConfigError(f"unknown deterministic specification {deterministic!r}")
    cols += [x_block[:-1], star_block[1:], star_block[:-1]]
    cnames += [f"{n}.L1" for n in names] + star_names + [f"{n}.L1" for n in star_names]
    return x_block[1:], np.hstack(cols), cnames


def estimate_varx(x_block, star_block, deterministic: str = "constant_trend",
                  country: str = "", names: Sequence[str] | None = None) -> CountryModel:
    """Least-squares estimate of a country VARX*(1,1).

    Star variables are treated as weakly exogenous regressors. An empty
    ``star_block`` (zero columns) gives the plain VAR(1) with trend.
    """
    x_block = np.asarray(x_block, dtype=float)
    star_block = np.asarray(star_block, dtype=float)
    if x_block.ndim == 1:
        x_block = x_block[:, None]
    if star_block.ndim == 1:
        star_block = star_block[:, None]
    if star_block.shape[0] != x_block.shape[0]:
        raise ConfigError("country and star blocks must be aligned in time")
    T, k = x_block.shape
    ks = star_block.shape[1]
    if ks and np.any(np.ptp(star_block, axis=0) == 0):
        bad = [j for j in range(ks) if np.ptp(star_block[:, j]) == 0]
        raise DegenerateInputError(f"zero-variance star variables at columns {bad} for {country!r}")
    Y, X, cnames = varx_design(x_block, star_block, deterministic, names)
    if Y.shape[0] <= X.shape[1]:
        raise InsufficientDataError(
            f"{country or 'country'}: {Y.shape[0]} observations cannot identify {X.shape[1]} regressors"
        )
    try:
        fit = lstsq_qr(X, Y, cnames)
    except CollinearityError as exc:
        raise CollinearityError(f"{country or 'country'}: {exc}", exc.columns) from None
    n, m = X.shape
    resid = fit.resid
    sigma = resid.T @ resid / (n - m)
    sigma = 0.5 * (sigma + sigma.T)
    coef = fit.coef
    if deterministic == "constant":
        coef = np.vstack([coef[:1], np.zeros((1, k)), coef[1:]])
        stderr_rows = np.sqrt(np.diag(fit.xtx_inv))
        stderr_rows = np.concatenate([stderr_rows[:1], [0.0], stderr_rows[1:]])
    else:
        stderr_rows = np.sqrt(np.diag(fit.xtx_inv))
    stderr = np.outer(stderr_rows, np.sqrt(np.diag(sigma)))
    return CountryModel.from_coefficients(
        country, coef, ks, sigma, residuals=resid, stderr=stderr, deterministic=deterministic
    )


@dataclass(frozen=True)
class LinkMatrix:
    country: str
    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float, copy=True)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)


def global_labels(countries: Sequence[str], variables: Sequence[str]) -> list[tuple[str, str]]:
    return [(c, v) for c in countries for v in variables]


def build_link(countries: Sequence[str], variable_counts: Sequence[int] | int,
               weights: WeightMatrix, country: str | None = None,
               star: bool = True) -> LinkMatrix | list[LinkMatrix]:
    """Link matrices mapping the global vector to (x_it, x*_it).

    The global vector is ordered country-major. Every country must carry the
    same number of variables, so star variable v averages variable v of the
    other countries. Returns one LinkMatrix when ``country`` is given,
    otherwise one per country.
    """
    countries = list(countries)
    if tuple(countries) != weights.countries:
        raise ConfigError(
            f"country ordering {countries} does not match weights {list(weights.countries)}"
        )
    if weights.mode != ROW_STOCHASTIC:
        raise ConfigError("link matrices need row_stochastic weights")
    if isinstance(variable_counts, int):
        variable_counts = [variable_counts] * len(countries)
    counts = list(variable_counts)
    if len(counts) != len(countries):
        raise ConfigError("one variable count per country is required")
    if len(set(counts)) != 1:
        raise ConfigError("all countries must carry the same variables for star construction")
    kv = counts[0]
    k = kv * len(countries)

    def one(i: int) -> LinkMatrix:
        W = np.zeros((2 * kv if star else kv, k))
        W[np.arange(kv), i * kv + np.arange(kv)] = 1.0
        if star:
            for j in range(len(countries)):
                w = weights.w[i, j]
                if w != 0.0:
                    W[kv + np.arange(kv), j * kv + np.arange(kv)] = w
        return LinkMatrix(countries[i], W)

    if country is not None:
        return one(countries.index(country))
    return [one(i) for i in range(len(countries))]


@dataclass(frozen=True)
class GlobalModel:
    countries: tuple[str, ...]
    variables: tuple[str, ...]
    G: np.ndarray
    H: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    sigma_eps: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    F: np.ndarray
    sigma_e: np.ndarray
    cond_G: float
    country_sizes: tuple[int, ...] = field(default=())

    @property
    def k(self) -> int:
        return self.F.shape[0]

    @property
    def labels(self) -> list[tuple[str, str]]:
        return global_labels(self.countries, self.variables)

    def index(self, country: str, variable: str) -> int:
        try:
            return self.labels.index((country, variable))
        except ValueError:
            raise ConfigError(f"({country},{variable}) is not a model variable") from None

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.F)

    @property
    def is_stable(self) -> bool:
        return bool(is_stable_radius(self.spectral_radius))

    def step(self, x_prev: np.ndarray, t: float, shock=None) -> np.ndarray:
        """One step of the solved system at time ``t``."""
        x = self.b0 + self.b1 * t + self.F @ x_prev
        if shock is not None:
            x = x + shock
        return x

    def iterate(self, x_last, t_last: int, n_ahead: int) -> np.ndarray:
        """Deterministic path x_{T+1..T+n} with all shocks at zero."""
        x = np.asarray(x_last, dtype=float)
        out = np.empty((n_ahead, self.k))
        for h in range(1, n_ahead + 1):
            x = self.step(x, t_last + h)
            out[h - 1] = x
        return out

    def residuals(self, X: np.ndarray, t0: int = 1) -> np.ndarray:
        """Stacked structural residuals G x_t - a0 - a1 t - H x_{t-1}.

        ``X`` holds x_t in rows with the first row at time ``t0``; the result
        covers times t0+1 .. t0+len(X)-1.
        """
        X = np.asarray(X, dtype=float)
        t = np.arange(t0 + 1, t0 + len(X))[:, None]
        return X[1:] @ self.G.T - self.a0 - t * self.a1 - X[:-1] @ self.H.T

    def to_text(self) -> str:
        return dumps_global_model(self)


def _block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0))


def solve_global(countries, variables, G, H, a0, a1, sigma_eps, country_sizes=(),
                 cond_max: float = COND_MAX) -> GlobalModel:
    """Premultiply the stacked system by G^-1."""
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > cond_max:
        culprit = _nearest_singular_block(G, countries, country_sizes)
        raise SolvabilityError(
            f"G is singular or ill-conditioned (condition number {cond:.3g} > {cond_max:.3g}); "
            f"nearest-singular block: {culprit}"
        )
    lu = sla.lu_factor(G)
    # C order keeps matrix-vector products bitwise identical wherever F is stored
    F = np.ascontiguousarray(sla.lu_solve(lu, H))
    b0 = sla.lu_solve(lu, a0)
    b1 = sla.lu_solve(lu, a1)
    g_inv = sla.lu_solve(lu, np.eye(G.shape[0]))
    sigma_e = g_inv @ sigma_eps @ g_inv.T
    sigma_e = np.ascontiguousarray(0.5 * (sigma_e + sigma_e.T))
    return GlobalModel(tuple(countries), tuple(variables), G, H, a0, a1, sigma_eps,
                       b0, b1, F, sigma_e, cond, tuple(country_sizes))


def _nearest_singular_block(G: np.ndarray, countries, sizes) -> str:
    if not sizes or not np.all(np.isfinite(G)):
        return "unknown"
    u, s, vt = np.linalg.svd(G)
    weight = np.abs(u[:, -1])
    bounds = np.cumsum([0, *sizes])
    scores = [weight[bounds[i]:bounds[i + 1]].sum() for i in range(len(sizes))]
    return countries[int(np.argmax(scores))]


def stack_global(models: Sequence[CountryModel], links: Sequence[LinkMatrix],
                 variables: Sequence[str] | None = None,
                 cond_max: float = COND_MAX) -> GlobalModel:
    """Stack country models through their link matrices and solve."""
    if len(models) != len(links):
        raise ConfigError("one link matrix per country model is required")
    for m, lk in zip(models, links):
        if m.country != lk.country:
            raise ConfigError(f"model {m.country!r} paired with link matrix of {lk.country!r}")
        if lk.W.shape[0] != m.k_i + m.k_i_star:
            raise ConfigError(f"link matrix of {m.country!r} has {lk.W.shape[0]} rows, "
                              f"expected {m.k_i + m.k_i_star}")
    k = links[0].W.shape[1]
    if sum(m.k_i for m in models) != k:
        raise ConfigError("country dimensions do not add up to the global dimension")
    G = np.vstack([m.A @ lk.W for m, lk in zip(models, links)])
    H = np.vstack([m.B @ lk.W for m, lk in zip(models, links)])
    a0 = np.concatenate([m.a_i0 for m in models])
    a1 = np.concatenate([m.a_i1 for m in models])
    sigma_eps = _block_diag([m.sigma_i for m in models])
    countries = [m.country for m in models]
    if variables is None:
        variables = [f"v{j}" for j in range(models[0].k_i)]
    return solve_global(countries, variables, G, H, a0, a1, sigma_eps,
                        [m.k_i for m in models], cond_max)


@dataclass(frozen=True)
class GvarFit:
    model: GlobalModel
    country_models: tuple[CountryModel, ...]
    links: tuple[LinkMatrix, ...]
    weights: WeightMatrix


def estimate_gvar(panel: Panel, weights: WeightMatrix, deterministic: str = "constant_trend",
                  cond_max: float = COND_MAX, threads: int = 1) -> GvarFit:
    """Estimate every country VARX*(1,1) by least squares and stack them."""
    weights = align_weights(weights, panel.countries)

    def fit(c: str) -> CountryModel:
        return estimate_varx(panel.country_block(c), build_star(panel, weights, c),
                             deterministic, c, panel.variables)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(fit, panel.countries))
    else:
        models = [fit(c) for c in panel.countries]
    links = build_link(panel.countries, len(panel.variables), weights)
    gm = stack_global(models, links, panel.variables, cond_max)
    return GvarFit(gm, tuple(models), tuple(links), weights)


def simulate_global(model: GlobalModel, T: int, rng: np.random.Generator,
                    x0=None, t0: int = 1) -> np.ndarray:
    """Simulate T rows x_t0 .. x_{t0+T-1} from the solved system."""
    k = model.k
    chol = np.linalg.cholesky(model.sigma_eps)
    g_inv = np.linalg.inv(model.G)
    x = np.zeros(k) if x0 is None else np.asarray(x0, dtype=float)
    out = np.empty((T, k))
    out[0] = x
    for i in range(1, T):
        e = g_inv @ (chol @ rng.standard_normal(k))
        out[i] = model.step(out[i - 1], t0 + i, e)
    return out


_BLOCKS = ("G", "H", "a0", "a1", "sigma_eps", "b0", "b1", "F", "sigma_e")


def dumps_global_model(model: GlobalModel) -> str:
    """Plain-text serialisation: a dimension header then row-major blocks.

    Layout::

        GVARKIT-GLOBAL-MODEL 1
        k <k>
        countries <c1> <c2> ...
        country_sizes <n1> <n2> ...
        variables <v1> <v2> ...
        cond_G <float>
        block <name> <rows> <cols>
        <row values separated by spaces>
        ...

    Floats use the shortest round-trip representation.
    """
    buf = io.StringIO()
    buf.write(f"{FORMAT_TAG} {FORMAT_VERSION}\n")
    buf.write(f"k {model.k}\n")
    buf.write("countries " + " ".join(model.countries) + "\n")
    buf.write("country_sizes " + " ".join(str(s) for s in model.country_sizes) + "\n")
    buf.write("variables " + " ".join(model.variables) + "\n")
    buf.write(f"cond_G {model.cond_G!r}\n")
    for name in _BLOCKS:
        arr = np.atleast_2d(getattr(model, name))
        if name in ("a0", "a1", "b0", "b1"):
            arr = arr.reshape(1, -1)
        buf.write(f"block {name} {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            buf.write(" ".join(repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


def loads_global_model(text: str) -> GlobalModel:
    lines = text.splitlines()
    if not lines or lines[0].split()[:1] != [FORMAT_TAG]:
        raise DataError("not a global model file")
    if int(lines[0].split()[1]) != FORMAT_VERSION:
        raise DataError(f"unsupported global model format version {lines[0].split()[1]}")
    header: dict[str, list[str]] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("block "):
        key, *vals = lines[i].split(" ")
        header[key] = [v for v in vals if v]
        i += 1
    blocks: dict[str, np.ndarray] = {}
    while i < len(lines):
        _, name, r, c = lines[i].split()
        r, c = int(r), int(c)
        rows = [[float(x) for x in lines[i + 1 + j].split()] for j in range(r)]
        arr = np.array(rows, dtype=float).reshape(r, c)
        blocks[name] = arr.ravel() if name in ("a0", "a1", "b0", "b1") else arr
        i += 1 + r
    return GlobalModel(
        countries=tuple(header["countries"]),
        variables=tuple(header["variables"]),
        cond_G=float(header["cond_G"][0]),
        country_sizes=tuple(int(s) for s in header.get("country_sizes", [])),
        **{name: blocks[name] for name in _BLOCKS},
    )


def save_global_model(model: GlobalModel, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps_global_model(model), encoding="utf-8")
    return path


def load_global_model(path: str | Path) -> GlobalModel:
    return loads_global_model(Path(path).read_text(encoding="utf-8"))


def country_residuals(models: Sequence[CountryModel]) -> Mapping[str, np.ndarray]:
    return {m.country: m.residuals for m in models}
