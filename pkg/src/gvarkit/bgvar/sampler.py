"""Gibbs sampling of country VARX* models under a Normal-Gamma prior.

Each shrunk coefficient has prior ``beta ~ N(0, theta)`` with local scale
``theta ~ Gamma(tau, rate = tau * lambda2 / 2)``. The global scale
``lambda2`` is shared within a coefficient group; groups belonging to the
same lag chain (own lags, or foreign lags 0, 1, ...) use cumulative
products ``lambda2_l = nu_1 ... nu_l`` with ``nu_s ~ Gamma(d, e)``, so
higher lags are shrunk at least as hard as lower ones. Deterministic terms
get a fixed vague normal prior and the residual covariance an inverse
Wishart prior.

The sampler cycles through coefficients, local scales, global scales and
residual covariance. Retained draws are stacked into global models and
flagged for stability.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg as sla
from scipy import stats

from ..errors import AnalysisError, ConfigError, InsufficientDataError, SamplerError
from ..gvar import (
    COND_MAX,
    CountryModel,
    GlobalModel,
    LinkMatrix,
    build_link,
    build_star,
    solve_global,
    varx_design,
)
from ..linalg import is_stable_radius
from ..panel import Panel, WeightMatrix, align_weights
from .gig import rgig


@dataclass(frozen=True)
class NGPrior:
    """Normal-Gamma hyperparameters.

    tau: shape of the local-scale Gamma (smaller means heavier tails).
    d_lambda, e_lambda: shape and rate of the global-scale Gamma hyperprior.
    det_prior_var: prior variance of constant and trend coefficients.
    sigma_df_extra: inverse-Wishart degrees of freedom beyond k.
    """

    tau: float = 0.7
    d_lambda: float = 0.01
    e_lambda: float = 0.01
    det_prior_var: float = 100.0
    sigma_df_extra: float = 2.0

    def __post_init__(self):
        for name in ("tau", "d_lambda", "e_lambda", "det_prior_var"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ConfigError(f"prior hyperparameter {name} must be positive and finite, got {val}")
        if not np.isfinite(self.sigma_df_extra) or self.sigma_df_extra <= 1.0:
            raise ConfigError("sigma_df_extra must exceed 1 so the prior mean of Sigma exists")


@dataclass(frozen=True)
class NGChain:
    """Retained output of one Gibbs chain for a regression Y = X B + E."""

    coefs: np.ndarray        # (n, m, k)
    sigmas: np.ndarray       # (n, k, k)
    cond_means: np.ndarray   # (n, m, k) conditional posterior means of B
    lambda2: np.ndarray      # (n, n_groups)

    @property
    def posterior_mean(self) -> np.ndarray:
        """Rao-Blackwellised posterior mean of the coefficients."""
        return self.cond_means.mean(axis=0)


def ng_gibbs(Y, X, groups: Sequence[int], prior: NGPrior, n_draws: int, n_burn: int,
             thin: int, rng: np.random.Generator, chains: Sequence[Sequence[int]] | None = None,
             sigma_scale=None) -> NGChain:
    """Gibbs sampler for a multivariate regression with NG shrinkage.

    ``groups[j]`` is the shrinkage group of regressor row j, or -1 for an
    unshrunk (deterministic) regressor. ``chains`` lists groups in lag order
    whose global scales multiply; by default each group stands alone.
    ``sigma_scale`` is the prior mean of the residual variances (defaults
    to the sample variances of Y).
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, k = Y.shape
    m = X.shape[1]
    groups = np.asarray(groups, dtype=int)
    if groups.shape != (m,):
        raise ConfigError("one group label per regressor is required")
    if n_draws < 1 or n_burn < 0 or thin < 1:
        raise ConfigError("need n_draws >= 1, n_burn >= 0 and thin >= 1")
    group_ids = sorted(set(groups[groups >= 0].tolist()))
    if chains is None:
        chains = [[g] for g in group_ids]
    chains = [list(c) for c in chains]
    if sorted(g for c in chains for g in c) != group_ids:
        raise ConfigError("lag chains must cover every shrinkage group exactly once")
    shrunk = groups >= 0
    gpos = {g: i for i, g in enumerate(group_ids)}
    n_groups = len(group_ids)
    group_counts = np.array([np.sum(groups == g) * k for g in group_ids], dtype=float)

    tau = prior.tau
    nu0 = k + prior.sigma_df_extra
    if sigma_scale is None:
        sigma_scale = Y.var(axis=0)
    sigma_scale = np.maximum(np.asarray(sigma_scale, dtype=float), 1e-12)
    S0 = np.diag(sigma_scale) * (nu0 - k - 1.0)

    XtX = X.T @ X
    XtY = X.T @ Y
    ridge = XtX + np.eye(m) * (1e-6 * np.trace(XtX) / m + 1e-12)
    B = np.linalg.solve(ridge, XtY)
    E = Y - X @ B
    Sigma = (S0 + E.T @ E) / (nu0 + n - k - 1.0)
    theta = np.ones((m, k))
    nu = np.ones(n_groups)
    lam2 = np.ones(n_groups)

    total = n_burn + n_draws * thin
    out_B = np.empty((n_draws, m, k))
    out_S = np.empty((n_draws, k, k))
    out_M = np.empty((n_draws, m, k))
    out_L = np.empty((n_draws, n_groups))
    det_var = np.full((m, k), prior.det_prior_var)
    stored = 0
    for it in range(total):
        # coefficients | Sigma, theta
        V0 = np.where(shrunk[:, None], theta, det_var)
        try:
            S_inv = np.linalg.inv(Sigma)
            P = np.kron(S_inv, XtX)
            P[np.diag_indices_from(P)] += 1.0 / V0.ravel(order="F")
            rhs = (XtY @ S_inv).ravel(order="F")
            L = np.linalg.cholesky(P)
        except np.linalg.LinAlgError as exc:
            raise SamplerError(f"coefficient posterior not positive definite: {exc}", it) from None
        mean = sla.cho_solve((L, True), rhs)
        z = rng.standard_normal(m * k)
        beta = mean + sla.solve_triangular(L.T, z, lower=False)
        B = beta.reshape((m, k), order="F")
        M = mean.reshape((m, k), order="F")

        # local scales | beta, lambda2
        if n_groups:
            lam_row = lam2[np.array([gpos[g] for g in groups[shrunk]])]
            b2 = B[shrunk] ** 2
            theta_s = rgig(tau - 0.5, tau * lam_row[:, None] * np.ones((1, k)), b2, rng)
            theta[shrunk] = np.maximum(theta_s, 1e-300)

            # global scales | theta, one cumulative chain at a time
            sums = np.array([theta[groups == g].sum() for g in group_ids])
            for chain in chains:
                idx = [gpos[g] for g in chain]
                for s in range(len(idx)):
                    shape = prior.d_lambda + tau * group_counts[idx[s:]].sum()
                    rate = prior.e_lambda
                    for l in range(s, len(idx)):
                        others = np.prod([nu[idx[r]] for r in range(l + 1) if r != s])
                        rate += 0.5 * tau * others * sums[idx[l]]
                    nu[idx[s]] = rng.gamma(shape, 1.0 / rate)
                lam2[idx] = np.cumprod(nu[idx])

        # residual covariance | beta
        E = Y - X @ B
        scale = S0 + E.T @ E
        scale = 0.5 * (scale + scale.T)
        try:
            Sigma = stats.invwishart.rvs(df=nu0 + n, scale=scale, random_state=rng)
            Sigma = np.atleast_2d(Sigma)
            np.linalg.cholesky(Sigma)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SamplerError(f"residual covariance draw is not positive definite: {exc}", it) from None

        if it >= n_burn and (it - n_burn) % thin == 0:
            out_B[stored] = B
            out_S[stored] = Sigma
            out_M[stored] = M
            out_L[stored] = lam2
            stored += 1
    return NGChain(out_B, out_S, out_M, out_L)


def substream(seed: int, *keys) -> np.random.Generator:
    """Independent generator derived from ``seed`` and a tuple of names/ints."""
    spawn = tuple(zlib.crc32(str(k).encode()) if not isinstance(k, int) else k for k in keys)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn))


def _ar1_variances(x_block: np.ndarray) -> np.ndarray:
    out = np.empty(x_block.shape[1])
    for j in range(x_block.shape[1]):
        y = x_block[1:, j]
        Z = np.column_stack([np.ones(len(y)), x_block[:-1, j]])
        coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
        r = y - Z @ coef
        out[j] = max(float(r @ r) / max(len(y) - 2, 1), 1e-12)
    return out


def country_groups(k: int, k_star: int, deterministic: str):
    """Group labels for the VARX* regressors and the lag chains.

    Group 0: own lags; group 1: contemporaneous foreign; group 2: lagged
    foreign. Foreign groups form one lag chain.
    """
    n_det = 2 if deterministic == "constant_trend" else 1
    groups = [-1] * n_det + [0] * k + [1] * k_star + [2] * k_star
    chains = [[0], [1, 2]] if k_star else [[0]]
    return groups, chains


@dataclass(frozen=True)
class PosteriorDraws:
    countries: tuple[str, ...]
    variables: tuple[str, ...]
    deterministic: str
    weights: WeightMatrix
    coefs: dict[str, np.ndarray]        # country -> (n, 2 + 3k, k) CountryModel layout
    sigmas: dict[str, np.ndarray]       # country -> (n, k, k)
    coef_means: dict[str, np.ndarray]   # Rao-Blackwellised posterior means
    F: np.ndarray                       # (n, K, K)
    b0: np.ndarray
    b1: np.ndarray
    sigma_e: np.ndarray
    spectral_radii: np.ndarray
    stable_flags: np.ndarray
    n_burn: int
    thin: int
    seed: int
    config_hash: str = ""
    t_last: int = 0
    x_last: np.ndarray | None = None
    indices: np.ndarray | None = None   # original draw numbers
    lambda2: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.F.shape[0]

    def __len__(self) -> int:
        return self.n_draws

    @property
    def draws(self) -> list[GlobalModel]:
        return [self.global_model(d) for d in range(self.n_draws)]

    @property
    def links(self) -> list[LinkMatrix]:
        return build_link(self.countries, len(self.variables), self.weights)

    def country_model(self, country: str, d: int) -> CountryModel:
        return CountryModel.from_coefficients(
            country, self.coefs[country][d], len(self.variables), self.sigmas[country][d],
            deterministic=self.deterministic,
        )

    def mean_country_model(self, country: str) -> CountryModel:
        return CountryModel.from_coefficients(
            country, self.coef_means[country], len(self.variables),
            self.sigmas[country].mean(axis=0), deterministic=self.deterministic,
        )

    def global_model(self, d: int) -> GlobalModel:
        from ..gvar import stack_global

        models = [self.country_model(c, d) for c in self.countries]
        return stack_global(models, self.links, self.variables, cond_max=np.inf)

    def models(self, stable_only: bool = True) -> list[GlobalModel]:
        idx = np.flatnonzero(self.stable_flags) if stable_only else np.arange(self.n_draws)
        if stable_only and idx.size == 0:
            raise AnalysisError("no stable posterior draws; tighten shrinkage or difference the data")
        return [self.global_model(int(d)) for d in idx]

    def subset(self, idx) -> "PosteriorDraws":
        idx = np.asarray(idx, dtype=int)
        base = self.indices if self.indices is not None else np.arange(self.n_draws)
        return replace(
            self,
            coefs={c: a[idx] for c, a in self.coefs.items()},
            sigmas={c: a[idx] for c, a in self.sigmas.items()},
            lambda2={c: a[idx] for c, a in self.lambda2.items()},
            F=self.F[idx], b0=self.b0[idx], b1=self.b1[idx], sigma_e=self.sigma_e[idx],
            spectral_radii=self.spectral_radii[idx], stable_flags=self.stable_flags[idx],
            indices=base[idx],
        )

    def parameter_chains(self) -> tuple[np.ndarray, list[str]]:
        """All coefficient chains as an (n, P) matrix with names."""
        cols, names = [], []
        for c in self.countries:
            a = self.coefs[c]
            n, m, k = a.shape
            keep = np.ones(m, dtype=bool)
            if self.deterministic == "constant":
                keep[1] = False
            block = a[:, keep, :].reshape(n, -1)
            cols.append(block)
            rows = np.flatnonzero(keep)
            names.extend(f"{c}.{self.variables[eq]}.r{r}" for r in rows for eq in range(k))
        return np.hstack(cols), names


def stack_draws(countries, variables, coefs, sigmas, weights, deterministic,
                cond_max: float = COND_MAX):
    """Solve every draw's global system; returns F, b0, b1, sigma_e arrays."""
    n = next(iter(coefs.values())).shape[0]
    links = build_link(countries, len(variables), weights)
    K = len(countries) * len(variables)
    F = np.empty((n, K, K))
    b0 = np.empty((n, K))
    b1 = np.empty((n, K))
    Se = np.empty((n, K, K))
    for d in range(n):
        ms = [CountryModel.from_coefficients(c, coefs[c][d], len(variables), sigmas[c][d],
                                             deterministic=deterministic) for c in countries]
        G = np.vstack([m.A @ lk.W for m, lk in zip(ms, links)])
        H = np.vstack([m.B @ lk.W for m, lk in zip(ms, links)])
        a0 = np.concatenate([m.a_i0 for m in ms])
        a1 = np.concatenate([m.a_i1 for m in ms])
        Sg = sla.block_diag(*[m.sigma_i for m in ms])
        try:
            gm = solve_global(countries, variables, G, H, a0, a1, Sg,
                              [m.k_i for m in ms], cond_max)
        except Exception as exc:
            raise SamplerError(f"global system not solvable: {exc}", d) from None
        F[d], b0[d], b1[d], Se[d] = gm.F, gm.b0, gm.b1, gm.sigma_e
    return F, b0, b1, Se


def stability_flags(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral radii and strict-inequality stability flags for stacked F."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 2:
        F = F[None]
    radii = np.array([np.max(np.abs(np.linalg.eigvals(f))) if f.size else 0.0 for f in F])
    return radii, is_stable_radius(radii)


def sample_posterior(panel: Panel, weights: WeightMatrix, prior: NGPrior | None = None,
                     n_draws: int = 1000, n_burn: int = 1000, thin: int = 1, seed: int = 0,
                     deterministic: str = "constant_trend", threads: int = 1,
                     config_hash: str = "", stage: str = "bgvar",
                     min_draws: int = 100) -> PosteriorDraws:
    """Sample all country models and stack each retained draw.

    Each country runs its own chain on a generator derived from
    ``(seed, stage, country index)``, so results do not depend on
    ``threads``.
    """
    prior = prior or NGPrior()
    if n_draws < min_draws:
        raise ConfigError(f"n_draws must be >= {min_draws}, got {n_draws}")
    weights = align_weights(weights, panel.countries)
    k = len(panel.variables)
    T = len(panel.time_index)
    if T < 4:
        raise InsufficientDataError(f"{T} periods are too few for a VARX*(1,1)")

    def run(ci: int):
        c = panel.countries[ci]
        x = panel.country_block(c)
        star = build_star(panel, weights, c)
        Y, X, _ = varx_design(x, star, deterministic, panel.variables)
        groups, chains = country_groups(k, k, deterministic)
        rng = substream(seed, stage, ci)
        ch = ng_gibbs(Y, X, groups, prior, n_draws, n_burn, thin, rng, chains,
                      sigma_scale=_ar1_variances(x))
        coefs, means = ch.coefs, ch.posterior_mean
        if deterministic == "constant":
            coefs = np.insert(coefs, 1, 0.0, axis=1)
            means = np.insert(means, 1, 0.0, axis=0)
        return c, coefs, ch.sigmas, means, ch.lambda2

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(panel.countries))))
    else:
        results = [run(ci) for ci in range(len(panel.countries))]
    coefs = {c: b for c, b, _, _, _ in results}
    sigmas = {c: s for c, _, s, _, _ in results}
    means = {c: m for c, _, _, m, _ in results}
    lam = {c: lmb for c, _, _, _, lmb in results}
    F, b0, b1, Se = stack_draws(panel.countries, panel.variables, coefs, sigmas, weights,
                                deterministic, cond_max=np.inf)
    radii, flags = stability_flags(F)
    return PosteriorDraws(
        countries=panel.countries,
        variables=panel.variables,
        deterministic=deterministic,
        weights=weights,
        coefs=coefs,
        sigmas=sigmas,
        coef_means=means,
        F=F, b0=b0, b1=b1, sigma_e=Se,
        spectral_radii=radii,
        stable_flags=flags,
        n_burn=n_burn,
        thin=thin,
        seed=seed,
        config_hash=config_hash,
        t_last=T,
        x_last=panel.global_matrix()[-1].copy(),
        lambda2=lam,
    )


@dataclass(frozen=True)
class StableSubset:
    draws: object            # PosteriorDraws or list of GlobalModel
    indices: np.ndarray
    fraction: float
    n_total: int

    def summary(self) -> str:
        return (f"{len(self.indices)} of {self.n_total} posterior draws are stable "
                f"({100.0 * self.fraction:.2f}%)")


def filter_stable(draws: PosteriorDraws | Iterable[GlobalModel]) -> StableSubset:
    """Keep draws whose companion matrix has spectral radius strictly below 1."""
    if isinstance(draws, PosteriorDraws):
        flags = draws.stable_flags
        idx = np.flatnonzero(flags)
        n = draws.n_draws
        if idx.size == 0:
            raise AnalysisError(
                f"none of {n} posterior draws is stable; tighten the shrinkage prior "
                "or difference the data"
            )
        return StableSubset(draws.subset(idx), idx, idx.size / n, n)
    models = list(draws)
    n = len(models)
    if n == 0:
        raise AnalysisError("no draws to filter")
    _, flags = stability_flags(np.stack([m.F for m in models]))
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        raise AnalysisError(
            f"none of {n} posterior draws is stable; tighten the shrinkage prior "
            "or difference the data"
        )
    return StableSubset([models[i] for i in idx], idx, idx.size / n, n)


def posterior_mean_residuals(draws: PosteriorDraws, panel: Panel) -> dict[str, np.ndarray]:
    """Country residuals evaluated at the posterior-mean coefficients."""
    weights = align_weights(draws.weights, panel.countries)
    out = {}
    for c in panel.countries:
        x = panel.country_block(c)
        star = build_star(panel, weights, c)
        Y, X, _ = varx_design(x, star, "constant_trend")
        out[c] = Y - X @ draws.coef_means[c]
    return out
