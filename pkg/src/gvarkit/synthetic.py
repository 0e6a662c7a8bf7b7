"""Synthetic panels and trade flows drawn from a known global model."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .gvar import CountryModel, GlobalModel, build_link, simulate_global, stack_global
from .panel import DEFAULT_VARIABLES, ROW_STOCHASTIC, Panel, WeightMatrix, build_weights

REFERENCE_COUNTRIES = ("China", "Indonesia", "Malaysia", "Singapore", "Vietnam")
# rows "from", columns "to"; display values of the normalised trade matrix
REFERENCE_DISPLAY = np.array([
    [0.0, 0.7173, 0.9806, 0.6891, 1.0000],
    [0.6844, 0.0, 0.0726, 0.1330, 0.0219],
    [0.5861, 0.0619, 0.0, 0.4591, 0.0351],
    [0.8220, 0.1213, 0.7271, 0.0, 0.0737],
    [0.7179, 0.0, 0.0198, 0.0101, 0.0],
])


def reference_raw_flows(scale: float = 52_830.0) -> np.ndarray:
    """Raw bilateral flows (arbitrary units) proportional to the reference display weights."""
    return REFERENCE_DISPLAY * scale


def random_country_models(countries: Sequence[str], k: int, rng: np.random.Generator,
                          own: tuple[float, float] = (0.2, 0.6),
                          foreign0: float = 0.15, foreign1: float = 0.1,
                          noise: float = 0.01, trend: float = 0.0) -> list[CountryModel]:
    """Stable-by-construction VARX*(1,1) country models."""
    models = []
    for c in countries:
        psi = np.diag(rng.uniform(*own, size=k)) + rng.uniform(-0.05, 0.05, (k, k)) * (1 - np.eye(k))
        l0 = rng.uniform(-foreign0, foreign0, (k, k))
        l1 = rng.uniform(-foreign1, foreign1, (k, k))
        a0 = rng.uniform(0.0, 0.01, k)
        a1 = np.full(k, trend)
        root = rng.uniform(0.5, 1.0, k) * noise
        corr = 0.3 * np.ones((k, k)) + 0.7 * np.eye(k)
        sigma = corr * np.outer(root, root)
        models.append(CountryModel(c, a0, a1, psi, l0, l1, sigma))
    return models


def make_global_model(countries: Sequence[str], variables: Sequence[str], weights: WeightMatrix,
                      rng: np.random.Generator, **kw) -> tuple[GlobalModel, list[CountryModel]]:
    models = random_country_models(countries, len(variables), rng, **kw)
    links = build_link(countries, len(variables), weights)
    return stack_global(models, links, variables), models


def synthetic_panel(countries: Sequence[str] = REFERENCE_COUNTRIES,
                    variables: Sequence[str] = DEFAULT_VARIABLES,
                    periods: Sequence[str] | None = None, seed: int = 0,
                    weights: WeightMatrix | None = None, level0: float = 100.0) -> Panel:
    """Positive level series whose log-differences follow a stable GVAR."""
    rng = np.random.default_rng(seed)
    if periods is None:
        periods = [f"{y}Q{q}" for y in range(2012, 2024) for q in range(1, 5)]
    periods = list(periods)
    if weights is None:
        weights = build_weights(reference_raw_flows()[:len(countries), :len(countries)],
                                ROW_STOCHASTIC, countries)
    gm, _ = make_global_model(countries, variables, weights, rng)
    growth = simulate_global(gm, len(periods) + 50, rng)[50:]
    levels = level0 * np.exp(np.cumsum(growth, axis=0))
    values = levels.T.reshape(len(countries), len(variables), len(periods))
    return Panel(tuple(countries), tuple(variables), tuple(periods), values)
