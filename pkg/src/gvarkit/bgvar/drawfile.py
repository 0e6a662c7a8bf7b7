"""Append-only posterior draw files.

The file is JSON Lines. The first line is a header::

    {"format": "gvarkit-draws", "version": 1, "countries": [...],
     "variables": [...], "deterministic": ..., "dims": {"m": .., "k": ..},
     "seed": .., "config_hash": .., "n_burn": .., "thin": ..,
     "t_last": .., "x_last": [...], "weights": [[...]]}

Every following line holds one retained draw::

    {"draw": d, "coefs": {country: [[...]]}, "sigmas": {country: [[...]]}}

Coefficient blocks follow the country-model layout (constant, trend, own
lags, contemporaneous and lagged foreign variables in rows, equations in
columns). Floats are written with round-trip precision, so a reloaded file
reproduces the stacked global models bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..panel import ROW_STOCHASTIC, WeightMatrix
from .sampler import PosteriorDraws, stability_flags, stack_draws

FORMAT = "gvarkit-draws"
VERSION = 1


def _header(draws: PosteriorDraws) -> dict:
    k = len(draws.variables)
    return {
        "format": FORMAT,
        "version": VERSION,
        "countries": list(draws.countries),
        "variables": list(draws.variables),
        "deterministic": draws.deterministic,
        "dims": {"m": 2 + 3 * k, "k": k},
        "seed": draws.seed,
        "config_hash": draws.config_hash,
        "n_burn": draws.n_burn,
        "thin": draws.thin,
        "t_last": draws.t_last,
        "x_last": None if draws.x_last is None else [float(x) for x in draws.x_last],
        "weights": [[float(x) for x in row] for row in draws.weights.w],
    }


def _draw_line(draws: PosteriorDraws, d: int, number: int) -> str:
    rec = {
        "draw": number,
        "coefs": {c: draws.coefs[c][d].tolist() for c in draws.countries},
        "sigmas": {c: draws.sigmas[c][d].tolist() for c in draws.countries},
    }
    return json.dumps(rec, separators=(",", ":"))


def write_draws(draws: PosteriorDraws, path: str | Path) -> Path:
    """Create a draw file holding the header and every draw."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_header(draws), separators=(",", ":")) + "\n")
    return append_draws(draws, path)


def append_draws(draws: PosteriorDraws, path: str | Path) -> Path:
    """Append draws to an existing file whose header matches."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        head = json.loads(fh.readline())
        existing = sum(1 for line in fh if line.strip())
    mine = _header(draws)
    for key in ("format", "version", "countries", "variables", "deterministic", "dims", "weights"):
        if head.get(key) != mine[key]:
            raise DataError(f"draw file header mismatch on {key!r}")
    with path.open("a", encoding="utf-8", newline="\n") as fh:
        for d in range(draws.n_draws):
            fh.write(_draw_line(draws, d, existing + d) + "\n")
    return path


def read_draws(path: str | Path) -> PosteriorDraws:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such draw file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        try:
            head = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise DataError(f"draw file header is not JSON: {exc}") from None
        if head.get("format") != FORMAT or head.get("version") != VERSION:
            raise DataError("not a gvarkit draw file of a supported version")
        recs = [json.loads(line) for line in fh if line.strip()]
    if not recs:
        raise DataError("draw file holds no draws")
    countries = tuple(head["countries"])
    variables = tuple(head["variables"])
    weights = WeightMatrix(countries, np.array(head["weights"]), ROW_STOCHASTIC)
    coefs = {c: np.array([r["coefs"][c] for r in recs]) for c in countries}
    sigmas = {c: np.array([r["sigmas"][c] for r in recs]) for c in countries}
    F, b0, b1, Se = stack_draws(countries, variables, coefs, sigmas, weights,
                                head["deterministic"], cond_max=np.inf)
    radii, flags = stability_flags(F)
    return PosteriorDraws(
        countries=countries,
        variables=variables,
        deterministic=head["deterministic"],
        weights=weights,
        coefs=coefs,
        sigmas=sigmas,
        coef_means={c: a.mean(axis=0) for c, a in coefs.items()},
        F=F, b0=b0, b1=b1, sigma_e=Se,
        spectral_radii=radii,
        stable_flags=flags,
        n_burn=head["n_burn"],
        thin=head["thin"],
        seed=head["seed"],
        config_hash=head.get("config_hash", ""),
        t_last=head.get("t_last", 0),
        x_last=None if head.get("x_last") is None else np.array(head["x_last"]),
        indices=np.array([r["draw"] for r in recs]),
    )
