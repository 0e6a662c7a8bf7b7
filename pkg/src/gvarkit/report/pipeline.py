"""Stage functions and the end-to-end report run.

Stages, in file-numbering order:

1. unit-root tests per country and variable
2. rolling-window regressions between variable pairs
3. VAR lag selection and stability, pairwise Granger and Johansen tests
4. least-squares GVAR, Bayesian GVAR draws and the model summary
5. unconditional and conditional forecast fans, impulse responses

Every stage function works on in-memory objects and writes its own files,
so the CLI subcommands and :func:`run` share them.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bgvar import (
    NGPrior,
    cross_unit_corr,
    filter_stable,
    geweke_diag,
    posterior_mean_residuals,
    residual_autocorr_ftest,
    sample_posterior,
    write_draws,
)
from ..errors import (
    ConfigError,
    GvarkitError,
    InsufficientDataError,
    NumericalError,
    StageError,
)
from ..forecast import QUANTILE_NAMES, forecast_conditional, forecast_unconditional, girf
from ..gvar import estimate_gvar
from ..panel import (
    MAX_NORMALIZED,
    ROW_STOCHASTIC,
    Panel,
    WeightMatrix,
    build_weights,
    ingest_long_csv,
    read_square_csv,
    transform,
)
from ..regress import rolling_ols
from ..stattests import adf_test, granger_test, johansen_trace, pp_test
from ..var import estimate_var, residual_rms, select_lag, var_stability
from .charts import emit_chart
from .config import RunConfig, save_config
from .summary import model_summary
from .tables import Grid, emit_table, emit_tidy, rolling_mark, star_marks

STAGES = ("stationarity", "rolling", "var", "gvar", "forecast")
_OWNED = re.compile(r"^(0[1-5]_.*|manifest\.json|config\.json|INCOMPLETE)$")


def provenance(cfg: RunConfig) -> str:
    return f"config {cfg.short_hash} seed {cfg.sampler.seed}"


def _resolve(path: str | None, base: Path | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


# -- inputs -----------------------------------------------------------------

def load_panel(cfg: RunConfig, base: Path | None = None) -> Panel:
    """Ingest, select and transform the panel named by the config."""
    path = _resolve(cfg.data, base)
    if path is None:
        raise ConfigError("no data path configured")
    panel = ingest_long_csv(path, interpolate=cfg.interpolate)
    if cfg.countries or cfg.variables:
        for c in cfg.countries or ():
            if c not in panel.countries:
                raise ConfigError(f"country {c!r} is not in the data")
        for v in cfg.variables or ():
            if v not in panel.variables:
                raise ConfigError(f"variable {v!r} is not in the data")
        panel = panel.select(cfg.countries, cfg.variables)
    spec = cfg.transform
    if isinstance(spec, str):
        spec = {v: spec for v in panel.variables}
    if spec:
        panel = transform(panel, spec)
    return panel


def model_panel(panel: Panel, cfg: RunConfig) -> Panel:
    """The panel the global models are fitted to."""
    spec = cfg.model_transform
    if not spec:
        return panel
    if isinstance(spec, str):
        spec = {v: spec for v in panel.variables}
    return transform(panel, spec)


def load_weights(cfg: RunConfig, countries, base: Path | None = None):
    """Return (trade display matrix, row-stochastic star weights).

    Without a weights file every other country gets equal weight.
    """
    countries = tuple(countries)
    path = _resolve(cfg.weights, base)
    if path is None:
        flows = np.ones((len(countries), len(countries)))
    else:
        names, flows = read_square_csv(path)
        missing = [c for c in countries if c not in names]
        if missing:
            raise ConfigError(f"weights file lacks countries {missing}")
        order = [names.index(c) for c in countries]
        flows = flows[np.ix_(order, order)]
        if not cfg.weights_are_flows:
            flows = flows.copy()
            np.fill_diagonal(flows, 0.0)
    display = build_weights(flows, MAX_NORMALIZED, countries)
    star = build_weights(flows, ROW_STOCHASTIC, countries)
    return display, star


# -- stage 1 ------------------------------------------------------------------

def stationarity_grids(panel: Panel, cfg: RunConfig) -> tuple[Grid, Grid]:
    opt = cfg.stationarity
    C, V = len(panel.countries), len(panel.variables)
    p_adf = np.empty((C, V))
    p_pp = np.empty((C, V))
    for i, c in enumerate(panel.countries):
        for j, v in enumerate(panel.variables):
            s = panel.series(c, v)
            p_adf[i, j] = adf_test(s, opt.max_lag, opt.deterministic, opt.ic).p_value
            p_pp[i, j] = pp_test(s, opt.deterministic, opt.pp_lags).p_value
    rows = [(c,) for c in panel.countries]
    cols = list(panel.variables)
    return (Grid(rows, cols, p_adf, star_marks(p_adf), ("country",)),
            Grid(rows, cols, p_pp, star_marks(p_pp), ("country",)))


def write_stationarity(panel: Panel, cfg: RunConfig, out: Path) -> list[Path]:
    adf, pp = stationarity_grids(panel, cfg)
    prov = provenance(cfg)
    return [emit_table(adf, "stationarity", out / "01_stationarity_adf.csv", prov),
            emit_table(pp, "stationarity", out / "01_stationarity_pp.csv", prov)]


# -- stage 2 ------------------------------------------------------------------

def _pair_rows(panel: Panel):
    return [(c, v) for c in panel.countries for v in panel.variables]


def rolling_grid(panel: Panel, window: int) -> Grid:
    """Mean adjusted R^2 of the column variable on the row variable."""
    V = len(panel.variables)
    rows = _pair_rows(panel)
    vals = np.full((len(rows), V), np.nan)
    pv = np.full((len(rows), V), np.nan)
    for i, (c, a) in enumerate(rows):
        ai = panel.variables.index(a)
        for bj in range(ai + 1, V):
            res = rolling_ols(panel.series(c, a), panel.series(c, panel.variables[bj]), window)
            vals[i, bj] = res.mean_adj_r_squared
            pv[i, bj] = res.pooled_f_pvalue
    marks = np.vectorize(rolling_mark, otypes=[object])(pv)
    return Grid(rows, list(panel.variables), vals, marks, ("country", "variable"))


def write_rolling(panel: Panel, cfg: RunConfig, out: Path) -> list[Path]:
    if cfg.rolling.window > len(panel.time_index):
        raise ConfigError(f"rolling window {cfg.rolling.window} exceeds the "
                          f"{len(panel.time_index)} available periods")
    g = rolling_grid(panel, cfg.rolling.window)
    return [emit_table(g, "rolling", out / "02_rolling_r2.csv", provenance(cfg))]


# -- stage 3 ------------------------------------------------------------------

def granger_grid(panel: Panel, lag: int) -> Grid:
    """p-values of 'row variable Granger-causes column variable'."""
    V = len(panel.variables)
    rows = _pair_rows(panel)
    vals = np.full((len(rows), V), np.nan)
    for i, (c, a) in enumerate(rows):
        for j, b in enumerate(panel.variables):
            if a != b:
                vals[i, j] = granger_test(panel.series(c, a), panel.series(c, b), lag).p_value
    return Grid(rows, list(panel.variables), vals, star_marks(vals), ("country", "cause"))


def johansen_grid(panel: Panel, lag: int, deterministic: str) -> Grid:
    """Trace statistic for r = 0 on every variable pair (upper triangle)."""
    V = len(panel.variables)
    rows = _pair_rows(panel)
    vals = np.full((len(rows), V), np.nan)
    marks = np.full((len(rows), V), "", dtype=object)
    for i, (c, a) in enumerate(rows):
        ai = panel.variables.index(a)
        for bj in range(ai + 1, V):
            b = panel.variables[bj]
            pair = np.column_stack([panel.series(c, a), panel.series(c, b)])
            res = johansen_trace(pair, lag, deterministic, names=[a, b])
            vals[i, bj] = res.trace_stats[0]
            marks[i, bj] = res.stars(0)
    return Grid(rows, list(panel.variables), vals, marks, ("country", "variable"))


def var_rows(panel: Panel, cfg: RunConfig):
    """Per-country VAR lag choice, stability and residual RMS."""
    opt = cfg.var
    rows = []
    for c in panel.countries:
        block = panel.country_block(c)
        try:
            p = select_lag(block, opt.p_max, opt.criterion, opt.deterministic)
            est = estimate_var(block, p, opt.deterministic, panel.variables)
        except (InsufficientDataError, NumericalError) as exc:
            rows.append((c, "", "", "", "", f"skipped: {exc}"))
            continue
        mod = var_stability(est)
        rows.append((c, p, float(mod[0]), "yes" if mod[0] < 1 else "no",
                     residual_rms(est).pooled, ""))
    return rows


def write_var_stage(panel: Panel, cfg: RunConfig, out: Path) -> list[Path]:
    prov = provenance(cfg)
    opt = cfg.var
    files = [emit_tidy(("country", "lag", "max_modulus", "stable", "residual_rms", "note"),
                       var_rows(panel, cfg), out / "03_var_summary.csv", prov)]
    files.append(emit_table(granger_grid(panel, opt.granger_lag), "granger",
                            out / "03_granger.csv", prov))
    files.append(emit_table(johansen_grid(panel, opt.johansen_lag, opt.johansen_deterministic),
                            "johansen", out / "03_johansen.csv", prov))
    return files


# -- stage 4 ------------------------------------------------------------------

def weights_grid(w: WeightMatrix) -> Grid:
    return Grid([(c,) for c in w.countries], list(w.countries), w.w, None, ("From/To",))


@dataclass
class GvarStage:
    files: list[Path]
    draws: object
    notes: list[str] = field(default_factory=list)


def write_gvar_ols(mpanel: Panel, star: WeightMatrix, cfg: RunConfig, out: Path,
                   threads: int = 1) -> tuple[list[Path], list[str]]:
    """Least-squares GVAR; skipped with a note when the sample is too short."""
    try:
        fit = estimate_gvar(mpanel, star, cfg.sampler.deterministic, threads=threads)
    except (InsufficientDataError, NumericalError) as exc:
        note = f"least-squares GVAR skipped: {exc}"
        p = out / "04_gvar_ols.txt"
        p.write_text(f"# {provenance(cfg)}\n{note}\n", encoding="utf-8")
        return [p], [note]
    p = out / "04_gvar_ols.txt"
    text = fit.model.to_text()
    p.write_text(f"# {provenance(cfg)}\n{text}", encoding="utf-8")
    return [p], [f"least-squares GVAR spectral radius {fit.model.spectral_radius:.4f}"]


def prior_from(cfg: RunConfig) -> NGPrior:
    p = cfg.prior
    return NGPrior(tau=p.tau, d_lambda=p.d_lambda, e_lambda=p.e_lambda,
                   det_prior_var=p.det_prior_var, sigma_df_extra=p.sigma_df_extra)


def run_bgvar(mpanel: Panel, star: WeightMatrix, cfg: RunConfig, threads: int = 1):
    s = cfg.sampler
    return sample_posterior(mpanel, star, prior_from(cfg), n_draws=s.draws, n_burn=s.burn,
                            thin=s.thin, seed=s.seed, deterministic=s.deterministic,
                            threads=threads, config_hash=cfg.config_hash)


def summarize_draws(draws, mpanel: Panel, cfg: RunConfig) -> str:
    n_stable = int(np.sum(draws.stable_flags))
    chains, names = draws.parameter_chains()
    try:
        gw = geweke_diag(chains, names)
    except InsufficientDataError:
        gw = None
    resid = posterior_mean_residuals(draws, mpanel)
    try:
        ac = residual_autocorr_ftest(resid, list(mpanel.variables))
    except InsufficientDataError:
        ac = None
    cc = cross_unit_corr(resid, list(mpanel.variables)) if len(mpanel.countries) > 1 else None
    return model_summary(len(mpanel.countries), draws.n_draws, draws.thin, n_stable,
                         gw, ac, cc, provenance=provenance(cfg))


def write_bgvar_stage(mpanel: Panel, display: WeightMatrix, star: WeightMatrix, cfg: RunConfig,
                      out: Path, threads: int = 1) -> GvarStage:
    prov = provenance(cfg)
    files = [emit_table(weights_grid(display), "weights", out / "04_trade_matrix.csv", prov),
             emit_table(weights_grid(star), "weights", out / "04_star_weights.csv", prov)]
    ols_files, notes = write_gvar_ols(mpanel, star, cfg, out, threads)
    files += ols_files
    draws = run_bgvar(mpanel, star, cfg, threads)
    files.append(write_draws(draws, out / "04_bgvar_draws.jsonl"))
    radii = [(int(d), float(r), "yes" if f else "no")
             for d, (r, f) in enumerate(zip(draws.spectral_radii, draws.stable_flags))]
    files.append(emit_tidy(("draw", "spectral_radius", "stable"), radii,
                           out / "04_bgvar_stability.csv", prov))
    p = out / "04_model_summary.txt"
    p.write_text(summarize_draws(draws, mpanel, cfg), encoding="utf-8")
    files.append(p)
    return GvarStage(files, draws, notes)


# -- stage 5 ------------------------------------------------------------------

def _forecast_variable(cfg: RunConfig, variables) -> str:
    v = cfg.forecast.variable or variables[0]
    if v not in variables:
        raise ConfigError(f"forecast variable {v!r} is not a model variable")
    return v


def constraints_from(cfg: RunConfig, countries, variables) -> dict:
    if cfg.forecast.constraints:
        return {(k.country, k.variable): k.value for k in cfg.forecast.constraints}
    # default scenario: hold the first country's charted variable at its last value
    return {(countries[0], _forecast_variable(cfg, variables)): "last"}


def write_forecast_stage(draws, cfg: RunConfig, out: Path) -> list[Path]:
    prov = provenance(cfg)
    f = cfg.forecast
    seed = cfg.sampler.seed
    stable_only = cfg.sampler.stable_only
    var = _forecast_variable(cfg, draws.variables)
    chart_labels = [(c, var) for c in draws.countries]
    header = ("country", "variable", "horizon", *QUANTILE_NAMES)
    files = []
    unc = forecast_unconditional(draws, n_ahead=f.n_ahead, seed=seed,
                                 paths_per_draw=f.paths_per_draw, stable_only=stable_only)
    cons = constraints_from(cfg, draws.countries, draws.variables)
    fixed = forecast_conditional(draws, cons, n_ahead=f.n_ahead, mode="fixed", seed=seed,
                                 paths_per_draw=f.paths_per_draw, stable_only=stable_only)
    band = forecast_conditional(draws, cons, n_ahead=f.n_ahead, mode="band",
                                half_width=f.half_width, seed=seed,
                                paths_per_draw=f.paths_per_draw, stable_only=stable_only)
    for name, fan, title in (("unconditional", unc, "Unconditional forecast"),
                             ("fixed", fixed, "Conditional forecast, fixed constraints"),
                             ("band", band, "Conditional forecast, uncertain constraints")):
        files.append(emit_tidy(header, fan.to_rows(), out / f"05_forecast_{name}.csv", prov))
        files.append(emit_chart(fan, out / f"05_forecast_{name}.svg", chart_labels, title, prov))
    shock = f.shock
    target = (shock.country, shock.variable) if shock else (draws.countries[0], var)
    g = girf(draws, target, f.girf_horizon, stable_only=stable_only)
    files.append(emit_tidy(header, g.to_rows(), out / "05_girf.csv", prov))
    files.append(emit_chart(g, out / "05_girf.svg", chart_labels,
                            f"Generalized impulse responses to {target[0]}.{target[1]}", prov))
    return files


# -- full run -------------------------------------------------------------------

@dataclass
class RunResult:
    out: Path
    files: list[Path]
    notes: list[str]
    manifest: dict


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _clean(out: Path) -> None:
    for p in out.iterdir():
        if p.is_file() and _OWNED.match(p.name):
            p.unlink()


def run(cfg: RunConfig, threads: int = 1, base: Path | None = None,
        out: str | Path | None = None) -> RunResult:
    """Execute every stage in order and write the bundle.

    A failing stage raises :class:`StageError`; the ``INCOMPLETE`` marker
    left in the output directory names the stage and the cause.
    """
    out = Path(out) if out is not None else (_resolve(cfg.output, base) or Path(cfg.output))
    out.mkdir(parents=True, exist_ok=True)
    _clean(out)
    marker = out / "INCOMPLETE"
    marker.write_text("run in progress\n", encoding="utf-8")
    files: list[Path] = [save_config(cfg, out / "config.json")]
    notes: list[str] = []
    stage = "ingest"
    try:
        panel = load_panel(cfg, base)
        stage = "stationarity"
        files += write_stationarity(panel, cfg, out)
        stage = "rolling"
        files += write_rolling(panel, cfg, out)
        stage = "var"
        files += write_var_stage(panel, cfg, out)
        stage = "gvar"
        mpanel = model_panel(panel, cfg)
        display, star = load_weights(cfg, mpanel.countries, base)
        g = write_bgvar_stage(mpanel, display, star, cfg, out, threads)
        files += g.files
        notes += g.notes
        stage = "forecast"
        if cfg.sampler.stable_only:
            notes.append(filter_stable(g.draws).summary())
        files += write_forecast_stage(g.draws, cfg, out)
    except GvarkitError as exc:
        marker.write_text(f"stage: {stage}\nerror: {exc}\n", encoding="utf-8")
        raise StageError(stage, exc) from exc
    except Exception as exc:  # unexpected failures still mark the bundle
        marker.write_text(f"stage: {stage}\nerror: {type(exc).__name__}: {exc}\n",
                          encoding="utf-8")
        raise StageError(stage, exc) from exc
    manifest = {
        "config_hash": cfg.config_hash,
        "seed": cfg.sampler.seed,
        "stages": list(STAGES),
        "notes": notes,
        "files": {p.name: _sha(p) for p in sorted(files, key=lambda p: p.name)},
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    marker.unlink()
    return RunResult(out, files + [mpath], notes, manifest)
