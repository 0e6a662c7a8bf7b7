"""Command-line interface.

Each subcommand runs one pipeline stage (``report`` runs them all). Options
override the matching fields of an optional ``--config`` JSON file. Exit
codes: 0 success, 2 configuration error, 3 data error, 4 numerical or
analysis error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, GvarkitError

log = logging.getLogger("gvarkit")


def _split(text: str | None):
    return None if text is None else [s.strip() for s in text.split(",") if s.strip()]


def _label(text: str) -> tuple[str, str]:
    if "." not in text:
        raise ConfigError(f"expected COUNTRY.VARIABLE, got {text!r}")
    c, v = text.split(".", 1)
    return c, v


def _constraint(text: str) -> dict:
    """``COUNTRY.VAR`` or ``COUNTRY.VAR=last`` or ``COUNTRY.VAR=1.5``."""
    key, _, val = text.partition("=")
    c, v = _label(key)
    if not val or val == "last":
        return {"country": c, "variable": v, "value": "last"}
    try:
        return {"country": c, "variable": v, "value": float(val)}
    except ValueError:
        raise ConfigError(f"constraint value must be a number or 'last': {val!r}") from None


def _set(d: dict, path: str, value) -> None:
    if value is None:
        return
    keys = path.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def build_config(args):
    """Merge the config file with command-line overrides."""
    from .report.config import parse_config

    raw: dict = {}
    base = None
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base = path.parent
    a = vars(args)
    _set(raw, "data", a.get("data"))
    _set(raw, "weights", a.get("weights"))
    _set(raw, "countries", _split(a.get("countries")))
    _set(raw, "variables", _split(a.get("variables")))
    if a.get("interpolate"):
        raw["interpolate"] = True
    _set(raw, "transform", a.get("transform"))
    _set(raw, "model_transform", a.get("model_transform"))
    _set(raw, "stationarity.max_lag", a.get("max_lag"))
    _set(raw, "stationarity.ic", a.get("ic"))
    _set(raw, "rolling.window", a.get("window"))
    _set(raw, "var.p_max", a.get("p_max"))
    _set(raw, "var.criterion", a.get("criterion"))
    _set(raw, "var.granger_lag", a.get("granger_lag"))
    _set(raw, "var.johansen_lag", a.get("johansen_lag"))
    _set(raw, "sampler.draws", a.get("draws"))
    _set(raw, "sampler.burn", a.get("burn"))
    _set(raw, "sampler.thin", a.get("thin"))
    _set(raw, "sampler.seed", a.get("seed"))
    if a.get("all_draws"):
        _set(raw, "sampler.stable_only", False)
    _set(raw, "forecast.n_ahead", a.get("n_ahead"))
    _set(raw, "forecast.variable", a.get("variable"))
    _set(raw, "forecast.half_width", a.get("half_width"))
    _set(raw, "forecast.paths_per_draw", a.get("paths_per_draw"))
    _set(raw, "forecast.girf_horizon", a.get("horizon"))
    if a.get("constrain"):
        raw.setdefault("forecast", {})["constraints"] = [_constraint(t) for t in a["constrain"]]
    if a.get("shock"):
        c, v = _label(a["shock"])
        raw.setdefault("forecast", {})["shock"] = {"country": c, "variable": v}
    cmd = a.get("command")
    if cmd in ("stationarity", "johansen") and a.get("deterministic"):
        key = "stationarity.deterministic" if cmd == "stationarity" else "var.johansen_deterministic"
        _set(raw, key, a["deterministic"])
    if cmd in ("gvar", "bgvar") and a.get("deterministic"):
        _set(raw, "sampler.deterministic", a["deterministic"])
    return parse_config(raw), base


def _panel(cfg, base):
    from .report.pipeline import load_panel

    return load_panel(cfg, base)


def _outdir(cfg, base, args=None) -> Path:
    """``--out`` wins over the configured output directory; neither enters the hash."""
    if args is not None and args.out:
        out = Path(args.out)
    else:
        out = Path(cfg.output)
        if not out.is_absolute() and base is not None:
            out = base / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_files(files) -> None:
    for p in files:
        print(p)


def cmd_ingest(args) -> int:
    from .panel import write_long_csv

    cfg, base = build_config(args)
    panel = _panel(cfg, base)
    C, V, T = panel.shape
    print(f"{C} countries x {V} variables x {T} periods "
          f"({panel.time_index[0]} .. {panel.time_index[-1]})")
    print("countries: " + ", ".join(panel.countries))
    print("variables: " + ", ".join(panel.variables))
    for (c, v), dates in panel.gaps.items():
        print(f"interpolated {c}.{v}: {', '.join(dates)}")
    if args.write:
        write_long_csv(panel, args.write)
        print(f"wrote {args.write}")
    return 0


def cmd_stationarity(args) -> int:
    from .report.pipeline import write_stationarity

    cfg, base = build_config(args)
    _print_files(write_stationarity(_panel(cfg, base), cfg, _outdir(cfg, base, args)))
    return 0


def cmd_rollreg(args) -> int:
    from .report.pipeline import write_rolling

    cfg, base = build_config(args)
    _print_files(write_rolling(_panel(cfg, base), cfg, _outdir(cfg, base, args)))
    return 0


def cmd_var(args) -> int:
    from .report.pipeline import provenance, var_rows
    from .report.tables import emit_tidy

    cfg, base = build_config(args)
    rows = var_rows(_panel(cfg, base), cfg)
    p = emit_tidy(("country", "lag", "max_modulus", "stable", "residual_rms", "note"), rows,
                  _outdir(cfg, base, args) / "03_var_summary.csv", provenance(cfg))
    print(p)
    return 0


def cmd_granger(args) -> int:
    from .report.pipeline import granger_grid, provenance
    from .report.tables import emit_table

    cfg, base = build_config(args)
    g = granger_grid(_panel(cfg, base), cfg.var.granger_lag)
    print(emit_table(g, "granger", _outdir(cfg, base, args) / "03_granger.csv", provenance(cfg)))
    return 0


def cmd_johansen(args) -> int:
    from .report.pipeline import johansen_grid, provenance
    from .report.tables import emit_table

    cfg, base = build_config(args)
    g = johansen_grid(_panel(cfg, base), cfg.var.johansen_lag,
                      cfg.var.johansen_deterministic)
    print(emit_table(g, "johansen", _outdir(cfg, base, args) / "03_johansen.csv", provenance(cfg)))
    return 0


def cmd_gvar(args) -> int:
    from .report.pipeline import load_weights, model_panel, write_gvar_ols

    cfg, base = build_config(args)
    mp = model_panel(_panel(cfg, base), cfg)
    _, star = load_weights(cfg, mp.countries, base)
    files, notes = write_gvar_ols(mp, star, cfg, _outdir(cfg, base, args), args.threads)
    for n in notes:
        print(n)
    _print_files(files)
    return 0


def cmd_bgvar(args) -> int:
    from .report.pipeline import load_weights, model_panel, write_bgvar_stage

    cfg, base = build_config(args)
    mp = model_panel(_panel(cfg, base), cfg)
    display, star = load_weights(cfg, mp.countries, base)
    res = write_bgvar_stage(mp, display, star, cfg, _outdir(cfg, base, args), args.threads)
    for n in res.notes:
        print(n)
    _print_files(res.files)
    return 0


def _read_draws(args):
    from .bgvar import read_draws

    return read_draws(args.draws_file)


def cmd_forecast(args) -> int:
    from .forecast import QUANTILE_NAMES, forecast_conditional, forecast_unconditional
    from .report.charts import emit_chart
    from .report.pipeline import _forecast_variable, constraints_from, provenance
    from .report.tables import emit_tidy

    cfg, base = build_config(args)
    draws = _read_draws(args)
    f = cfg.forecast
    kw = dict(n_ahead=f.n_ahead, seed=cfg.sampler.seed, paths_per_draw=f.paths_per_draw,
              stable_only=cfg.sampler.stable_only)
    if args.mode == "none":
        fan = forecast_unconditional(draws, **kw)
    else:
        cons = constraints_from(cfg, draws.countries, draws.variables)
        fan = forecast_conditional(draws, cons, mode=args.mode, half_width=f.half_width, **kw)
    name = "unconditional" if args.mode == "none" else args.mode
    out = _outdir(cfg, base, args)
    prov = provenance(cfg)
    var = _forecast_variable(cfg, draws.variables)
    files = [
        emit_tidy(("country", "variable", "horizon", *QUANTILE_NAMES), fan.to_rows(),
                  out / f"05_forecast_{name}.csv", prov),
        emit_chart(fan, out / f"05_forecast_{name}.svg", [(c, var) for c in draws.countries],
                   f"Forecast ({name})", prov),
    ]
    _print_files(files)
    return 0


def cmd_girf(args) -> int:
    from .forecast import QUANTILE_NAMES, girf
    from .report.charts import emit_chart
    from .report.pipeline import _forecast_variable, provenance
    from .report.tables import emit_tidy

    cfg, base = build_config(args)
    draws = _read_draws(args)
    var = _forecast_variable(cfg, draws.variables)
    s = cfg.forecast.shock
    target = (s.country, s.variable) if s else (draws.countries[0], var)
    g = girf(draws, target, cfg.forecast.girf_horizon, stable_only=cfg.sampler.stable_only)
    out = _outdir(cfg, base, args)
    prov = provenance(cfg)
    files = [
        emit_tidy(("country", "variable", "horizon", *QUANTILE_NAMES), g.to_rows(),
                  out / "05_girf.csv", prov),
        emit_chart(g, out / "05_girf.svg", [(c, var) for c in draws.countries],
                   f"Generalized impulse responses to {target[0]}.{target[1]}", prov),
    ]
    _print_files(files)
    return 0


def cmd_report(args) -> int:
    from .report.pipeline import run

    cfg, base = build_config(args)
    res = run(cfg, threads=args.threads, base=base, out=_outdir(cfg, base, args))
    for n in res.notes:
        print(n)
    print(f"wrote {len(res.files)} files to {res.out}")
    return 0


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    if data:
        p.add_argument("--data", help="long-format CSV: country,variable,date,value")
        p.add_argument("--weights", help="square CSV of bilateral flows")
        p.add_argument("--countries", help="comma-separated subset")
        p.add_argument("--variables", help="comma-separated subset")
        p.add_argument("--interpolate", action="store_true", help="fill interior gaps linearly")
        p.add_argument("--transform", help="transformation for every variable, e.g. log,diff")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gvarkit", description="Global VAR toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    dets = ("none", "constant", "constant_trend")

    p = sub.add_parser("ingest", help="validate and summarise a panel")
    _common(p)
    p.add_argument("--write", help="write the transformed panel as long CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stationarity", help="ADF and PP unit-root grids")
    _common(p)
    p.add_argument("--max-lag", type=int)
    p.add_argument("--deterministic", choices=dets)
    p.add_argument("--ic", choices=("aic", "bic"))
    p.set_defaults(func=cmd_stationarity)

    p = sub.add_parser("rollreg", help="rolling-window regressions")
    _common(p)
    p.add_argument("--window", type=int)
    p.set_defaults(func=cmd_rollreg)

    p = sub.add_parser("var", help="per-country VAR lag choice and stability")
    _common(p)
    p.add_argument("--p-max", type=int)
    p.add_argument("--criterion", choices=("aic", "bic"))
    p.set_defaults(func=cmd_var)

    p = sub.add_parser("granger", help="pairwise Granger causality grid")
    _common(p)
    p.add_argument("--lag", dest="granger_lag", type=int)
    p.set_defaults(func=cmd_granger)

    p = sub.add_parser("johansen", help="pairwise Johansen trace grid")
    _common(p)
    p.add_argument("--lag", dest="johansen_lag", type=int)
    p.add_argument("--deterministic", choices=dets)
    p.set_defaults(func=cmd_johansen)

    for name, func, hlp in (("gvar", cmd_gvar, "least-squares GVAR"),
                            ("bgvar", cmd_bgvar, "Bayesian GVAR draws and model summary")):
        p = sub.add_parser(name, help=hlp)
        _common(p)
        p.add_argument("--model-transform", help="transformation before model fitting")
        p.add_argument("--deterministic", choices=("constant", "constant_trend"))
        p.add_argument("--threads", type=int, default=1)
        if name == "bgvar":
            p.add_argument("--draws", type=int)
            p.add_argument("--burn", type=int)
            p.add_argument("--thin", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("forecast", help="forecast fan from a draw file")
    _common(p, data=False)
    p.add_argument("--draws-file", required=True)
    p.add_argument("--mode", choices=("none", "fixed", "band"), default="none")
    p.add_argument("--n-ahead", type=int)
    p.add_argument("--variable", help="variable to chart")
    p.add_argument("--constrain", action="append", metavar="COUNTRY.VAR[=VALUE|last]")
    p.add_argument("--half-width", type=float)
    p.add_argument("--paths-per-draw", type=int)
    p.add_argument("--all-draws", action="store_true", help="keep unstable draws")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("girf", help="generalized impulse responses from a draw file")
    _common(p, data=False)
    p.add_argument("--draws-file", required=True)
    p.add_argument("--shock", metavar="COUNTRY.VAR")
    p.add_argument("--horizon", type=int)
    p.add_argument("--variable", help="variable to chart")
    p.add_argument("--all-draws", action="store_true", help="keep unstable draws")
    p.set_defaults(func=cmd_girf)

    p = sub.add_parser("report", help="run the full pipeline")
    _common(p)
    p.add_argument("--model-transform", help="transformation before model fitting")
    p.add_argument("--draws", type=int)
    p.add_argument("--burn", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--n-ahead", type=int)
    p.add_argument("--all-draws", action="store_true", help="forecast from unstable draws too")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GvarkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
