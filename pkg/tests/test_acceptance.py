"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a ``criterion N: PASS|FAIL`` line with its measured
numbers; the lines are printed in the terminal summary of the run.
"""

from __future__ import annotations

import itertools
import json
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, FIXTURES, char_poly_moduli

from gvarkit.bgvar import (
    GewekeResult,
    NGPrior,
    bucket_autocorr,
    format_percent,
    geweke_diag,
    ng_gibbs,
    read_draws,
    sample_posterior,
    stability_flags,
)
from gvarkit.bgvar.diagnostics import spectral_density_zero
from gvarkit.bgvar.sampler import stack_draws
from gvarkit.forecast import forecast_conditional, forecast_unconditional, girf_single
from gvarkit.gvar import (
    CountryModel,
    build_link,
    estimate_gvar,
    estimate_varx,
    simulate_global,
    stack_global,
)
from gvarkit.panel import MAX_NORMALIZED, ROW_STOCHASTIC, Panel, build_weights, ingest_long_csv, read_square_csv, transform
from gvarkit.regress import ols_fit
from gvarkit.report import parse_config, run
from gvarkit.stattests import adf_test, granger_test, jarque_bera, johansen_trace, pp_test
from gvarkit.synthetic import REFERENCE_COUNTRIES, make_global_model, reference_raw_flows
from gvarkit.var import estimate_var, simulate_var


def record(n: int, title: str, checks: list[tuple[str, bool, str]]) -> None:
    """Store the verdict line for criterion ``n`` and fail on any failed check."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{name} {'ok' if good else 'FAILED'} ({info})" for name, good, info in checks)
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def size_ok(rate: float, alpha: float, reps: int) -> bool:
    return abs(rate - alpha) <= 3 * math.sqrt(alpha * (1 - alpha) / reps)


def fixture_panel():
    p = ingest_long_csv(FIXTURES / "panel.csv")
    return transform(p, {v: "log,diff" for v in p.variables})


def fixture_weights(countries):
    names, flows = read_square_csv(FIXTURES / "flows.csv")
    order = [names.index(c) for c in countries]
    return build_weights(flows[np.ix_(order, order)], ROW_STOCHASTIC, countries)


# 1 ---------------------------------------------------------------------------------

def test_criterion_01_test_size_and_power():
    t0 = time.perf_counter()
    R = 100
    checks = []

    walks = [np.cumsum(np.random.default_rng(s).standard_normal(200)) for s in range(R)]
    noise = [np.random.default_rng(1000 + s).standard_normal(200) for s in range(R)]

    adf_rw = [adf_test(y).rejects(0.05) for y in walks]
    adf_wn = [adf_test(y).rejects(0.05) for y in noise]
    checks.append(("ADF random walk fail-to-reject >= 90/100", R - sum(adf_rw) >= 90, f"{R - sum(adf_rw)}/100"))
    checks.append(("ADF size within 3 s.e.", size_ok(np.mean(adf_rw), 0.05, R), f"{np.mean(adf_rw):.3f}"))
    checks.append(("ADF white noise reject >= 90/100", sum(adf_wn) >= 90, f"{sum(adf_wn)}/100"))

    pp_rw = [pp_test(y).rejects(0.05) for y in walks]
    pp_wn = [pp_test(y).rejects(0.05) for y in noise]
    agree = sum((not a) and (not p) for a, p in zip(adf_rw, pp_rw))
    checks.append(("PP random walk fail-to-reject agreeing with ADF >= 85/100", agree >= 85, f"{agree}/100"))
    checks.append(("PP size within 3 s.e.", size_ok(np.mean(pp_rw), 0.05, R), f"{np.mean(pp_rw):.3f}"))
    checks.append(("PP white noise reject >= 90/100", sum(pp_wn) >= 90, f"{sum(pp_wn)}/100"))

    coint, indep = 0, 0
    for s in range(R):
        rng = np.random.default_rng(2000 + s)
        y = np.cumsum(rng.standard_normal(200))
        coint += johansen_trace(np.column_stack([y, y + rng.standard_normal(200)]), 2).rejects(0, 0.05)
        pair = np.cumsum(rng.standard_normal((200, 2)), axis=0)
        indep += johansen_trace(pair, 2).rejects(0, 0.05)
    checks.append(("Johansen cointegrated pair reject r=0 >= 90/100", coint >= 90, f"{coint}/100"))
    checks.append(("Johansen independent walks fail-to-reject >= 85/100", R - indep >= 85, f"{R - indep}/100"))

    # each deterministic case is sized under the trend its critical values assume
    t = np.arange(200.0)[:, None]
    direction = np.array([1.0, -0.5])
    dgps = {
        "none": lambda e: e,
        "constant": lambda e: e + 0.3 * direction,
        "constant_trend": lambda e: e + (0.3 + 0.01 * t) * direction,
    }
    for det, shift in dgps.items():
        rej = sum(johansen_trace(np.cumsum(shift(np.random.default_rng(7000 + s).standard_normal((200, 2))),
                                           axis=0), 2, det).rejects(0, 0.05) for s in range(R))
        checks.append((f"Johansen size within 3 s.e. ({det})", size_ok(rej / R, 0.05, R), f"{rej / R:.3f}"))

    power = 0
    for s in range(R):
        rng = np.random.default_rng(3000 + s)
        x = rng.standard_normal(200)
        y = np.r_[0.0, 0.8 * x[:-1]] + rng.standard_normal(200)
        power += granger_test(x, y, 1).rejects(0.01)
    R_size = 500
    size = np.mean([granger_test(*np.random.default_rng(4000 + s).standard_normal((2, 200)), 1).rejects(0.05)
                    for s in range(R_size)])
    checks.append(("Granger planted causality reject at 1% >= 95/100", power >= 95, f"{power}/100"))
    checks.append(("Granger size in [1%, 10%] over 500", 0.01 <= size <= 0.10, f"{size:.3f}"))
    checks.append(("Granger size within 3 s.e.", size_ok(size, 0.05, R_size), f"{size:.3f}"))

    jb_norm = [jarque_bera(np.random.default_rng(5000 + s).standard_normal(1000)).rejects(0.05) for s in range(R)]
    jb_exp = [jarque_bera(np.random.default_rng(6000 + s).exponential(size=1000)).rejects(0.01) for s in range(R)]
    checks.append(("JB normal fail-to-reject >= 90/100", R - sum(jb_norm) >= 90, f"{R - sum(jb_norm)}/100"))
    checks.append(("JB size within 3 s.e.", size_ok(np.mean(jb_norm), 0.05, R), f"{np.mean(jb_norm):.3f}"))
    checks.append(("JB exponential reject at 1% >= 90/100", sum(jb_exp) >= 90, f"{sum(jb_exp)}/100"))

    elapsed = time.perf_counter() - t0
    checks.append(("runtime < 300 s", elapsed < 300, f"{elapsed:.1f} s"))
    record(1, "test size/power suite", checks)


# 2 ---------------------------------------------------------------------------------

def test_criterion_02_ols_oracle_equivalence():
    steps = (-1e-3, -1e-6, 0.0, 1e-6, 1e-3)
    lower_found, worst_orth = 0, 0.0
    for s in range(50):
        rng = np.random.default_rng(s)
        n, m = int(rng.integers(10, 40)), int(rng.integers(1, 4))
        X = rng.standard_normal((n, m))
        y = 0.5 + X @ rng.standard_normal(m) + rng.standard_normal(n)
        fit = ols_fit(X, y)
        Z = np.column_stack([np.ones(n), X])
        base = float(fit.residuals @ fit.residuals)
        for delta in itertools.product(steps, repeat=m + 1):
            if any(delta):
                r = y - Z @ (fit.params + np.array(delta))
                if r @ r < base:
                    lower_found += 1
                    break
        worst_orth = max(worst_orth, np.abs(Z.T @ fit.residuals).max())
    record(2, "OLS oracle equivalence", [
        ("grid scan never beats the fit (50 designs)", lower_found == 0, f"{lower_found} designs beaten"),
        ("residual orthogonality <= 1e-9", worst_orth <= 1e-9, f"max {worst_orth:.1e}"),
    ])


# 3 ---------------------------------------------------------------------------------

def residual_gaps(panel, weights, det):
    fit = estimate_gvar(panel, weights, det)
    X = panel.global_matrix()
    t = np.arange(2, len(X) + 1)[:, None]
    worst = 0.0
    for m, lk in zip(fit.country_models, fit.links):
        Z = X @ lk.W.T
        eps = Z[1:] @ m.A.T - m.a_i0 - t * m.a_i1 - Z[:-1] @ m.B.T
        worst = max(worst, np.abs(eps - m.residuals).max())
    stacked = fit.model.residuals(X, t0=1)
    worst = max(worst, np.abs(stacked - np.hstack([m.residuals for m in fit.country_models])).max())
    return worst


def test_criterion_03_gvar_identities():
    checks = []
    fp = fixture_panel()
    worst = max(residual_gaps(fp, fixture_weights(fp.countries), d) for d in ("constant", "constant_trend"))
    countries = ("a", "b", "c")
    w = build_weights(reference_raw_flows()[:3, :3], ROW_STOCHASTIC, countries)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        gm, _ = make_global_model(countries, ("x", "y"), w, rng)
        X = simulate_global(gm, 120, rng)
        p = Panel(countries, ("x", "y"), tuple(str(1900 + t) for t in range(120)), X.T.reshape(3, 2, 120))
        worst = max(worst, residual_gaps(p, w, "constant_trend"))
    checks.append(("residual reconstruction <= 1e-10 on every fixture", worst <= 1e-10, f"max {worst:.1e}"))

    rng = np.random.default_rng(12)
    x = simulate_var([np.array([[0.5, 0.1], [0.0, 0.3]])], 400, rng)
    collapse = 0.0
    for det in ("constant", "constant_trend"):
        plain = estimate_varx(x, np.zeros((400, 0)), det)
        var = estimate_var(x, 1, det)
        collapse = max(collapse, np.abs(plain.psi_i1 - var.phi[0]).max(), np.abs(plain.residuals - var.residuals).max(),
                       np.abs(plain.sigma_i - var.sigma_w).max())
    models = [CountryModel(c, np.zeros(2), np.zeros(2), rng.uniform(-0.5, 0.5, (2, 2)), np.zeros((2, 2)),
                           np.zeros((2, 2)), np.eye(2)) for c in countries]
    gm = stack_global(models, build_link(countries, 2, w), ["x", "y"])
    for i, m in enumerate(models):
        collapse = max(collapse, np.abs(gm.F[2 * i:2 * i + 2, 2 * i:2 * i + 2] - m.psi_i1).max())
    checks.append(("zero star loadings collapse to VAR <= 1e-8", collapse <= 1e-8, f"max {collapse:.1e}"))

    w2 = build_weights([[0, 1], [1, 0]], ROW_STOCHASTIC, ["a", "b"])
    scal = lambda c, psi, l0, l1: CountryModel(c, np.zeros(1), np.zeros(1), np.array([[psi]]), np.array([[l0]]),
                                               np.array([[l1]]), np.eye(1))
    gm2 = stack_global([scal("a", 0.5, 0.5, 0.25), scal("b", 0.25, 0.0, 0.5)], build_link(["a", "b"], 1, w2), ["x"])
    exact = bool(np.array_equal(gm2.F, [[0.75, 0.375], [0.5, 0.25]]))
    checks.append(("two-country hand-computed F exact", exact, "F = [[0.75, 0.375], [0.5, 0.25]]"))
    record(3, "GVAR algebraic identities", checks)


# 4 ---------------------------------------------------------------------------------

def test_criterion_04_end_to_end_recovery():
    t0 = time.perf_counter()
    countries, variables = ("a", "b", "c"), ("x", "y")
    w = build_weights(reference_raw_flows()[:3, :3], ROW_STOCHASTIC, countries)
    errors = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        gm, _ = make_global_model(countries, variables, w, rng, noise=1.0)
        X = simulate_global(gm, 1000, rng)
        p = Panel(countries, variables, tuple(str(1000 + t) for t in range(1000)), X.T.reshape(3, 2, 1000))
        errors.append(np.abs(estimate_gvar(p, w, "constant").model.F - gm.F).max())
    hits = int(np.sum(np.array(errors) <= 0.15))
    elapsed = time.perf_counter() - t0
    record(4, "end-to-end recovery", [
        ("F within 0.15 in >= 90/100 seeds", hits >= 90, f"{hits}/100, median error {np.median(errors):.3f}"),
        ("runtime < 120 s", elapsed < 120, f"{elapsed:.1f} s"),
    ])


# 5 ---------------------------------------------------------------------------------

def sparse_regression(seed, m=20, T=100):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, m))
    beta = np.zeros(m)
    beta[0] = 1.0
    y = X @ beta + rng.standard_normal(T)
    return X, y, np.linalg.lstsq(X, y, rcond=None)[0]


def test_criterion_05_sampler_properties():
    checks = []
    hits = 0
    for seed in range(100):
        X, y, ls = sparse_regression(seed)
        pm = ng_gibbs(y, X, [0] * 20, NGPrior(), 400, 300, 1, np.random.default_rng(seed)).posterior_mean[:, 0]
        hits += np.linalg.norm(pm[1:]) < np.linalg.norm(ls[1:])
    checks.append(("zero coefficients shrunk toward 0 in >= 90/100 seeds", hits >= 90, f"{hits}/100"))

    X, y, ls = sparse_regression(3, m=8)
    n = 2000
    ch = ng_gibbs(y, X, [0] * 8, NGPrior(tau=10.0, d_lambda=0.01, e_lambda=1e8), n, 500, 1, np.random.default_rng(3))
    mcse = np.sqrt(spectral_density_zero(ch.coefs[:, :, 0]) / n)
    ratio = float(np.max(np.abs(ch.posterior_mean[:, 0] - ls) / mcse))
    checks.append(("vague prior within 2 MC s.e. of least squares", ratio <= 2.0, f"max {ratio:.2g} s.e."))

    X, y, _ = sparse_regression(0)
    a = ng_gibbs(y, X, [0] * 20, NGPrior(), 100, 50, 1, np.random.default_rng(5))
    b = ng_gibbs(y, X, [0] * 20, NGPrior(), 100, 50, 1, np.random.default_rng(5))
    same = a.coefs.tobytes() == b.coefs.tobytes() and a.sigmas.tobytes() == b.sigmas.tobytes()
    p = fixture_panel()
    w = fixture_weights(p.countries)
    d1 = sample_posterior(p, w, n_draws=100, n_burn=20, seed=9)
    d2 = sample_posterior(p, w, n_draws=100, n_burn=20, seed=9, threads=4)
    same = same and d1.F.tobytes() == d2.F.tobytes() and d1.sigma_e.tobytes() == d2.sigma_e.tobytes()
    checks.append(("fixed seed bit-reproducible", same, "chain and posterior draws"))
    record(5, "sampler properties", checks)


# 6 ---------------------------------------------------------------------------------

def test_criterion_06_stability_filter():
    rng = np.random.default_rng(0)
    countries, variables = ("a", "b", "c"), ("x", "y")
    w = build_weights(reference_raw_flows()[:3, :3], ROW_STOCHASTIC, countries)
    n, k = 1000, 2
    coefs = {c: np.zeros((n, 2 + 3 * k, k)) for c in countries}
    sigmas = {c: np.tile(np.eye(k), (n, 1, 1)) for c in countries}
    for c in countries:
        scale = rng.uniform(0.2, 1.2, n)[:, None, None]
        coefs[c][:, 2:] = rng.uniform(-1, 1, (n, 3 * k, k)) * scale * np.array([1, 1, 0.3, 0.3, 0.3, 0.3])[:, None]
    F, *_ = stack_draws(countries, variables, coefs, sigmas, w, "constant_trend", cond_max=np.inf)
    _, flags = stability_flags(F)
    oracle = np.array([char_poly_moduli([f])[0] < 1.0 for f in F])
    disagreements = int(np.sum(flags != oracle))

    unit = np.array([[1.0, 0.0], [0.0, 0.5]])
    rot = np.array([[0.6, -0.8], [0.8, 0.6]])         # complex pair on the unit circle
    _, edge = stability_flags(np.stack([unit, rot, 0.999999 * np.eye(2)]))
    record(6, "stability filter", [
        ("1000 draws agree with root oracle", disagreements == 0,
         f"{disagreements} disagreements, {flags.mean():.1%} stable"),
        ("eigenvalue 1.0 classified unstable", (not edge[0]) and (not edge[1]) and edge[2],
         f"flags {edge.tolist()}"),
    ])


# 7 ---------------------------------------------------------------------------------

def test_criterion_07_diagnostics_arithmetic():
    r = geweke_diag(np.random.default_rng(3).standard_normal((1000, 1680)))
    quoted = GewekeResult(np.zeros(1680), [], 280, 1680)
    counts = bucket_autocorr(np.r_[np.full(31, 0.5), [0.07], np.full(3, 0.03), np.full(5, 0.001)])
    pct = [format_percent(c, 40) for c in counts]
    record(7, "diagnostics arithmetic", [
        ("Geweke iid exceedance in [3%, 8%]", 0.03 <= r.fraction <= 0.08, f"{r.exceed_count}/{r.total} = {r.fraction:.2%}"),
        ("280/1680 -> 16.67%", "(16.67%)" in quoted.summary(), quoted.summary()),
        ("buckets {31,1,3,5} -> {77.5, 2.5, 7.5, 12.5}%", counts == [31, 1, 3, 5] and pct == ["77.5", "2.5", "7.5", "12.5"],
         "/".join(pct)),
    ])


# 8 ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def fixture_draws():
    p = fixture_panel()
    return sample_posterior(p, fixture_weights(p.countries), n_draws=200, n_burn=200, seed=7)


def test_criterion_08_forecast_contracts(fixture_draws):
    d = fixture_draws
    checks = []
    target = ("China", "mpi")
    fixed = forecast_conditional(d, {target: "last"}, n_ahead=5, paths_per_draw=5, seed=1)
    coord = fixed.paths[:, :, fixed.index(*target)]
    spread = float(np.ptp(coord, axis=0).max())
    checks.append(("fixed coordinates have zero spread", spread == 0.0, f"max spread {spread}"))

    hw = 0.001
    band = forecast_conditional(d, {target: "last"}, n_ahead=5, mode="band", half_width=hw, paths_per_draw=5, seed=1)
    level = abs(d.x_last[band.index(*target)])
    bspread = float(np.ptp(band.paths[:, :, band.index(*target)], axis=0).max())
    checks.append(("band spread <= 2 x half-width", bspread <= 2 * hw * level,
                   f"{bspread:.3g} vs {2 * hw * level:.3g}"))

    flat = forecast_unconditional(d, n_ahead=6, shocks=False)
    models = d.models()
    bitwise = all(flat.paths[i].tobytes() == gm.iterate(d.x_last, d.t_last, 6).tobytes()
                  for i, gm in enumerate(models))
    checks.append(("zero-shock fan equals iteration bit-exactly", bitwise, f"{len(models)} stable draws"))

    # stationary fixture: posterior draws from a persistent but stable simulated GVAR,
    # so widths are still growing over the horizon rather than sitting on a plateau
    countries = ("a", "b", "c")
    w = build_weights(reference_raw_flows()[:3, :3], ROW_STOCHASTIC, countries)
    rng = np.random.default_rng(4)
    gm, _ = make_global_model(countries, ("x", "y"), w, rng, own=(0.85, 0.9), foreign0=0.05, foreign1=0.05)
    X = simulate_global(gm, 200, rng)
    sp = Panel(countries, ("x", "y"), tuple(str(1800 + t) for t in range(200)), X.T.reshape(3, 2, 200))
    sd = sample_posterior(sp, w, n_draws=200, n_burn=200, seed=2, deterministic="constant")
    fan = forecast_unconditional(sd, n_ahead=8, paths_per_draw=50, seed=3)
    width = fan.quantiles[4] - fan.quantiles[0]
    increasing = bool(np.all(np.diff(width, axis=0) >= 0))
    checks.append(("95% band width weakly increasing on the stationary fixture", increasing,
                   f"min step {np.diff(width, axis=0).min():.3g}, radius {gm.spectral_radius:.3f}"))
    record(8, "forecast contracts", checks)


# 9 ---------------------------------------------------------------------------------

def test_criterion_09_girf():
    scalar = girf_single(np.array([[0.5]]), np.array([[4.0]]), 0, 12)[:, 0]
    scalar_err = float(np.abs(scalar - 2.0 * 0.5 ** np.arange(13)).max())

    F = np.array([[0.6, 0.2], [-0.1, 0.5]])
    S = np.array([[1.0, 0.6], [0.6, 2.0]])
    worst, worst_exact = 0.0, 0.0
    for j in (0, 1):
        rng = np.random.default_rng(10 + j)
        n = 100_000
        L = np.linalg.cholesky(S)
        e0 = rng.standard_normal((n, 2)) @ L.T
        x = e0.copy()
        z = np.column_stack([np.ones(n), e0[:, j]])
        zz = np.linalg.inv(z.T @ z)
        got = girf_single(F, S, j, 8)
        for h in range(9):
            if h:
                x = x @ F.T + rng.standard_normal((n, 2)) @ L.T
            coef = zz @ z.T @ x
            resid = x - z @ coef
            se = np.sqrt((resid ** 2).sum(axis=0) / (n - 2) * zz[1, 1]) * np.sqrt(S[j, j])
            est = coef[1] * np.sqrt(S[j, j])
            gap = np.abs(got[h] - est)
            # the shocked variable's impact response has no sampling error
            exact = se < 1e-12
            worst_exact = max(worst_exact, float(gap[exact].max(initial=0.0)))
            worst = max(worst, float((gap[~exact] / se[~exact]).max(initial=0.0)))

    rng = np.random.default_rng(1)
    K = 4
    Fk = rng.uniform(-0.3, 0.3, (K, K))
    A = rng.standard_normal((K, K))
    Sk = A @ A.T + np.eye(K)
    perm = np.array([2, 0, 3, 1])
    P = np.eye(K)[perm]
    perm_err = max(float(np.abs(girf_single(P @ Fk @ P.T, P @ Sk @ P.T, int(np.flatnonzero(perm == j)[0]), 8)
                                - girf_single(Fk, Sk, j, 8)[:, perm]).max()) for j in range(K))
    record(9, "GIRF correctness", [
        ("scalar closed form within 1e-12", scalar_err <= 1e-12, f"max error {scalar_err:.1e}"),
        ("2-variable GIRF within 3 MC s.e. for h <= 8", worst <= 3.0 and worst_exact <= 1e-12,
         f"max {worst:.2f} s.e."),
        ("permutation invariance within 1e-10", perm_err <= 1e-10, f"max {perm_err:.1e}"),
    ])


# 10 --------------------------------------------------------------------------------

def test_criterion_10_weight_matrix():
    names, flows = read_square_csv(FIXTURES / "flows.csv")
    m = build_weights(flows, MAX_NORMALIZED, names)
    china = m.w[names.index("China")]
    diag_zero = bool(np.all(np.diag(m.w) == 0.0))
    vietnam = names[int(np.argmax(china))] == "Vietnam"
    rs = build_weights(flows, ROW_STOCHASTIC, names)
    row_err = float(np.abs(rs.w.sum(axis=1) - 1.0).max())
    same_as_table = names == REFERENCE_COUNTRIES and np.allclose(flows, reference_raw_flows(), rtol=1e-12)
    record(10, "weight matrix", [
        ("raw-flow fixture matches the reference flows", same_as_table, f"{len(names)} countries"),
        ("zero diagonal", diag_zero, "diag " + ",".join(f"{v:g}" for v in np.diag(m.w))),
        ("max entry 1.0000", f"{m.w.max():.4f}" == "1.0000", f"{m.w.max():.4f}"),
        ("China to Vietnam maximal in the China row", vietnam, f"row max {china.max():.4f}"),
        ("row-stochastic rows sum to 1 within 1e-12", row_err <= 1e-12, f"max error {row_err:.1e}"),
    ])


# 11 --------------------------------------------------------------------------------

def bundle_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.is_file()}


def test_criterion_11_pipeline_determinism(tmp_path):
    cfg = parse_config(json.loads((FIXTURES / "report_config.json").read_text()))
    first = bundle_bytes(run(cfg, base=FIXTURES, out=tmp_path / "a").out)
    second = bundle_bytes(run(cfg, base=FIXTURES, out=tmp_path / "b").out)
    threaded = bundle_bytes(run(cfg, threads=4, base=FIXTURES, out=tmp_path / "c").out)
    diff_runs = [k for k in first if first[k] != second.get(k)]
    diff_threads = [k for k in first if first[k] != threaded.get(k)]
    draws = read_draws(tmp_path / "a" / "04_bgvar_draws.jsonl")
    record(11, "full pipeline determinism", [
        ("byte-identical across two runs", first.keys() == second.keys() and not diff_runs,
         f"{len(first)} files, {len(diff_runs)} differ"),
        ("byte-identical across thread counts", first.keys() == threaded.keys() and not diff_threads,
         f"threads 1 vs 4, {len(diff_threads)} differ"),
        ("draw file carries the config hash", draws.config_hash == cfg.config_hash, cfg.short_hash),
    ])
