"""Plain-text model summary for a Bayesian GVAR run."""

from __future__ import annotations

from ..bgvar.diagnostics import (
    AUTOCORR_BUCKETS,
    CROSS_CORR_BUCKETS,
    AutocorrSummary,
    CrossCorrTable,
    GewekeResult,
    format_percent,
)


def model_summary(n_units: int, n_draws: int, thin: int, n_stable: int,
                  geweke: GewekeResult | None, autocorr: AutocorrSummary | None,
                  cross: CrossCorrTable | None, lags: tuple[int, int] = (1, 1),
                  prior_name: str = "Normal-Gamma prior (NG)", provenance: str = "") -> str:
    out = []
    if provenance:
        out.append(f"# {provenance}")
    out += [
        "Model Information",
        f"Prior: {prior_name}",
        f"Number of lags for endogenous variables: {lags[0]}",
        f"Number of lags for weakly exogenous variables: {lags[1]}",
        f"Number of posterior draws: {n_draws * thin}/{thin}={n_draws}",
        f"Number of stable posterior draws: {n_stable}",
        f"Number of cross-sectional units: {n_units}",
        "",
        "Convergence diagnostics",
        "Geweke statistic:",
    ]
    if geweke is None:
        out.append("not available")
    else:
        out.append(geweke.summary())
        if geweke.excluded:
            out.append(f"({len(geweke.excluded)} constant chains excluded)")
    out += ["", "F-test, first order serial autocorrelation of cross-unit residuals",
            "Summary statistics:"]
    if autocorr is None:
        out.append("not available")
    else:
        out.append(f"{'':<12}{'p-values':>10}{'%':>8}")
        for name, count, pct in zip(AUTOCORR_BUCKETS, autocorr.counts, autocorr.percents):
            out.append(f"{name:<12}{count:>10}{pct:>8}")
    out += ["", "Average pairwise cross-unit correlation of unit-model residuals",
            "Summary statistics:"]
    if cross is None:
        out.append("not available")
    else:
        total = len(cross.countries)
        width = max(12, *(len(v) + 2 for v in cross.variables))
        out.append(f"{'':<12}" + "".join(f"{v:>{width}}" for v in cross.variables))
        for b, name in enumerate(CROSS_CORR_BUCKETS):
            cells = []
            for v in cross.variables:
                c = cross.counts[v][b]
                cells.append(f"{f'{c} ({format_percent(c, total, 0)}%)':>{width}}")
            out.append(f"{name:<12}" + "".join(cells))
    return "\n".join(out) + "\n"
