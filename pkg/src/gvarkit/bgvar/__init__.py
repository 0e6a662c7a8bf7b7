from .diagnostics import (
    AutocorrSummary,
    CrossCorrTable,
    GewekeResult,
    bucket_autocorr,
    bucket_cross_corr,
    cross_unit_corr,
    format_percent,
    geweke_diag,
    residual_autocorr_ftest,
)
from .drawfile import append_draws, read_draws, write_draws
from .gig import rgig
from .sampler import (
    NGChain,
    NGPrior,
    PosteriorDraws,
    StableSubset,
    filter_stable,
    ng_gibbs,
    posterior_mean_residuals,
    sample_posterior,
    stability_flags,
    substream,
)

__all__ = [
    "AutocorrSummary",
    "CrossCorrTable",
    "GewekeResult",
    "NGChain",
    "NGPrior",
    "PosteriorDraws",
    "StableSubset",
    "append_draws",
    "bucket_autocorr",
    "bucket_cross_corr",
    "cross_unit_corr",
    "filter_stable",
    "format_percent",
    "geweke_diag",
    "ng_gibbs",
    "posterior_mean_residuals",
    "read_draws",
    "residual_autocorr_ftest",
    "rgig",
    "sample_posterior",
    "stability_flags",
    "substream",
    "write_draws",
]
