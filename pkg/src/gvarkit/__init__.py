"""Global VAR toolkit: panel ingestion, unit-root and cointegration tests,
country VARX* models stacked into a global system, Bayesian estimation with
a Normal-Gamma shrinkage prior, forecasts and generalized impulse responses.
"""

__version__ = "0.1.0"
