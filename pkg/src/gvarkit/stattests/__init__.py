from .causality import granger_test, jarque_bera
from .johansen import JohansenResult, johansen_trace
from .results import LEVELS, TestResult, stars
from .unitroot import (
    NONSTATIONARY,
    STATIONARY,
    TREND_STATIONARY,
    adf_test,
    pp_test,
    stationarity_verdict,
)

__all__ = [
    "JohansenResult",
    "LEVELS",
    "NONSTATIONARY",
    "STATIONARY",
    "TREND_STATIONARY",
    "TestResult",
    "adf_test",
    "granger_test",
    "jarque_bera",
    "johansen_trace",
    "pp_test",
    "stars",
    "stationarity_verdict",
]
