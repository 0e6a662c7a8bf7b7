from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

LEVELS = (0.10, 0.05, 0.01)


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test.

    ``decision_at`` maps each significance level to ``True`` when the null
    is rejected at that level. ``p_bracket`` is set only when the p-value
    comes from a critical-value table rather than a continuous approximation.
    """

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    null_hypothesis: str
    decision_at: dict[float, bool]
    nuisance: dict[str, Any] = field(default_factory=dict)
    critical_values: dict[float, float] | None = None
    p_bracket: tuple[float, float] | None = None

    def rejects(self, alpha: float = 0.05) -> bool:
        if alpha in self.decision_at:
            return self.decision_at[alpha]
        return self.p_value <= alpha


def decisions_from_p(p_value: float) -> dict[float, bool]:
    return {a: bool(p_value <= a) for a in LEVELS}


def stars(p_value: float, thresholds=(0.10, 0.05, 0.01), marks=("*", "**", "***")) -> str:
    """Significance marker for ``p_value`` (empty when not significant)."""
    if p_value is None or not np.isfinite(p_value):
        return ""
    out = ""
    for t, m in zip(thresholds, marks):
        if p_value <= t:
            out = m
    return out
