"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from gvarkit.gvar import solve_global

FIXTURES = Path(__file__).parent / "fixtures"

# one "criterion N: PASS|FAIL ..." line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def write_long(path: Path, rows, header="country,variable,date,value") -> Path:
    """Write a long-format CSV from (country, variable, date, value) tuples."""
    lines = [header] + [",".join(str(x) for x in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def small_rows(n_countries=2, n_variables=2, n_periods=3, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for c in range(n_countries):
        for v in range(n_variables):
            for t in range(n_periods):
                rows.append((f"C{c}", f"v{v}", str(2000 + t), f"{rng.uniform(1, 10):.6f}"))
    return rows


def model_from_F(F, sigma, b0=None, b1=None, countries=None, variables=None):
    """A solved global model with G = I, so F = H and the shock covariance is ``sigma``."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    K = F.shape[0]
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    countries = countries or ["A"]
    variables = variables or [f"v{j}" for j in range(K // len(countries))]
    b0 = np.zeros(K) if b0 is None else np.asarray(b0, dtype=float)
    b1 = np.zeros(K) if b1 is None else np.asarray(b1, dtype=float)
    return solve_global(countries, variables, np.eye(K), F, b0, b1, sigma,
                        [len(variables)] * len(countries))


def char_poly_moduli(phis):
    """Root moduli of det(z^p I - phi_1 z^(p-1) - ... - phi_p), descending.

    The determinant polynomial is recovered by interpolation at p*k+1 points
    on the unit circle and handed to a scalar root finder, so no eigen-solver
    is applied to the coefficient matrices themselves.
    """
    phis = [np.atleast_2d(np.asarray(f, dtype=float)) for f in phis]
    k, p = phis[0].shape[0], len(phis)
    deg = k * p
    z = np.exp(2j * np.pi * np.arange(deg + 1) / (deg + 1))
    vals = []
    for zz in z:
        m = zz ** p * np.eye(k, dtype=complex)
        for j, f in enumerate(phis, start=1):
            m = m - f * zz ** (p - j)
        vals.append(np.linalg.det(m))
    coefs = np.fft.fft(vals) / (deg + 1)          # increasing powers
    return np.sort(np.abs(np.roots(coefs[::-1].real)))[::-1]
