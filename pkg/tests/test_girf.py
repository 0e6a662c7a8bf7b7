"""Generalized impulse responses."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import model_from_F

from gvarkit.errors import ConfigError
from gvarkit.forecast import DegenerateShockError, girf, girf_single

F2 = np.array([[0.6, 0.2], [-0.1, 0.5]])
SIGMA2 = np.array([[1.0, 0.6], [0.6, 2.0]])


def test_scalar_closed_form():
    resp = girf_single(np.array([[0.5]]), np.array([[4.0]]), 0, 10)
    np.testing.assert_allclose(resp[:, 0], 2.0 * 0.5 ** np.arange(11), rtol=0, atol=1e-12)


def test_diagonal_covariance_has_no_impact_spillover():
    sigma = np.diag([2.0, 3.0, 0.5])
    F = np.random.default_rng(0).uniform(-0.3, 0.3, (3, 3))
    for j in range(3):
        r = girf_single(F, sigma, j, 4)
        assert np.all(np.delete(r[0], j) == 0.0)
        assert r[0, j] == pytest.approx(np.sqrt(sigma[j, j]), rel=1e-15)


def simulation_oracle(F, sigma, j, H, n, seed):
    """Regress simulated paths on the shocked innovation; slope times one s.d.

    Each path starts from zero with an impact innovation and later shocks
    drawn from N(0, sigma). The conditional mean of x_h given e_j equals the
    regression slope times e_j, so the response to a one-s.d. shock is
    ``slope * sqrt(sigma_jj)`` with an OLS standard error.
    """
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(sigma)
    K = F.shape[0]
    e0 = rng.standard_normal((n, K)) @ L.T
    x = e0.copy()
    z = np.column_stack([np.ones(n), e0[:, j]])
    zz_inv = np.linalg.inv(z.T @ z)
    est, se = np.empty((H + 1, K)), np.empty((H + 1, K))
    for h in range(H + 1):
        if h:
            x = x @ F.T + rng.standard_normal((n, K)) @ L.T
        coef = zz_inv @ z.T @ x
        resid = x - z @ coef
        s2 = (resid ** 2).sum(axis=0) / (n - 2)
        d = np.sqrt(sigma[j, j])
        est[h] = coef[1] * d
        se[h] = np.sqrt(s2 * zz_inv[1, 1]) * d
    return est, se


@pytest.mark.parametrize("j", [0, 1])
def test_matches_simulation_oracle(j):
    est, se = simulation_oracle(F2, SIGMA2, j, 8, 100_000, seed=j)
    got = girf_single(F2, SIGMA2, j, 8)
    # the impact response of the shocked variable is exact up to round-off
    assert np.all(np.abs(got - est) <= 3 * se + 1e-12)


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    K = 4
    F = rng.uniform(-0.3, 0.3, (K, K))
    A = rng.standard_normal((K, K))
    sigma = A @ A.T + np.eye(K)
    perm = np.array([2, 0, 3, 1])
    P = np.eye(K)[perm]
    for j in range(K):
        base = girf_single(F, sigma, j, 6)
        moved = girf_single(P @ F @ P.T, P @ sigma @ P.T, int(np.flatnonzero(perm == j)[0]), 6)
        assert np.abs(moved - base[:, perm]).max() <= 1e-10


def test_impact_response_is_own_standard_deviation():
    r = girf_single(F2, SIGMA2, 1, 3)
    assert r[0, 1] == pytest.approx(np.sqrt(2.0), rel=1e-15)
    assert r[0, 0] == pytest.approx(0.6 / np.sqrt(2.0), rel=1e-15)


def test_zero_variance_shock_is_rejected():
    with pytest.raises(DegenerateShockError):
        girf_single(F2, np.diag([1.0, 0.0]), 1, 3)


def test_girf_over_model_set():
    rng = np.random.default_rng(2)
    models = [model_from_F(F2 + rng.uniform(-0.05, 0.05, (2, 2)), SIGMA2 * s, variables=["x", "y"])
              for s in (0.5, 1.0, 1.5, 2.0)]
    res = girf(models, ("A", "y"), H=5)
    assert res.responses.shape == (4, 6, 2)
    for d, gm in enumerate(models):
        np.testing.assert_array_equal(res.responses[d], girf_single(gm.F, gm.sigma_e, 1, 5))
        assert res.responses[d, 0, 1] == pytest.approx(np.sqrt(gm.sigma_e[1, 1]), rel=1e-15)
    assert np.all(np.diff(res.quantiles, axis=0) >= 0)
    np.testing.assert_allclose(res.median, np.median(res.responses, axis=0), atol=1e-15)
    assert len(res.to_rows()) == 2 * 6


def test_girf_argument_errors():
    gm = model_from_F(F2, SIGMA2, variables=["x", "y"])
    with pytest.raises(ConfigError):
        girf(gm, ("A", "z"))
    with pytest.raises(ConfigError):
        girf(gm, ("A", "x"), H=-1)
