"""Vectorised sampler for the generalized inverse Gaussian distribution.

GIG(p, a, b) has density proportional to x^(p-1) exp(-(a x + b / x) / 2).
Writing x = sqrt(b/a) exp(y), the log-variable y has the log-concave density

    f(y) = exp(p y - w cosh y) / (2 K_p(w)),   w = sqrt(a b),

which is sampled by rejection from the envelope
``f(m) min(1, exp(1 - f(m) |y - m|))`` valid for any log-concave density
with mode m (Devroye 1986, ch. VII.2); the expected number of proposals is 4.
"""

from __future__ import annotations

import numpy as np
from scipy import special

# below this w the b -> 0 (Gamma) or a -> 0 (inverse Gamma) limit is used
_W_TINY = 1e-10


def _log_bessel_k(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """log K_p(w), falling back to a log-space order recurrence on overflow."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.log(special.kve(p, w)) - w
    bad = ~np.isfinite(out)
    if bad.any():
        out[bad] = _log_bessel_k_recurrence(np.abs(p[bad]), w[bad])
    return out


def _log_bessel_k_recurrence(nu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Upward recurrence K_{v+1} = K_{v-1} + (2v/w) K_v from the fractional order.

    K is increasing in the order, so the forward recurrence is stable.
    """
    frac = nu - np.floor(nu)
    steps = np.floor(nu).astype(int)
    lo = np.log(special.kve(frac, w)) - w          # order frac
    hi = np.log(special.kve(frac + 1.0, w)) - w    # order frac + 1
    out = np.where(steps == 0, lo, hi)
    for j in range(1, int(steps.max(initial=0))):
        live = steps > j
        nxt = np.logaddexp(lo, np.log(2.0 * (frac + j) / w) + hi)
        lo, hi = hi, nxt
        out = np.where(live, hi, out)
    return out


def rgig(p, a, b, rng: np.random.Generator) -> np.ndarray:
    """Draw one GIG(p, a, b) variate per element of the broadcast inputs."""
    p, a, b = np.broadcast_arrays(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float))
    shape = p.shape
    p, a, b = p.ravel(), a.ravel(), b.ravel()
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("GIG parameters a and b must be nonnegative")
    out = np.empty(p.size)
    w = np.sqrt(a * b)

    gamma_lim = (w < _W_TINY) & (p > 0) & (a > 0)
    inv_lim = (w < _W_TINY) & (p < 0) & (b > 0) & ~gamma_lim
    if np.any((w < _W_TINY) & ~(gamma_lim | inv_lim)):
        raise ValueError("GIG parameters define an improper distribution")
    if gamma_lim.any():
        out[gamma_lim] = rng.gamma(p[gamma_lim], 2.0 / a[gamma_lim])
    if inv_lim.any():
        out[inv_lim] = 1.0 / rng.gamma(-p[inv_lim], 2.0 / b[inv_lim])

    idx = np.flatnonzero(~(gamma_lim | inv_lim))
    if idx.size:
        out[idx] = np.sqrt(b[idx] / a[idx]) * np.exp(_log_gig_std(p[idx], w[idx], rng))
    return out.reshape(shape)


def _log_gig_std(p: np.ndarray, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """log of GIG(p, w, w) draws via rejection on the log scale."""
    mode = np.arcsinh(p / w)
    log_norm = np.log(2.0) + _log_bessel_k(p, w)
    log_fm = p * mode - w * np.cosh(mode) - log_norm
    fm = np.exp(log_fm)
    y = np.empty(p.size)
    todo = np.arange(p.size)
    while todo.size:
        n = todo.size
        f0 = fm[todo][:, None]
        shape = (n, _BATCH)
        flat = rng.random(shape) < 0.5
        dist = np.where(flat, rng.random(shape), 1.0 + rng.standard_exponential(shape)) / f0
        sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        cand = mode[todo][:, None] + sign * dist
        log_env = np.where(flat, log_fm[todo][:, None], log_fm[todo][:, None] + 1.0 - f0 * dist)
        with np.errstate(over="ignore"):
            log_f = (p[todo][:, None] * cand - w[todo][:, None] * np.cosh(cand)
                     - log_norm[todo][:, None])
        accept = np.log(rng.random(shape)) <= log_f - log_env
        hit = accept.any(axis=1)
        first = accept.argmax(axis=1)
        y[todo[hit]] = cand[hit, first[hit]]
        todo = todo[~hit]
    return y


_BATCH = 8
