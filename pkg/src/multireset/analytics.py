"""Closed-form building blocks for reset put pricing under geometric Brownian motion.

Time is calendar time ``t`` in ``[0, T]``; every formula works with the
remaining life ``T - t`` internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt
from typing import Optional

import numpy as np
from scipy.special import ndtr

_INV_SQRT_2PI = 1.0 / sqrt(2.0 * pi)


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a pricing formula."""


@dataclass(frozen=True)
class ModelParams:
    """Market and contract constants.

    Parameters
    ----------
    r : float
        Risk-free rate per year, strictly positive.
    delta : float
        Continuous dividend yield per year, non-negative.
    sigma : float
        Volatility per square-root year, strictly positive.
    T : float
        Maturity in years.
    K : float
        Original strike.
    """

    r: float = 0.03
    delta: float = 0.04
    sigma: float = 0.4
    T: float = 1.0
    K: float = 1.0

    def __post_init__(self) -> None:
        checks = (
            ("r", self.r > 0.0),
            ("delta", self.delta >= 0.0),
            ("sigma", self.sigma > 0.0),
            ("T", self.T > 0.0),
            ("K", self.K > 0.0),
        )
        for name, ok in checks:
            value = getattr(self, name)
            if not ok or not np.isfinite(value):
                raise DomainError(f"invalid model parameter {name}={value!r}")

    def with_strike(self, K: float) -> "ModelParams":
        return ModelParams(self.r, self.delta, self.sigma, self.T, K)

    def to_dict(self) -> dict:
        return {"r": self.r, "delta": self.delta, "sigma": self.sigma, "T": self.T, "K": self.K}


def norm_cdf(z):
    """Standard normal distribution function (double precision, saturates in the tails)."""
    return ndtr(z)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return out[()] if out.ndim == 0 else out


def _check_time(t: float, p: ModelParams, allow_maturity: bool = True) -> None:
    if not (0.0 <= t <= p.T) or (not allow_maturity and t >= p.T):
        raise DomainError(f"time t={t!r} outside [0, {p.T}{']' if allow_maturity else ')'}")


def european_put(t: float, x, strike: float, p: ModelParams):
    """European put price at calendar time ``t`` for spot ``x`` (scalar or array)."""
    _check_time(t, p)
    if strike <= 0.0:
        raise DomainError(f"strike must be positive, got {strike!r}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("spot must be positive")
    tau = p.T - t
    if tau == 0.0:
        out = np.maximum(strike - x, 0.0)
    else:
        vol = p.sigma * sqrt(tau)
        log_ks = np.log(strike / x)
        d1 = (log_ks - (p.r - p.delta - 0.5 * p.sigma**2) * tau) / vol
        d2 = (log_ks - (p.r - p.delta + 0.5 * p.sigma**2) * tau) / vol
        out = strike * np.exp(-p.r * tau) * ndtr(d1) - x * np.exp(-p.delta * tau) * ndtr(d2)
    return out[()] if out.ndim == 0 else out


def _tilt(p: ModelParams) -> float:
    return (p.delta - p.r) / p.sigma + 0.5 * p.sigma


def unit_put(t, p: ModelParams):
    """At-the-money put with spot and strike both equal to one.

    Accepts a scalar or an array of times in ``[0, T]``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > p.T):
        raise DomainError("time outside [0, T]")
    a = _tilt(p)
    tau = p.T - t
    root = np.sqrt(tau)
    out = np.exp(-p.r * tau) * ndtr(a * root) - np.exp(-p.delta * tau) * ndtr((a - p.sigma) * root)
    return out[()] if out.ndim == 0 else out


def h1(t, p: ModelParams):
    """Local rate of benefit from waiting above the strike for a single right.

    Equals the time derivative of :func:`unit_put` minus ``delta`` times it.
    Singular like ``-(T - t)**-0.5`` at maturity, so ``t = T`` is rejected.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t >= p.T):
        raise DomainError("h1 is defined on [0, T) only")
    a = _tilt(p)
    tau = p.T - t
    root = np.sqrt(tau)
    disc = np.exp(-p.r * tau)
    out = (p.r - p.delta) * disc * ndtr(a * root) - p.sigma / (2.0 * root) * disc * norm_pdf(a * root)
    return out[()] if out.ndim == 0 else out


def qhat_tail(t: float, u, x, z, p: ModelParams):
    """Probability that ``X_u >= z`` given ``X_t = x`` under the share measure.

    ``z`` may be ``inf`` (probability zero). ``u`` may be an array.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= t):
        raise DomainError("qhat_tail requires u > t")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(x <= 0.0) or np.any(z <= 0.0):
        raise DomainError("spot and level must be positive")
    du = u - t
    with np.errstate(divide="ignore"):
        arg = (np.log(x / z) + (p.r - p.delta + 0.5 * p.sigma**2) * du) / (p.sigma * np.sqrt(du))
    out = ndtr(arg)
    return out[()] if out.ndim == 0 else out


def kernel_L(h_at_u, t: float, u, x, z, p: ModelParams):
    """Premium density ``-x exp(-delta (u - t)) h(u) Qhat(X_u >= z)``."""
    u = np.asarray(u, dtype=float)
    return -np.asarray(x) * np.exp(-p.delta * (u - t)) * np.asarray(h_at_u) * qhat_tail(t, u, x, z, p)


def find_t_star(p: ModelParams, n_scan: int = 10_000) -> Optional[float]:
    """Last time where ``h1`` turns from positive to non-positive, or ``None``.

    ``h1`` is scanned on ``n_scan`` equally spaced points of ``[0, T)`` and the
    final positive-to-non-positive change is refined by bisection.
    """
    if n_scan < 2:
        raise DomainError("n_scan must be at least 2")
    ts = np.arange(n_scan) * (p.T / n_scan)
    vals = h1(ts, p)
    positive = np.flatnonzero(vals > 0.0)
    if positive.size == 0:
        return None
    i = positive[-1]
    lo = ts[i]
    # h1 -> -inf at maturity, so the bracket closes just before T when the scan ends positive
    hi = ts[i + 1] if i + 1 < n_scan else p.T * (1.0 - 1e-12)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h1(mid, p) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * p.T:
            break
    return hi
