"""Independent checks for the integral-equation ladder: a moneyness lattice and Monte Carlo.

Monte Carlo paths are generated in fixed-size blocks. Block ``i`` draws from
its own stream seeded by ``SeedSequence(seed, spawn_key=(i,))``, so an
estimate depends only on ``(seed, paths, steps)``. Blocks may be farmed out
in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.special import ndtr

from .analytics import DomainError, ModelParams
from .boundary import interpolate_or_infinite
from .ladder import LadderSolution

BLOCK_PATHS = 1 << 16
_TRUNCATION_LIMIT = 1e-6


@dataclass(frozen=True)
class LatticeSpec:
    time_steps: int = 500
    log_moneyness_nodes: int = 1000
    log_moneyness_halfwidth: float = 6.0  # in units of sigma sqrt(T)

    def __post_init__(self) -> None:
        if self.time_steps < 2 or self.log_moneyness_nodes < 2:
            raise DomainError("lattice counts must be at least 2")
        if self.log_moneyness_halfwidth < 5.0:
            raise DomainError("lattice halfwidth must be at least 5 standard deviations")


@dataclass(frozen=True)
class McSpec:
    paths: int = 100_000
    steps_per_year: int = 365
    rng_seed: int = 0
    rng: str = "PCG64"

    def __post_init__(self) -> None:
        if self.paths < 1 or self.steps_per_year < 1:
            raise DomainError("paths and steps_per_year must be positive")
        if not hasattr(np.random, self.rng):
            raise DomainError(f"unknown bit generator {self.rng!r}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    paths: int
    seed: int = 0

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "paths": self.paths, "seed": self.seed}


class _Moments:
    """Running sum / sum of squares accumulated block by block in a fixed order."""

    def __init__(self) -> None:
        self.n = 0
        self.s = 0.0
        self.ss = 0.0

    def add(self, values: np.ndarray) -> None:
        self.n += values.size
        self.s += float(np.sum(values))
        self.ss += float(np.sum(values * values))

    def estimate(self, seed: int) -> McEstimate:
        mean = self.s / self.n
        var = max(self.ss / self.n - mean * mean, 0.0) * self.n / max(self.n - 1, 1)
        return McEstimate(mean, math.sqrt(var / self.n), self.n, seed)


def _blocks(spec: McSpec):
    for i, start in enumerate(range(0, spec.paths, BLOCK_PATHS)):
        bitgen = getattr(np.random, spec.rng)(np.random.SeedSequence(spec.rng_seed, spawn_key=(i,)))
        yield np.random.Generator(bitgen), min(BLOCK_PATHS, spec.paths - start)


# ---------------------------------------------------------------- lattice


def _transition_weights(mu: float, sd: float, dz: float) -> np.ndarray:
    """One-step weights on node offsets ``-J..J`` for a normal log-increment.

    With several nodes per standard deviation the sampled Gaussian (trapezoid
    rule) is spectrally accurate. On coarse grids it falls back to the exact
    expectation of the piecewise-linear interpolant.
    """
    J = int(math.ceil((abs(mu) + 10.0 * sd) / dz)) + 1
    offsets = np.arange(-J, J + 1) * dz
    if sd >= dz:
        w = np.exp(-0.5 * ((offsets - mu) / sd) ** 2)
    else:

        def call_part(level):
            d = (mu - level) / sd
            return (mu - level) * ndtr(d) + sd * np.exp(-0.5 * d * d) / math.sqrt(2.0 * math.pi)

        w = (call_part(offsets - dz) - 2.0 * call_part(offsets) + call_part(offsets + dz)) / dz
    return w / np.sum(w)


def lattice_multi_reset(n: int, params: ModelParams, spec: LatticeSpec = LatticeSpec()) -> float:
    """Price at ``t = 0`` and spot ``K`` by backward induction on moneyness ``y = x / K``.

    Resetting at ``y >= 1`` pays ``y w_{j-1}(t, 1)``; below the strike it only
    burns a right and pays ``w_{j-1}(t, y)``. Resets are allowed at every lattice
    date before maturity.
    """
    if n < 0:
        raise DomainError("number of rights must be non-negative")
    M = spec.time_steps
    half = spec.log_moneyness_nodes // 2  # odd node count keeps y = 1 on the grid
    vol_T = params.sigma * math.sqrt(params.T)
    width = spec.log_moneyness_halfwidth * vol_T
    dz = width / half
    z = np.arange(-half, half + 1) * dz
    y = np.exp(z)
    dt = params.T / M
    mu = (params.r - params.delta - 0.5 * params.sigma**2) * dt
    sd = params.sigma * math.sqrt(dt)
    w = _transition_weights(mu, sd, dz)
    J = (w.size - 1) // 2
    disc = math.exp(-params.r * dt)

    def step(v: np.ndarray) -> np.ndarray:
        padded = np.concatenate([np.full(J, v[0]), v, np.full(J, v[-1])])
        return disc * np.correlate(padded, w, mode="valid")

    # mass of paths touching either edge before T (reflection bound); edges hold frozen values
    drift = abs(mu) * M
    estimate = params.K * 4.0 * ndtr(-(width - drift) / vol_T)
    if estimate > _TRUNCATION_LIMIT * params.K:
        raise DomainError(f"lattice truncation error estimate {estimate:.3g} exceeds {_TRUNCATION_LIMIT:g} K")

    payoff = np.maximum(1.0 - y, 0.0)
    prev: Optional[List[np.ndarray]] = None
    for j in range(n + 1):
        values: List[np.ndarray] = [payoff] * (M + 1)
        v = payoff
        for i in range(M - 1, -1, -1):
            v = step(v)
            if prev is not None:
                gain = np.where(y >= 1.0, y * prev[i][half], prev[i])
                v = np.maximum(v, gain)
            values[i] = v
        prev = values
    return params.K * float(prev[0][half])


# ---------------------------------------------------------------- Monte Carlo


def _strategy_moments(n: int, sol: Optional[LadderSolution], t: float, x: float, spec: McSpec):
    if n < 0:
        raise DomainError("number of rights must be non-negative")
    if n > 0 and (sol is None or sol.n_levels < n):
        raise DomainError(f"ladder solution needs at least {n} levels")
    params = sol.params if sol is not None else None
    if params is None:
        raise DomainError("a ladder solution is required for its parameters")
    T = params.T
    if not 0.0 <= t < T or x <= 0.0:
        raise DomainError("need 0 <= t < T and x > 0")
    K = params.K
    steps = max(1, int(round(spec.steps_per_year * (T - t))))
    dt = (T - t) / steps
    times = t + np.arange(steps) * dt
    # row j holds b_j at the monitoring dates; row 0 never triggers
    bounds = np.full((n + 1, steps), np.inf)
    for j in range(1, n + 1):
        bounds[j] = interpolate_or_infinite(sol.level(j).boundary, times)
    drift = (params.r - params.delta - 0.5 * params.sigma**2) * dt
    vol = params.sigma * math.sqrt(dt)
    disc = math.exp(-params.r * (T - t))

    reset_put, shout_call, diff = _Moments(), _Moments(), _Moments()
    for rng, size in _blocks(spec):
        X = np.full(size, float(x))
        strike = np.full(size, K)
        rights = np.full(size, n, dtype=np.intp)
        for i in range(steps):
            if n > 0:
                hit = X >= (strike / K) * bounds[rights, i]
                strike = np.where(hit, X, strike)
                rights = rights - hit
            X = X * np.exp(drift + vol * rng.standard_normal(size))
        rp = disc * np.maximum(strike - X, 0.0)
        # shout call on the same reset dates: max(X_tau_1 - K, ..., X_T - K, 0)
        sc = disc * (np.maximum(strike, X) - K)
        reset_put.add(rp)
        shout_call.add(sc)
        diff.add(rp - sc)
    return reset_put, shout_call, diff


def mc_strategy_price(
    n: int, sol: Optional[LadderSolution], t: float, x: float, spec: McSpec = McSpec()
) -> McEstimate:
    """Reset put value of the boundary strategy: reset when ``X_s >= (K_cur / K) b_j(s)``.

    Monitoring is discrete at ``steps_per_year`` with exact lognormal steps,
    and nodes next to an ``INFINITE`` boundary never trigger a reset.
    """
    rp, _, _ = _strategy_moments(n, sol, t, x, spec)
    return rp.estimate(spec.rng_seed)


@dataclass(frozen=True)
class ParityCheck:
    reset_put: McEstimate
    shout_call: McEstimate
    difference: McEstimate
    constant: float

    @property
    def z_score(self) -> float:
        se = self.difference.std_error
        gap = self.difference.mean - self.constant
        return math.inf if se == 0.0 and gap != 0.0 else (0.0 if se == 0.0 else gap / se)

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= 3.0


def mc_parity_check(n: int, sol: LadderSolution, t: float, x: float, spec: McSpec = McSpec()) -> ParityCheck:
    """Reset put and shout call paid on the same simulated reset dates.

    The pathwise difference is ``exp(-r (T - t)) (K - X_T)``, so its mean
    must match the parity constant.
    """
    rp, sc, diff = _strategy_moments(n, sol, t, x, spec)
    p = sol.params
    tau = p.T - t
    constant = p.K * math.exp(-p.r * tau) - x * math.exp(-p.delta * tau)
    return ParityCheck(rp.estimate(spec.rng_seed), sc.estimate(spec.rng_seed), diff.estimate(spec.rng_seed), constant)


def mc_european(params: ModelParams, t: float, x: float, strike: float, spec: McSpec = McSpec()) -> McEstimate:
    """Discounted ``(strike - X_T)^+`` from a single lognormal draw per path."""
    if not 0.0 <= t <= params.T or x <= 0.0 or strike < 0.0:
        raise DomainError("need 0 <= t <= T, x > 0, strike >= 0")
    tau = params.T - t
    drift = (params.r - params.delta - 0.5 * params.sigma**2) * tau
    vol = params.sigma * math.sqrt(tau)
    disc = math.exp(-params.r * tau)
    acc = _Moments()
    for rng, size in _blocks(spec):
        XT = x * np.exp(drift + vol * rng.standard_normal(size))
        acc.add(disc * np.maximum(strike - XT, 0.0))
    return acc.estimate(spec.rng_seed)
