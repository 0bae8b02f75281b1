"""Multi-right recursion: h_n -> b_n -> p_n -> h_{n+1} -> ... and the premium price representation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .analytics import DomainError, ModelParams, european_put, h1, kernel_L, qhat_tail, unit_put
from .boundary import (
    BoundaryCurve,
    LevelInputs,
    SolverError,
    TimeGrid,
    interpolate_or_infinite,
    solve_boundary,
)


@dataclass(frozen=True, eq=False)
class PremiumCurve:
    """Normalised at-the-money reset premium ``p`` and its time derivative on a grid."""

    grid: TimeGrid
    p: np.ndarray
    p_prime: np.ndarray

    @classmethod
    def zero(cls, grid: TimeGrid) -> "PremiumCurve":
        z = np.zeros(grid.n_steps + 1)
        return cls(grid, z, z.copy())


@dataclass(frozen=True, eq=False)
class Level:
    """One rung of the ladder: ``h_j`` at quadrature midpoints, ``b_j`` and ``p_j``.

    ``previous`` is ``p_{j-1}``, kept so that ``h_j`` can be evaluated off the grid.
    """

    index: int
    h_mid: np.ndarray
    boundary: BoundaryCurve
    premium: PremiumCurve
    previous: PremiumCurve
    params: ModelParams

    def h(self, t):
        return h_next(self.previous, self.params)(t)

    @property
    def multiplier(self) -> np.ndarray:
        return unit_put(self.boundary.grid.nodes, self.params) + self.previous.p


@dataclass(frozen=True, eq=False)
class LadderSolution:
    params: ModelParams
    grid: TimeGrid
    levels: List[Level] = field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, j: int) -> Level:
        if not 1 <= j <= len(self.levels):
            raise DomainError(f"level {j} not available (solved 1..{len(self.levels)})")
        return self.levels[j - 1]

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "grid": {"n_steps": self.grid.n_steps, "maturity": self.grid.maturity},
            "levels": [
                {
                    "t": _encode(self.grid.nodes),
                    "b": _encode(lv.boundary.values),
                    "p": _encode(lv.premium.p),
                    "p_prime": _encode(lv.premium.p_prime),
                }
                for lv in self.levels
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "LadderSolution":
        params = ModelParams(**doc["params"])
        grid = TimeGrid(int(doc["grid"]["n_steps"]), float(doc["grid"]["maturity"]))
        levels: List[Level] = []
        prev = PremiumCurve.zero(grid)
        for j, entry in enumerate(doc["levels"], start=1):
            b = BoundaryCurve(grid, _decode(entry["b"]), params.K)
            prem = PremiumCurve(grid, _decode(entry["p"]), _decode(entry["p_prime"]))
            h_mid = h_next(prev, params)(grid.midpoints)
            levels.append(Level(j, h_mid, b, prem, prev, params))
            prev = prem
        return cls(params, grid, levels)

    @classmethod
    def from_json(cls, text: str) -> "LadderSolution":
        return cls.from_dict(json.loads(text))


def _encode(values: np.ndarray) -> list:
    return [float(v) if math.isfinite(v) else "inf" for v in values]


def _decode(values: Sequence) -> np.ndarray:
    return np.array([math.inf if v == "inf" else float(v) for v in values])


def derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Central differences inside, second-order one-sided differences at both ends."""
    f = np.asarray(values, dtype=float)
    if f.size < 3:
        raise DomainError("need at least three samples for a second-order derivative")
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * dt)
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt)
    g[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dt)
    return g


def premium(
    b: BoundaryCurve,
    h_curve: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    grid: TimeGrid,
    params: ModelParams,
) -> PremiumCurve:
    """Reset premium of the at-the-money position, ``p(t_k)`` for every node.

    ``h_curve`` is either ``h`` at the grid midpoints or a callable evaluated there.
    """
    if b.grid != grid:
        raise DomainError("boundary grid and premium grid differ")
    mids = grid.midpoints
    h_mid = np.asarray(h_curve(mids) if callable(h_curve) else h_curve, dtype=float)
    if h_mid.shape != mids.shape:
        raise DomainError("h tabulation does not match the grid midpoints")
    z_mid = 0.5 * (b.values[:-1] + b.values[1:])
    nodes = grid.nodes
    K = params.K
    p = np.zeros(grid.n_steps + 1)
    for k in range(grid.n_steps):
        u = mids[k:]
        terms = np.exp(-params.delta * (u - nodes[k])) * h_mid[k:] * qhat_tail(nodes[k], u, K, z_mid[k:], params)
        p[k] = -grid.dt * float(np.sum(terms))
    return PremiumCurve(grid, p, derivative(p, grid.dt))


def h_next(prev: PremiumCurve, params: ModelParams) -> Callable[[np.ndarray], np.ndarray]:
    """``h_n(t) = h1(t) + p'_{n-1}(t) - delta p_{n-1}(t)``.

    The singular part of the time derivative is carried analytically by ``h1``;
    only the premium is differenced, then linearly interpolated.
    """
    nodes = prev.grid.nodes

    def h(t):
        return h1(t, params) + np.interp(t, nodes, prev.p_prime) - params.delta * np.interp(t, nodes, prev.p)

    return h


def solve_level(j: int, prev: PremiumCurve, params: ModelParams, grid: TimeGrid) -> Level:
    h_mid = h_next(prev, params)(grid.midpoints)
    inputs = LevelInputs(grid, h_mid, unit_put(grid.nodes, params) + prev.p, params, level=j)
    try:
        b = solve_boundary(inputs)
    except SolverError as exc:
        raise SolverError(f"level {j}: {exc}", index=exc.index, level=j) from exc
    return Level(j, h_mid, b, premium(b, h_mid, grid, params), prev, params)


def solve_ladder(n: int, params: ModelParams, grid: Optional[TimeGrid] = None, n_steps: int = 400) -> LadderSolution:
    """Solve levels ``1..n``; ``n = 0`` gives an empty (European) ladder."""
    if n < 0:
        raise DomainError("number of rights must be non-negative")
    grid = grid or TimeGrid(n_steps, params.T)
    if abs(grid.maturity - params.T) > 0.0:
        raise DomainError("grid maturity differs from params.T")
    levels: List[Level] = []
    prev = PremiumCurve.zero(grid)
    for j in range(1, n + 1):
        lv = solve_level(j, prev, params, grid)
        levels.append(lv)
        prev = lv.premium
    return LadderSolution(params, grid, levels)


def price(j: int, t: float, x, sol: LadderSolution):
    """Value with ``j`` rights left: European put plus the reset premium integral.

    ``x`` may be a scalar or an array of spots. Off-grid ``t`` gets a partial
    first subinterval ``[t, t_next]`` sampled at its midpoint.
    """
    params = sol.params
    K = params.K
    T = params.T
    if not 0.0 <= t <= T:
        raise DomainError(f"time {t!r} outside [0, {T}]")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise DomainError("spot must be positive")
    base = european_put(t, x_arr, K, params)
    if j == 0 or t == T:
        return base
    lv = sol.level(j)
    grid = sol.grid
    dt = grid.dt
    nodes = grid.nodes
    k0 = int(math.ceil(t / dt - 1e-9))
    k0 = min(k0, grid.n_steps)
    if abs(t - nodes[k0]) <= 1e-12 * T:
        t = float(nodes[k0])
        u = grid.midpoints[k0:]
        h_u = lv.h_mid[k0:]
        z_u = 0.5 * (lv.boundary.values[k0:-1] + lv.boundary.values[k0 + 1 :])
        w_u = np.full(u.shape, dt)
    else:
        c = 0.5 * (t + nodes[k0])
        u = np.concatenate([[c], grid.midpoints[k0:]])
        h_u = np.concatenate([[float(lv.h(c))], lv.h_mid[k0:]])
        z_u = np.concatenate(
            [interpolate_or_infinite(lv.boundary, [c]), 0.5 * (lv.boundary.values[k0:-1] + lv.boundary.values[k0 + 1 :])]
        )
        w_u = np.concatenate([[nodes[k0] - t], np.full(grid.n_steps - k0, dt)])
    if u.size == 0:
        return base
    xs = np.atleast_1d(x_arr)[:, None]
    terms = kernel_L(h_u, t, u, xs, z_u, params)
    out = np.atleast_1d(base) + np.sum(terms * w_u, axis=1)
    return out.reshape(x_arr.shape)[()] if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def price_curve(j: int, t: float, x_grid: Sequence[float], sol: LadderSolution) -> np.ndarray:
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size == 0:
        raise DomainError("x_grid must be non-empty")
    return np.atleast_1d(price(j, t, x_grid, sol))
