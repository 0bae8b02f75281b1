"""Backward-in-time solution of one level's nonlinear integral equation for the reset boundary.

The premium integral over ``[t_k, T]`` is approximated with the midpoint rule on
every subinterval ``[t_l, t_{l+1}]``. Sampling at the right endpoints would
evaluate ``h`` at ``u = T``, where it blows up like ``(T - u)**-0.5``;
midpoints never touch maturity.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .analytics import DomainError, ModelParams, european_put, kernel_L

INFINITE = math.inf

# bisection bracket: [K (1 + 1e-9), K exp(8 sigma sqrt(T))], stop at 1e-10 K
_LOWER_REL = 1e-9
_UPPER_STDEVS = 8.0
_XTOL_REL = 1e-10
_MAX_BISECTIONS = 200


class SolverError(RuntimeError):
    """Root finding failed at a grid node."""

    def __init__(self, message: str, index: Optional[int] = None, level: Optional[int] = None):
        super().__init__(message)
        self.index = index
        self.level = level


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition ``t_k = k T / N`` of ``[0, T]``."""

    n_steps: int
    maturity: float

    def __post_init__(self) -> None:
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise DomainError(f"n_steps must be an integer >= 2, got {self.n_steps!r}")
        if not self.maturity > 0.0:
            raise DomainError(f"maturity must be positive, got {self.maturity!r}")

    @property
    def dt(self) -> float:
        return self.maturity / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        nodes = np.arange(self.n_steps + 1) * self.dt
        nodes[-1] = self.maturity
        return nodes

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.dt


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Reset boundary sampled on a grid; ``INFINITE`` marks nodes where resetting never pays."""

    grid: TimeGrid
    values: np.ndarray
    strike_ref: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise DomainError("boundary values do not match the grid")
        object.__setattr__(self, "values", values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,b\n")
        for t, b in zip(self.grid.nodes, self.values):
            buf.write(f"{format_float(t)},{format_float(b)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, strike_ref: float) -> "BoundaryCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["t", "b"]:
            raise ValueError("expected header 't,b'")
        ts = np.array([float(r[0]) for r in rows[1:]])
        bs = np.array([float(r[1]) for r in rows[1:]])
        grid = TimeGrid(len(ts) - 1, float(ts[-1]))
        if not np.allclose(ts, grid.nodes, rtol=0.0, atol=1e-12 * grid.maturity):
            raise ValueError("CSV times are not a uniform grid starting at 0")
        return cls(grid, bs, strike_ref)


def format_float(value: float) -> str:
    """17 significant digits; infinities as ``inf``."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


@dataclass(frozen=True, eq=False)
class LevelInputs:
    """Data for one level: ``h`` at quadrature midpoints and the multiplier ``m`` on the grid.

    ``m(t) = unit_put(t) + p_prev(t)`` is the slope of the reset payoff above the strike.
    """

    grid: TimeGrid
    h_mid: np.ndarray
    multiplier: np.ndarray
    params: ModelParams
    level: Optional[int] = field(default=None)

    def __post_init__(self) -> None:
        h_mid = np.asarray(self.h_mid, dtype=float)
        mult = np.asarray(self.multiplier, dtype=float)
        if h_mid.shape != (self.grid.n_steps,) or mult.shape != (self.grid.n_steps + 1,):
            raise DomainError("level inputs do not match the grid")
        object.__setattr__(self, "h_mid", h_mid)
        object.__setattr__(self, "multiplier", mult)

    @classmethod
    def tabulate(
        cls,
        h: Callable[[np.ndarray], np.ndarray],
        multiplier: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
        grid: TimeGrid,
        params: ModelParams,
        level: Optional[int] = None,
    ) -> "LevelInputs":
        mult = multiplier(grid.nodes) if callable(multiplier) else multiplier
        return cls(grid, h(grid.midpoints), mult, params, level)


def _midpoint_levels(values: np.ndarray) -> np.ndarray:
    # linear interpolation at subinterval midpoints; an INFINITE end propagates
    return 0.5 * (values[:-1] + values[1:])


def premium_sum(k: int, x, z_mid: np.ndarray, inputs: LevelInputs) -> float:
    """``dt * sum_l L(h(u_l), t_k, u_l, x, z_l)`` over midpoints ``u_l`` of ``[t_k, T]``."""
    grid = inputs.grid
    if k >= grid.n_steps:
        return 0.0
    u = grid.midpoints[k:]
    terms = kernel_L(inputs.h_mid[k:], grid.nodes[k], u, x, z_mid, inputs.params)
    return grid.dt * float(np.sum(terms))


def residual(beta: float, k: int, inputs: LevelInputs, later: np.ndarray) -> float:
    """Value-matching defect ``beta m(t_k) - V^e(t_k, beta) - premium`` at node ``k``.

    ``later`` holds the boundary on the whole grid; only indices above ``k``
    are read. The midpoint of the first subinterval uses ``(beta + b_{k+1}) / 2``.
    """
    grid = inputs.grid
    p = inputs.params
    K = p.K
    if k < 0 or k > grid.n_steps:
        raise DomainError(f"grid index {k} out of range")
    if beta < K or (beta == K and k < grid.n_steps):
        raise DomainError(f"candidate boundary {beta!r} must exceed the strike {K!r}")
    t_k = grid.nodes[k]
    lhs = beta * inputs.multiplier[k] - float(european_put(t_k, beta, K, p))
    if k == grid.n_steps:
        return lhs
    z_mid = np.empty(grid.n_steps - k)
    z_mid[0] = 0.5 * (beta + later[k + 1])
    z_mid[1:] = _midpoint_levels(later[k + 1 :])
    return lhs - premium_sum(k, beta, z_mid, inputs)


def bracket(params: ModelParams) -> tuple[float, float]:
    K = params.K
    return K * (1.0 + _LOWER_REL), K * math.exp(_UPPER_STDEVS * params.sigma * math.sqrt(params.T))


def solve_step(k: int, inputs: LevelInputs, later: np.ndarray) -> float:
    """Root of :func:`residual` at node ``k`` by bisection, or ``INFINITE`` without a sign change."""
    lo, hi = bracket(inputs.params)
    f_lo = residual(lo, k, inputs, later)
    f_hi = residual(hi, k, inputs, later)
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)):
        raise SolverError(
            f"residual not finite on the bracket at node {k} (f_lo={f_lo}, f_hi={f_hi})",
            index=k,
            level=inputs.level,
        )
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo < 0.0) == (f_hi < 0.0):
        return INFINITE
    xtol = _XTOL_REL * inputs.params.K
    lo_negative = f_lo < 0.0
    for _ in range(_MAX_BISECTIONS):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid, k, inputs, later)
        if not math.isfinite(f_mid):
            raise SolverError(f"residual not finite at beta={mid} node {k}", index=k, level=inputs.level)
        if (f_mid < 0.0) == lo_negative:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_boundary(inputs: LevelInputs, grid: Optional[TimeGrid] = None) -> BoundaryCurve:
    """Solve nodes ``N-1, ..., 0`` backward from ``b(T) = K``.

    Once a node comes back ``INFINITE`` every earlier node is ``INFINITE`` too.
    """
    grid = grid or inputs.grid
    if grid != inputs.grid:
        raise DomainError("grid does not match the level inputs")
    values = np.full(grid.n_steps + 1, np.nan)
    values[-1] = inputs.params.K
    for k in range(grid.n_steps - 1, -1, -1):
        b = solve_step(k, inputs, values)
        if math.isinf(b):
            values[: k + 1] = INFINITE
            break
        values[k] = b
    return BoundaryCurve(grid, values, inputs.params.K)


def interpolate(curve: BoundaryCurve, t: float) -> float:
    """Linear interpolation between grid nodes; both bracketing nodes must be finite."""
    grid = curve.grid
    if not (0.0 <= t <= grid.maturity):
        raise DomainError(f"time {t!r} outside [0, {grid.maturity}]")
    pos = t / grid.dt
    i = min(int(math.floor(pos)), grid.n_steps - 1)
    w = pos - i
    lo, hi = curve.values[i], curve.values[i + 1]
    if w == 0.0 and math.isfinite(lo):
        return float(lo)
    if w == 1.0 and math.isfinite(hi):
        return float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(f"boundary is INFINITE next to t={t!r}")
    return float((1.0 - w) * lo + w * hi)


def interpolate_or_infinite(curve: BoundaryCurve, t) -> np.ndarray:
    """Vectorised interpolation that maps brackets touching ``INFINITE`` to ``INFINITE``."""
    grid = curve.grid
    t = np.asarray(t, dtype=float)
    pos = t / grid.dt
    i = np.clip(np.floor(pos).astype(int), 0, grid.n_steps - 1)
    w = pos - i
    lo = curve.values[i]
    hi = curve.values[i + 1]
    with np.errstate(invalid="ignore"):
        out = np.where(w == 0.0, lo, np.where(w == 1.0, hi, (1.0 - w) * lo + w * hi))
    ok = np.where(
        w == 0.0, np.isfinite(lo), np.where(w == 1.0, np.isfinite(hi), np.isfinite(lo) & np.isfinite(hi))
    )
    return np.where(ok, out, INFINITE)
