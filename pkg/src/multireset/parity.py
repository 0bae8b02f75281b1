"""Static parity between reset puts/calls and shout calls/puts with the same number of rights."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .analytics import ModelParams


def parity_constant(x0: float, params: ModelParams, maturity: Optional[float] = None) -> float:
    """``K exp(-r T) - x0 exp(-delta T)``; ``maturity`` overrides ``params.T`` (remaining life)."""
    T = params.T if maturity is None else maturity
    return params.K * math.exp(-params.r * T) - x0 * math.exp(-params.delta * T)


@dataclass(frozen=True)
class ParityQuote:
    """Prices linked by parity. Legs that need a reset-call input stay ``None``."""

    reset_put: float
    shout_call: float
    x0: float
    params: ModelParams
    shout_put: Optional[float] = None
    reset_call: Optional[float] = None
    maturity: Optional[float] = None

    @property
    def constant(self) -> float:
        return parity_constant(self.x0, self.params, self.maturity)

    @property
    def put_side_available(self) -> bool:
        return self.shout_put is not None and self.reset_call is not None

    def with_reset_call(self, v_rc: float) -> "ParityQuote":
        return replace(self, reset_call=v_rc, shout_put=pair_put_side(v_rc, self.x0, self.params, self.maturity))

    def to_dict(self) -> dict:
        return {
            "reset_put": self.reset_put,
            "shout_call": self.shout_call,
            "shout_put": self.shout_put,
            "reset_call": self.reset_call,
            "x0": self.x0,
            "parity_constant": self.constant,
            "put_side": "available" if self.put_side_available else "requires reset_call input",
            "params": self.params.to_dict(),
        }


def from_reset_put(v_rp: float, x0: float, params: ModelParams, maturity: Optional[float] = None) -> ParityQuote:
    if v_rp < 0.0 or x0 <= 0.0:
        raise ValueError("need v_rp >= 0 and x0 > 0")
    shout_call = v_rp - parity_constant(x0, params, maturity)
    return ParityQuote(reset_put=v_rp, shout_call=shout_call, x0=x0, params=params, maturity=maturity)


def pair_put_side(v_rc: float, x0: float, params: ModelParams, maturity: Optional[float] = None) -> float:
    """Shout put implied by a reset call price."""
    if v_rc < 0.0:
        raise ValueError("reset call price must be non-negative")
    return v_rc + parity_constant(x0, params, maturity)
