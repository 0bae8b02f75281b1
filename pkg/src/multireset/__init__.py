"""Multiple reset put options under geometric Brownian motion: integral-equation pricing and checks."""

from .analytics import (
    DomainError,
    ModelParams,
    european_put,
    find_t_star,
    h1,
    kernel_L,
    norm_cdf,
    norm_pdf,
    qhat_tail,
    unit_put,
)
from .boundary import INFINITE, BoundaryCurve, LevelInputs, SolverError, TimeGrid, solve_boundary
from .ladder import LadderSolution, PremiumCurve, price, price_curve, solve_ladder
from .oracles import LatticeSpec, McEstimate, McSpec, lattice_multi_reset, mc_european, mc_strategy_price
from .parity import ParityQuote, from_reset_put, pair_put_side

__all__ = [
    "BoundaryCurve",
    "DomainError",
    "INFINITE",
    "LadderSolution",
    "LatticeSpec",
    "LevelInputs",
    "McEstimate",
    "McSpec",
    "ModelParams",
    "ParityQuote",
    "PremiumCurve",
    "SolverError",
    "TimeGrid",
    "european_put",
    "find_t_star",
    "from_reset_put",
    "h1",
    "kernel_L",
    "lattice_multi_reset",
    "mc_european",
    "mc_strategy_price",
    "norm_cdf",
    "norm_pdf",
    "pair_put_side",
    "price",
    "price_curve",
    "qhat_tail",
    "solve_boundary",
    "solve_ladder",
    "unit_put",
]
