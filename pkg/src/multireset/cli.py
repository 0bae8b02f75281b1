"""Command-line front end.

    multireset figure --out-file figs/
    multireset price --rights 4 --x-min 0.5 --x-max 2 --x-steps 15
    multireset verify-mc --rights 2 --paths 1000000 --cache ladder.json

Exit codes: 0 success, 1 failed verification or solver failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .analytics import DomainError, ModelParams, european_put
from .boundary import SolverError, TimeGrid, format_float
from .ladder import LadderSolution, price, price_curve, solve_ladder
from .oracles import LatticeSpec, McSpec, lattice_multi_reset, mc_european, mc_strategy_price
from .parity import from_reset_put

COMMANDS = ("boundary", "price", "parity", "verify-lattice", "verify-mc", "figure")
LATTICE_TOLERANCE = 5e-3  # times K


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ModelParams = field(default_factory=ModelParams)
    rights: int = 4
    grid_steps: int = 400
    x_min: float = 0.5
    x_max: float = 2.0
    x_steps: int = 15
    output_format: str = "csv"
    output_path: Optional[str] = None
    seed: int = 0
    paths: int = 100_000
    steps_per_year: int = 365
    cache_path: Optional[str] = None
    spot: Optional[float] = None
    reset_call: Optional[float] = None

    @property
    def x_grid(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.x_steps + 1)


# flag name -> (RunConfig field or params field, type)
_FIELDS: Dict[str, tuple] = {
    "rights": ("rights", int),
    "rate": ("r", float),
    "dividend": ("delta", float),
    "vol": ("sigma", float),
    "maturity": ("T", float),
    "strike": ("K", float),
    "grid-steps": ("grid_steps", int),
    "x-min": ("x_min", float),
    "x-max": ("x_max", float),
    "x-steps": ("x_steps", int),
    "output": ("output_format", str),
    "out-file": ("output_path", str),
    "seed": ("seed", int),
    "paths": ("paths", int),
    "steps-per-year": ("steps_per_year", int),
    "cache": ("cache_path", str),
    "spot": ("spot", float),
    "reset-call": ("reset_call", float),
}
_ALIASES = {"sigma": "vol", "r": "rate", "delta": "dividend", "T": "maturity", "K": "strike"}
_PARAM_FIELDS = {"r", "delta", "sigma", "T", "K"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # surface as UsageError so callers choose the exit path
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multireset", description="Multiple reset put option pricer")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    for flag, (_, kind) in _FIELDS.items():
        names = ["--" + flag] + (["--sigma"] if flag == "vol" else [])
        parser.add_argument(*names, dest=flag.replace("-", "_"), type=kind, default=argparse.SUPPRESS)
    parser.add_argument("--config", default=None, help="file of key=value lines, '#' comments")
    return parser


def read_config(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key).replace("_", "-")
        if key != "command" and key not in _FIELDS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse(args: Sequence[str], config_text: Optional[str] = None) -> RunConfig:
    """Build a RunConfig; flags override config values, which override defaults."""
    ns = vars(_build_parser().parse_args(list(args)))
    config_path = ns.pop("config", None)
    values: Dict[str, object] = {}
    if config_path is not None:
        try:
            with open(config_path) as fh:
                config_text = fh.read()
        except OSError as exc:
            raise UsageError(f"--config: cannot read {config_path}: {exc}") from exc
    command = ns.pop("command", None)
    if config_text is not None:
        for key, raw in read_config(config_text).items():
            if key == "command":
                command = command or raw
                continue
            kind = _FIELDS[key][1]
            try:
                values[key] = kind(raw)
            except ValueError as exc:
                raise UsageError(f"config key {key}: cannot parse {raw!r}") from exc
    for dest, value in ns.items():
        values[dest.replace("_", "-")] = value
    if command not in COMMANDS:
        raise UsageError(f"a command is required: one of {', '.join(COMMANDS)}")

    params_kw = ModelParams().to_dict()
    cfg_kw: Dict[str, object] = {}
    for key, value in values.items():
        name = _FIELDS[key][0]
        (params_kw if name in _PARAM_FIELDS else cfg_kw)[name] = value
    for key, name in (("rate", "r"), ("dividend", "delta"), ("vol", "sigma"), ("maturity", "T"), ("strike", "K")):
        value = params_kw[name]
        bad = not math.isfinite(value) or (value < 0.0 if name == "delta" else value <= 0.0)
        if bad:
            raise UsageError(f"--{key}: invalid value {value!r} for {name}")
    config = RunConfig(command=command, params=ModelParams(**params_kw), **cfg_kw)
    _validate(config)
    return config


def _validate(c: RunConfig) -> None:
    checks = [
        ("--rights", c.rights >= 0),
        ("--grid-steps", c.grid_steps >= 2),
        ("--x-min", c.x_min > 0.0),
        ("--x-max", c.x_max >= c.x_min),
        ("--x-steps", c.x_steps >= 0 and (c.x_steps > 0 or c.x_max == c.x_min)),
        ("--output", c.output_format in ("csv", "json")),
        ("--paths", c.paths >= 1),
        ("--steps-per-year", c.steps_per_year >= 1),
        ("--spot", c.spot is None or c.spot > 0.0),
        ("--reset-call", c.reset_call is None or c.reset_call >= 0.0),
    ]
    for flag, ok in checks:
        if not ok:
            raise UsageError(f"{flag}: invalid value")


# ------------------------------------------------------------------ outputs


def _csv_table(header: List[str], columns: List[np.ndarray]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(format_float(float(v)) for v in row) + "\n")
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(doc) -> str:
    return json.dumps(_json_safe(doc), sort_keys=True, indent=2) + "\n"


def _record(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return _dump_json(doc)
    keys = sorted(doc)
    cells = []
    for k in keys:
        v = doc[k]
        if isinstance(v, bool) or v is None or isinstance(v, str):
            cells.append(str(v).lower() if isinstance(v, bool) else ("" if v is None else v))
        elif isinstance(v, (int, np.integer)):
            cells.append(str(int(v)))
        elif isinstance(v, dict):
            cells.append(json.dumps(_json_safe(v), sort_keys=True).replace(",", ";"))
        else:
            cells.append(format_float(float(v)))
    return ",".join(keys) + "\n" + ",".join(cells) + "\n"


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ------------------------------------------------------------------ workflows


def load_or_solve(config: RunConfig, rights: Optional[int] = None) -> LadderSolution:
    """Solve the ladder, reusing ``cache_path`` when params, grid and depth match exactly."""
    n = config.rights if rights is None else rights
    params = config.params
    grid = TimeGrid(config.grid_steps, params.T)
    path = config.cache_path
    if path and os.path.exists(path):
        with open(path) as fh:
            cached = LadderSolution.from_json(fh.read())
        if cached.params == params and cached.grid == grid and cached.n_levels >= n:
            return LadderSolution(params, grid, cached.levels[:n])
    sol = solve_ladder(n, params, grid)
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(sol.to_json())
    return sol


def _boundary_table(sol: LadderSolution):
    header = ["t"] + [f"b_{lv.index}" for lv in sol.levels]
    columns = [sol.grid.nodes] + [lv.boundary.values for lv in sol.levels]
    return header, columns


def _price_table(sol: LadderSolution, x: np.ndarray, with_european: bool = False):
    header = ["x"] + (["V_e"] if with_european else []) + [f"V_{lv.index}" for lv in sol.levels]
    columns = [x] + ([np.atleast_1d(european_put(0.0, x, sol.params.K, sol.params))] if with_european else [])
    columns += [price_curve(lv.index, 0.0, x, sol) for lv in sol.levels]
    return header, columns


def _ladder_price(sol: LadderSolution, n: int, x: float) -> float:
    return float(price(n, 0.0, x, sol)) if n > 0 else float(european_put(0.0, x, sol.params.K, sol.params))


def verify_lattice(config: RunConfig, sol: LadderSolution) -> dict:
    K = config.params.K
    ladder = _ladder_price(sol, config.rights, K)
    oracle = lattice_multi_reset(config.rights, config.params, LatticeSpec())
    diff = abs(ladder - oracle)
    tol = LATTICE_TOLERANCE * K
    return {"ladder": ladder, "oracle": oracle, "abs_diff": diff, "tolerance": tol, "pass": bool(diff <= tol)}


def verify_mc(config: RunConfig, sol: LadderSolution) -> dict:
    """Monte Carlo check at ``t = 0``, ``x = K``.

    With rights the estimate must lie in ``[ladder - 3 SE - bias, ladder + 3 SE]``.
    The bias is the gap to a run with twice the monitoring frequency.
    """
    params = config.params
    K = params.K
    n = config.rights
    spec = McSpec(config.paths, config.steps_per_year, config.seed)
    ladder = _ladder_price(sol, n, K)
    if n == 0:
        est = mc_european(params, 0.0, K, K, spec)
        bias = 0.0
        lower, upper = ladder - 3.0 * est.std_error, ladder + 3.0 * est.std_error
    else:
        est = mc_strategy_price(n, sol, 0.0, K, spec)
        fine = mc_strategy_price(n, sol, 0.0, K, replace(spec, steps_per_year=2 * spec.steps_per_year))
        bias = abs(fine.mean - est.mean)
        lower, upper = ladder - 3.0 * est.std_error - bias, ladder + 3.0 * est.std_error
    return {
        "ladder": ladder,
        "oracle": est.mean,
        "std_error": est.std_error,
        "paths": est.paths,
        "seed": est.seed,
        "bias": bias,
        "abs_diff": abs(ladder - est.mean),
        "tolerance": max(ladder - lower, upper - ladder),
        "pass": bool(lower <= est.mean <= upper),
    }


def run(config: RunConfig) -> int:
    cmd = config.command
    fmt = config.output_format
    if cmd == "verify-mc" and config.rights == 0:
        sol = LadderSolution(config.params, TimeGrid(config.grid_steps, config.params.T))
    else:
        sol = load_or_solve(config)

    if cmd == "boundary":
        if fmt == "json":
            _write(_dump_json(sol.to_dict()), config.output_path)
        else:
            _write(_csv_table(*_boundary_table(sol)), config.output_path)
        return 0

    if cmd == "price":
        header, columns = _price_table(sol, config.x_grid)
        if fmt == "json":
            _write(_dump_json({"t": 0.0, **{h: c for h, c in zip(header, columns)}}), config.output_path)
        else:
            _write(_csv_table(header, columns), config.output_path)
        return 0

    if cmd == "parity":
        x0 = config.spot if config.spot is not None else config.params.K
        quote = from_reset_put(_ladder_price(sol, config.rights, x0), x0, config.params)
        if config.reset_call is not None:
            quote = quote.with_reset_call(config.reset_call)
        _write(_record({"rights": config.rights, **quote.to_dict()}, fmt), config.output_path)
        return 0

    if cmd in ("verify-lattice", "verify-mc"):
        report = verify_lattice(config, sol) if cmd == "verify-lattice" else verify_mc(config, sol)
        _write(_record({"rights": config.rights, **report}, fmt), config.output_path)
        return 0 if report["pass"] else 1

    if cmd == "figure":
        out_dir = config.output_path or "."
        os.makedirs(out_dir, exist_ok=True)
        fig1 = os.path.join(out_dir, "figure1_prices.csv")
        fig2 = os.path.join(out_dir, "figure2_boundaries.csv")
        _write(_csv_table(*_price_table(sol, config.x_grid, with_european=True)), fig1)
        _write(_csv_table(*_boundary_table(sol)), fig2)
        sys.stdout.write(f"{fig1}\n{fig2}\n")
        return 0

    raise UsageError(f"unknown command {cmd!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse(argv)
        return run(config)
    except UsageError as exc:
        sys.stderr.write(f"multireset: error: {exc}\n")
        return 2
    except (SolverError, DomainError) as exc:
        sys.stderr.write(f"multireset: {exc}\n")
        return 1
