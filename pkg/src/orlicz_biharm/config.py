"""Run configuration: a TOML file with ``[G]``, optional ``[B]``, ``[grid]`` and ``[solver]``.

Example::

    output_dir = "out"

    [G]
    family = "piecewise"
    p = 2.0
    q = 3.0

    [grid]
    dim = 1
    n = 200

    [solver]
    seed = 0

``[B]`` defaults to ``[G]``.  Every solver field is optional.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import tomli
import tomli_w

from orlicz_biharm.eigensolver import SolverConfig
from orlicz_biharm.grid import Grid
from orlicz_biharm.nfunction import NFunction, nfunction_from_config

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "serialize_config"]

SCHEMA_VERSION = "orlicz-biharm/1"

_SOLVER_FIELDS = {f.name: f.type for f in dataclasses.fields(SolverConfig)}
_TOP_KEYS = {"G", "B", "grid", "solver", "output_dir"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    G: NFunction
    grid: Grid
    B: NFunction | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: str = "."

    @property
    def specB(self) -> NFunction:
        return self.G if self.B is None else self.B

    def to_dict(self) -> dict:
        data = {"output_dir": self.output_dir, "G": self.G.to_config()}
        if self.B is not None:
            data["B"] = self.B.to_config()
        data["grid"] = {"dim": self.grid.dim, "n": self.grid.n}
        data["solver"] = {k: v for k, v in dataclasses.asdict(self.solver).items() if v is not None}
        return data


def _family(block, name):
    if not isinstance(block, dict):
        raise ConfigError(f"[{name}] must be a table")
    try:
        return nfunction_from_config(block)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def _solver(block):
    if not isinstance(block, dict):
        raise ConfigError("[solver] must be a table")
    unknown = set(block) - set(_SOLVER_FIELDS)
    if unknown:
        raise ConfigError(f"[solver]: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in block.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[solver]: {key} must be a number")
        if key in ("max_iters", "seed", "n_starts", "lambda0_starts"):
            if value != int(value):
                raise ConfigError(f"[solver]: {key} must be an integer")
            value = int(value)
        else:
            value = float(value)
        kwargs[key] = value
    try:
        return SolverConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[solver]: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded TOML document and build a :class:`RunConfig`."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    if "G" not in data:
        raise ConfigError("missing [G] section")
    if "grid" not in data:
        raise ConfigError("missing [grid] section")
    G = _family(data["G"], "G")
    B = _family(data["B"], "B") if "B" in data else None
    grid_block = data["grid"]
    if not isinstance(grid_block, dict) or set(grid_block) != {"dim", "n"}:
        raise ConfigError("[grid] needs exactly the keys dim and n")
    try:
        grid = Grid(int(grid_block["dim"]), int(grid_block["n"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[grid]: {exc}") from exc
    solver = _solver(data.get("solver", {}))
    output_dir = data.get("output_dir", ".")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string")
    return RunConfig(G, grid, B, solver, output_dir)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return parse_config(data)


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())
