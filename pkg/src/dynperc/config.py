"""Experiment configuration files (TOML) and their validation."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import tomli

from .lattice import DEFAULT_T_GRID, LatticeError, SimulationParams

COMMANDS = ("sweep", "oracle", "radius", "animal", "regime", "time-constant",
            "variance-scaling", "coincidence")

PARAM_KEYS = {"d", "p", "n", "side", "x_dir", "M", "C_star", "seed", "samples", "t_grid", "margin"}

# per-command options and their defaults
OPTION_DEFAULTS = {
    "sweep": {"truncated": True},
    "oracle": {"instances": ""},
    "radius": {"t": 0.1, "edges_per_sample": 200, "interior": 10, "locality_trials": 500,
               "ells": [1, 2, 3]},
    "animal": {"Ls": list(range(4, 13)), "Ns": [1, 2, 3], "q": 0.1, "dependence": 1},
    "regime": {"betas": [0.1, 1.0, 10.0]},
    "time-constant": {"ns": [32, 64, 128]},
    "variance-scaling": {"ns": [32, 64, 128, 256]},
    "coincidence": {"ts": [0.0]},
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ExperimentSpec:
    command: str
    params: SimulationParams
    out: str = "out"
    workers: int = 1
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params.to_dict(), "out": self.out,
                "workers": self.workers, "options": copy.deepcopy(self.options)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        return build_spec(data)


def _check_params(raw: dict, problems: list) -> None:
    for key in sorted(set(raw) - PARAM_KEYS):
        problems.append(f"params.{key}: unknown key")
    checks = {
        "d": lambda v: isinstance(v, int) and v >= 2,
        "p": lambda v: isinstance(v, (int, float)) and 0 <= v <= 1,
        "n": lambda v: isinstance(v, int) and v >= 1,
        "samples": lambda v: isinstance(v, int) and v >= 1,
        "seed": lambda v: isinstance(v, int) and 0 <= v < 2**64,
        "M": lambda v: isinstance(v, int) and v >= 2,
        "C_star": lambda v: isinstance(v, int) and v >= 4,
        "side": lambda v: isinstance(v, int) and v >= 1,
        "margin": lambda v: isinstance(v, int) and v >= 0,
    }
    hints = {"d": "an integer >= 2", "p": "a number in [0, 1]", "n": "an integer >= 1",
             "samples": "an integer >= 1", "seed": "an unsigned 64-bit integer",
             "M": "an integer >= 2", "C_star": "an integer >= 4", "side": "an integer >= 1",
             "margin": "an integer >= 0"}
    for key, ok in checks.items():
        if key in raw and raw[key] is not None and (isinstance(raw[key], bool) or not ok(raw[key])):
            problems.append(f"params.{key}: expected {hints[key]}, got {raw[key]!r}")
    if "t_grid" in raw:
        tg = raw["t_grid"]
        if (not isinstance(tg, list) or not all(isinstance(v, (int, float)) for v in tg)
                or any(not 0 <= v <= 1 for v in tg) or tg != sorted(tg)):
            problems.append("params.t_grid: expected a sorted list of numbers in [0, 1]")
    if "x_dir" in raw:
        xd = raw["x_dir"]
        if not isinstance(xd, list) or not all(isinstance(v, int) for v in xd) or not any(xd):
            problems.append("params.x_dir: expected a non-zero list of integers")


def _check_options(command: str, raw: dict, problems: list) -> dict:
    defaults = OPTION_DEFAULTS[command]
    out = copy.deepcopy(defaults)
    for key, val in raw.items():
        if key not in defaults:
            problems.append(f"options.{key}: unknown key for command {command!r}")
            continue
        want = defaults[key]
        if isinstance(want, bool):
            good = isinstance(val, bool)
        elif isinstance(want, list):
            good = isinstance(val, list) and all(isinstance(v, (int, float)) for v in val) and val
        elif isinstance(want, (int, float)):
            good = isinstance(val, (int, float)) and not isinstance(val, bool)
            if good and isinstance(want, int) and not isinstance(val, int):
                good = False
        else:
            good = isinstance(val, str)
        if not good:
            problems.append(f"options.{key}: expected a value like {want!r}, got {val!r}")
        else:
            out[key] = val
    if command == "animal" and not 0 <= out["q"] <= 1:
        problems.append(f"options.q: expected a number in [0, 1], got {out['q']!r}")
    if command == "radius" and not 0 <= out["t"] <= 1:
        problems.append(f"options.t: expected a number in [0, 1], got {out['t']!r}")
    return out


def build_spec(data: dict, command: str | None = None) -> ExperimentSpec:
    """Validate a parsed configuration mapping and fill defaults."""
    problems = []
    allowed = {"command", "params", "out", "workers", "options"}
    for key in sorted(set(data) - allowed):
        problems.append(f"{key}: unknown key")
    cmd = command or data.get("command")
    if cmd not in COMMANDS:
        problems.append(f"command: expected one of {', '.join(COMMANDS)}, got {cmd!r}")
        raise ConfigError(problems)
    raw_params = dict(data.get("params", {}))
    _check_params(raw_params, problems)
    options = _check_options(cmd, dict(data.get("options", {})), problems)
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        problems.append(f"workers: expected an integer >= 1, got {workers!r}")
    out = data.get("out", "out")
    if not isinstance(out, str) or not out:
        problems.append("out: expected a non-empty path")
    if problems:
        raise ConfigError(problems)
    kwargs = {k: v for k, v in raw_params.items() if k in PARAM_KEYS}
    if "t_grid" in kwargs:
        kwargs["t_grid"] = tuple(float(v) for v in kwargs["t_grid"])
    else:
        kwargs.setdefault("t_grid", DEFAULT_T_GRID)
    if "x_dir" in kwargs:
        kwargs["x_dir"] = tuple(kwargs["x_dir"])
    try:
        params = SimulationParams(**kwargs)
    except LatticeError as exc:
        raise ConfigError([f"params: {exc}"]) from exc
    return ExperimentSpec(cmd, params, out, workers, options)


def load_config(path, command: str | None = None) -> ExperimentSpec:
    """Parse and validate a TOML file; syntax errors report line and column."""
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from exc
    return build_spec(data, command)


def validate_config(path, command: str | None = None) -> ExperimentSpec:
    """Alias of :func:`load_config`; warnings (e.g. small C_star) are emitted, not raised."""
    return load_config(path, command)


def satisfiable_c_star(d: int) -> int:
    """Smallest C_star for which the bypass-distance event can hold."""
    return 6 * d


__all__ = ["COMMANDS", "OPTION_DEFAULTS", "ConfigError", "ExperimentSpec", "build_spec",
           "load_config", "validate_config", "satisfiable_c_star"]
