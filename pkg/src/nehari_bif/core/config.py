"""
Configuration for nehari-bif.

Run parameters come from an INI-style file with [model], [optimizer] and [sweep] sections,
optionally overridden by `--set section.key=value` pairs. Machine defaults (threads, output
directory, log level) come from NEHARI_* environment variables.
"""

import configparser
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError, ValidationError
from .grid import Grid
from .models import KirchhoffModel, ModelSpec, NEPModel

log = logging.getLogger(__name__)

SECTIONS = ("model", "optimizer", "sweep")


class EnvSettings(BaseSettings):
    """Environment-based settings loaded from NEHARI_* variables or a .env file."""

    model_config = SettingsConfigDict(
        env_prefix="NEHARI_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    threads: int = 1
    output_dir: str = "."
    log_level: str = "INFO"


def load_env_settings() -> EnvSettings:
    try:
        return EnvSettings()
    except PydanticValidationError as exc:
        raise ConfigError(f"invalid NEHARI_* environment settings: {exc}") from exc


@dataclass(frozen=True)
class OptimizerOptions:
    """Sphere optimizer and multistart settings shared by the extremal and branch solvers."""

    max_iter: int = 5000
    grad_tol: float = 1e-9  # relative to the objective's own scale
    restarts: int = 8
    seed: int = 0
    initial_step: float = 0.1  # H^1 length of the first step
    shrink: float = 0.5
    sufficient_increase: float = 1e-4  # Armijo constant
    residual_tol: float = 1e-6  # acceptance of a branch solution
    max_resamples: int = 50  # random redraws when a start direction has no projection
    stall_tol: float = 1e-6  # relative gradient accepted when a run stalls at round-off

    def __post_init__(self):
        for name in ("max_iter", "restarts", "max_resamples"):
            if getattr(self, name) < 1:
                raise ValidationError(f"optimizer.{name} must be >= 1, got {getattr(self, name)}")
        positive = ("grad_tol", "initial_step", "sufficient_increase", "residual_tol", "stall_tol")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValidationError(f"optimizer.{name} must be positive, got {value}")
        if self.stall_tol < self.grad_tol:
            raise ValidationError(
                f"optimizer.stall_tol must be >= grad_tol, got {self.stall_tol} < {self.grad_tol}"
            )
        if not 0.0 < self.shrink < 1.0:
            raise ValidationError(f"optimizer.shrink must be in (0, 1), got {self.shrink}")
        if self.seed < 0:
            raise ValidationError(f"optimizer.seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class LambdaGrid:
    """
    Parameter grid of a sweep.

    geometric/linear grids are given by `count` points between `lo` and `hi` as multiples of
    the lambda* estimate; explicit grids list absolute lambda values. Without `hi` the upper
    end comes from the sweep's margin.
    """

    kind: Literal["geometric", "linear", "explicit"] = "geometric"
    count: int = 64
    lo: float = 0.05
    hi: Optional[float] = None
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("geometric", "linear", "explicit"):
            raise ValidationError(f"unknown lambda grid kind '{self.kind}'")
        if self.kind == "explicit":
            values = tuple(float(v) for v in self.values)
            if any(not (math.isfinite(v) and v > 0.0) for v in values):
                raise ValidationError("explicit lambda values must be positive")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValidationError("explicit lambda values must be sorted ascending")
            object.__setattr__(self, "values", values)
            return
        if self.count < 0:
            raise ValidationError(f"sweep.count must be >= 0, got {self.count}")
        if not self.lo > 0.0:
            raise ValidationError(f"sweep.lo must be positive, got {self.lo}")
        if self.hi is not None:
            _check_bounds(self.lo, self.hi)

    def resolve(self, lambda_star: float, hi: Optional[float] = None) -> np.ndarray:
        """Absolute lambda values, ascending. `hi` is used when the grid has none of its own."""
        if self.kind == "explicit":
            return np.asarray(self.values, dtype=float)
        upper = self.hi if self.hi is not None else hi
        if upper is None:
            raise ValidationError("relative lambda grid needs an upper bound")
        _check_bounds(self.lo, upper)
        start, stop = self.lo * lambda_star, upper * lambda_star
        if self.kind == "geometric":
            return np.geomspace(start, stop, self.count)
        return np.linspace(start, stop, self.count)

    def describe(self, hi: Optional[float] = None) -> str:
        if self.kind == "explicit":
            return "explicit:" + ",".join(f"{v:.17g}" for v in self.values)
        upper = self.hi if self.hi is not None else hi
        end = f"{upper:g}" if upper is not None else "margin"
        return f"{self.kind}:{self.count}:{self.lo:g}:{end}"


def _check_bounds(lo: float, hi: float) -> None:
    if not 0.0 < lo < hi:
        raise ValidationError(f"sweep bounds need 0 < lo < hi, got lo={lo}, hi={hi}")


@dataclass(frozen=True)
class SweepConfig:
    """Everything a bifurcation sweep needs besides the extremal report."""

    model: ModelSpec
    grid: LambdaGrid = field(default_factory=LambdaGrid)
    solver_opts: OptimizerOptions = field(default_factory=OptimizerOptions)
    margin: float = 0.10  # relative overshoot past lambda*
    warm_start: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.margin) and self.margin >= 0.0):
            raise ValidationError(f"sweep.margin must be >= 0, got {self.margin}")
        if self.grid.kind != "explicit" and self.grid.hi is None:
            _check_bounds(self.grid.lo, self.upper)

    @property
    def upper(self) -> float:
        """Upper end of a relative grid as a multiple of lambda*: hi if set, else 1 + margin."""
        return self.grid.hi if self.grid.hi is not None else 1.0 + self.margin

    def lambda_values(self, lambda_star: float) -> np.ndarray:
        return self.grid.resolve(lambda_star, self.upper)

    @property
    def grid_spec(self) -> str:
        return self.grid.describe(self.upper)


# Config file sections. Validators defer to the domain constructors so messages match API use.


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSection(_Section):
    model: Literal["kirchhoff", "nep"] = "kirchhoff"
    a: float = 1.0
    q: float = 3.0
    gamma: float = 4.0
    mu: float = 1.0
    dim: int = 1
    n: int = 200
    length: float = 1.0

    def build(self) -> ModelSpec:
        grid = Grid(dim=self.dim, n=self.n, length=self.length)
        if self.model == "kirchhoff":
            if "gamma" in self.model_fields_set and self.gamma != 4.0:
                raise ValidationError(f"kirchhoff fixes gamma = 4, got gamma={self.gamma}")
            return KirchhoffModel(a=self.a, q=self.q, grid=grid)
        return NEPModel(gamma=self.gamma, q=self.q, mu=self.mu, grid=grid)


class OptimizerSection(_Section):
    max_iter: int = 5000
    grad_tol: float = 1e-9
    restarts: int = 8
    seed: int = 0
    initial_step: float = 0.1
    shrink: float = 0.5
    sufficient_increase: float = 1e-4
    residual_tol: float = 1e-6
    max_resamples: int = 50
    stall_tol: float = 1e-6

    def build(self) -> OptimizerOptions:
        return OptimizerOptions(**self.model_dump())


class SweepSection(_Section):
    grid: Literal["geometric", "linear", "explicit"] = "geometric"
    count: int = 64
    lo: float = 0.05
    hi: Optional[float] = None
    values: Tuple[float, ...] = ()
    margin: float = 0.10
    warm_start: bool = True

    @field_validator("hi", mode="before")
    @classmethod
    def _blank_hi(cls, raw):
        if isinstance(raw, str) and not raw.strip():
            return None
        return raw

    @field_validator("values", mode="before")
    @classmethod
    def _split_values(cls, raw):
        if isinstance(raw, str):
            return tuple(item.strip() for item in raw.split(",") if item.strip())
        return raw

    def build(self, model: ModelSpec, opts: OptimizerOptions) -> SweepConfig:
        grid = LambdaGrid(
            kind=self.grid, count=self.count, lo=self.lo, hi=self.hi, values=self.values
        )
        return SweepConfig(
            model=model,
            grid=grid,
            solver_opts=opts,
            margin=self.margin,
            warm_start=self.warm_start,
        )


_SECTION_MODELS = {"model": ModelSection, "optimizer": OptimizerSection, "sweep": SweepSection}


class ParsedConfig(NamedTuple):
    model: ModelSpec
    optimizer: OptimizerOptions
    sweep: SweepConfig
    snapshot: str  # canonical text of the effective configuration


def _read_file(path: Path) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";")
    )
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except FileNotFoundError as exc:
        raise ConfigError("config file not found", path=str(path)) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", path=str(path)) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("line outside of any section", str(path), exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"malformed line {line!r}", str(path), lineno) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message, str(path), exc.lineno) from exc

    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}", path=str(path))
    return {name: dict(parser.items(name)) for name in parser.sections()}


def _apply_overrides(raw: Dict[str, Dict[str, str]], overrides: Sequence[str]) -> None:
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot or not option:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if section not in SECTIONS:
            raise ConfigError(f"unknown section '{section}' in override {item!r}")
        raw.setdefault(section, {})[option.strip()] = value.strip()


def _validate_section(name: str, values: Dict[str, str], path: Optional[str]):
    try:
        return _SECTION_MODELS[name](**values)
    except PydanticValidationError as exc:
        errors = exc.errors()
        unknown = sorted(str(err["loc"][0]) for err in errors if err["type"] == "extra_forbidden")
        if unknown:
            raise ConfigError(f"unknown keys in [{name}]: {', '.join(unknown)}", path=path) from exc
        first = errors[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"[{name}] {key}: {first['msg']}", path=path) from exc


def _snapshot(sections: Dict[str, _Section]) -> str:
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        for key, value in sections[name].model_dump().items():
            if value is None:
                value = ""
            elif isinstance(value, tuple):
                value = ",".join(f"{v:.17g}" for v in value)
            elif isinstance(value, float):
                value = f"{value:.17g}"
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> ParsedConfig:
    """
    Build the model, optimizer options and sweep configuration.

    The file (when given) is read first, then overrides are applied. Unknown keys are reported
    together per section; domain violations surface as ValidationError with the same message
    the API constructors use.
    """
    raw: Dict[str, Dict[str, str]] = {}
    if path is not None:
        raw = _read_file(Path(path))
    _apply_overrides(raw, overrides)

    sections = {name: _validate_section(name, raw.get(name, {}), path) for name in SECTIONS}
    model = sections["model"].build()
    optimizer = sections["optimizer"].build()
    sweep = sections["sweep"].build(model, optimizer)
    log.debug("Parsed configuration for %s", model.model_id)
    return ParsedConfig(
        model=model, optimizer=optimizer, sweep=sweep, snapshot=_snapshot(sections)
    )
