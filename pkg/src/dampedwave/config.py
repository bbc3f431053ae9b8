"""Run and sweep configuration: TOML files validated by pydantic models.

Unknown keys are errors everywhere, so a misspelled exponent never falls back
to a default silently.

Example run file::

    name = "damped_cubic_small"

    [domain]
    d = 3
    n = 16

    [[nonlinearity.terms]]
    lambda = 1.0
    alpha = 3.0

    [damping]
    kind = "constant"
    value = 1.0

    [initial]
    kind = "modes"
    modes = [{ k = [1, 1, 1], u = 0.1, v = 0.0 }]

    [stepper]
    dt = 1e-3
    t_end = 50.0
"""

import itertools
import logging
import math
import tomllib
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.utils.trees import tree_get, tree_set

from .diagnostics import DampingProfile, WaveState
from .domain import SpectralDomain
from .errors import ConfigError
from .initial_data import load_state, mode_superposition, random_state
from .integrator import StepperConfig
from .nonlinearity import NonlinearitySpec, hypothesis_report


logger = logging.getLogger(__name__)

FORMAT_VERSION = "1"
DEFAULT_MAX_RUNS = 256


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainConfig(_Block):
    """Box ``Π[0, Lⱼ]`` with ``n`` modes per axis, boundary condition and mass β."""

    d: Literal[1, 2, 3] = 3
    n: int | list[int] = 32
    lengths: float | list[float] | None = None
    bc: Literal["dirichlet", "periodic"] = "dirichlet"
    beta: float = 0.0

    def _per_axis(self, value: Any) -> list[Any] | None:
        if value is None:
            return None
        return list(value) if isinstance(value, list) else [value] * self.d

    @property
    def lambda1(self) -> float:
        """Fundamental eigenvalue: ``Σ (π/Lⱼ)²`` for sines, 0 on the torus."""
        if self.bc == "periodic":
            return 0.0
        lengths = self._per_axis(self.lengths) or [math.pi] * self.d
        return sum((math.pi / _l) ** 2 for _l in lengths)

    @model_validator(mode="after")
    def _poincare(self) -> "DomainConfig":
        for name in ("n", "lengths"):
            values = self._per_axis(getattr(self, name))
            if values is not None and len(values) != self.d:
                raise ValueError(f"domain.{name} needs {self.d} entries, got {values}")
        if self.lambda1 + self.beta <= 0:
            raise ValueError(
                f"Poincaré: λ₁+β ≤ 0 (λ₁={self.lambda1:.6g}, β={self.beta:.6g})"
            )
        return self

    def build(self, workers: int | None = None) -> SpectralDomain:
        """Instantiate the domain."""
        return SpectralDomain(
            d=self.d,
            n=self._per_axis(self.n),
            lengths=self._per_axis(self.lengths),
            bc=self.bc,
            beta=self.beta,
            workers=workers,
        )


class DampingConfig(_Block):
    """``γ ≥ 0``: a constant, a grid file (``.npy``), or ``value·𝟙_B`` for a box ``B``."""

    kind: Literal["constant", "file", "indicator"] = "constant"
    value: float = Field(default=0.0, ge=0.0)
    path: Path | None = None
    lower: list[float] | None = None
    upper: list[float] | None = None

    @model_validator(mode="after")
    def _complete(self) -> "DampingConfig":
        if self.kind == "file" and self.path is None:
            raise ValueError("damping.kind = 'file' needs damping.path")
        if self.kind == "indicator" and (self.lower is None or self.upper is None):
            raise ValueError("damping.kind = 'indicator' needs lower and upper")
        return self

    def build(self, dom: SpectralDomain) -> DampingProfile:
        """Sample γ on the grid of ``dom``."""
        try:
            if self.kind == "constant":
                return DampingProfile.constant(dom, self.value)
            if self.kind == "indicator":
                return DampingProfile.indicator(dom, self.value, self.lower, self.upper)
            gamma = np.load(self.path)
            if gamma.shape != dom.shape:
                raise ValueError(f"damping grid has shape {gamma.shape}, expected {dom.shape}")
            return DampingProfile(gamma=np.asarray(gamma, dtype=np.float64))
        except ValueError as exc:
            raise ConfigError(f"damping: {exc}") from exc


class ModeConfig(_Block):
    """One mode ``k`` with amplitudes for ``u⁰`` and ``u¹``."""

    k: list[int]
    u: float = 0.0
    v: float = 0.0


class InitialDataConfig(_Block):
    """Pure modes, a seeded random field, or a file (checkpoint or ``.npz``)."""

    kind: Literal["modes", "random", "file"] = "modes"
    modes: list[ModeConfig] = Field(default_factory=list)
    seed: int = 0
    amplitude: float = Field(default=0.1, ge=0.0)
    velocity_amplitude: float = Field(default=0.0, ge=0.0)
    decay: float = 2.0
    path: Path | None = None

    @model_validator(mode="after")
    def _complete(self) -> "InitialDataConfig":
        if self.kind == "file" and self.path is None:
            raise ValueError("initial.kind = 'file' needs initial.path")
        return self

    def build(self, dom: SpectralDomain, seed: int | None = None) -> WaveState:
        """Produce ``(u⁰, u¹)`` on ``dom``; ``seed`` overrides the configured one."""
        if self.kind == "modes":
            return mode_superposition(dom, [(_m.k, _m.u, _m.v) for _m in self.modes])
        if self.kind == "random":
            return random_state(
                dom,
                self.seed if seed is None else seed,
                self.amplitude,
                self.decay,
                self.velocity_amplitude,
            )
        return load_state(self.path, dom)


class OutputsConfig(_Block):
    """Where artifacts go and how often states are persisted."""

    directory: Path = Path("runs/default")
    checkpoint_every: int = Field(default=0, ge=0)
    snapshot_every: int = Field(default=10, ge=0)


class RunConfig(_Block):
    """Everything one run needs, fully resolved."""

    name: str = "run"
    domain: DomainConfig = Field(default_factory=DomainConfig)
    nonlinearity: NonlinearitySpec = Field(default_factory=NonlinearitySpec)
    damping: DampingConfig = Field(default_factory=DampingConfig)
    initial: InitialDataConfig = Field(default_factory=InitialDataConfig)
    stepper: StepperConfig
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    def with_overrides(self, overrides: dict[str, Any]) -> "RunConfig":
        """Copy with dotted-path overrides applied, then re-validated."""
        data = self.model_dump(mode="json", by_alias=True)
        for path, value in overrides.items():
            try:
                tree_set(data, path, value)
            except KeyError as exc:
                raise ConfigError(f"override {path!r}: {exc}") from exc
        return validate_run_config(data)


class SweepAxis(_Block):
    """One swept parameter addressed by dotted path, e.g. ``damping.value``."""

    path: str
    values: list[Any] = Field(min_length=1)


class SweepConfig(_Block):
    """A base run and the cross product of its axes."""

    base: RunConfig
    axes: list[SweepAxis] = Field(default_factory=list)
    parallelism: int = Field(default=1, ge=1)
    max_runs: int = Field(default=DEFAULT_MAX_RUNS, ge=1)

    @property
    def size(self) -> int:
        """Number of runs in the cross product."""
        return math.prod(len(_axis.values) for _axis in self.axes)

    @model_validator(mode="after")
    def _capped(self) -> "SweepConfig":
        if self.size > self.max_runs:
            raise ValueError(
                f"sweep has {self.size} runs, more than max_runs={self.max_runs}"
            )
        return self

    @model_validator(mode="after")
    def _axes_exist(self) -> "SweepConfig":
        base = self.base.model_dump(mode="json", by_alias=True)
        for axis in self.axes:
            try:
                tree_get(base, axis.path)
            except KeyError as exc:
                raise ValueError(f"sweep axis {axis.path!r} is not a config value: {exc}") from exc
        return self

    def expand(self) -> list[tuple[str, dict[str, Any], RunConfig]]:
        """Return ``(run_id, axis values, config)`` for every grid point."""
        runs = []
        combos = itertools.product(*(_axis.values for _axis in self.axes))
        for index, combo in enumerate(combos):
            run_id = f"run_{index:03d}"
            point = {_axis.path: _value for _axis, _value in zip(self.axes, combo)}
            config = self.base.with_overrides(
                {**point, "name": f"{self.base.name}/{run_id}"}
            )
            runs.append((run_id, point, config))
        return runs


def _validate(model: type[BaseModel], data: dict[str, Any], source: str) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def validate_run_config(data: dict[str, Any], source: str = "run config") -> RunConfig:
    """Validate a run config mapping, then log hypothesis-scope warnings."""
    config: RunConfig = _validate(RunConfig, data, source)
    report = hypothesis_report(config.nonlinearity, config.domain.d)
    if not config.nonlinearity.is_zero:
        if not report.in_theorem_scope:
            logger.warning("d=%d lies outside the theorem's scope (d ≥ 3)", report.d)
        if not report.subcritical_i_ii:
            logger.warning(
                "p=%s is not energy-subcritical (needs p < %s)",
                report.p,
                report.critical_exponent,
            )
    return config


def _read_toml(path: Path) -> dict[str, Any]:
    try:
        with Path(path).open("rb") as file:
            return tomllib.load(file)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_run_config(path: Path) -> RunConfig:
    """Read and validate a run TOML file."""
    return validate_run_config(_read_toml(path), source=str(path))


def load_sweep_config(path: Path) -> SweepConfig:
    """Read and validate a sweep TOML file (``[base.*]`` sections plus ``[[axes]]``)."""
    return _validate(SweepConfig, _read_toml(path), str(path))
