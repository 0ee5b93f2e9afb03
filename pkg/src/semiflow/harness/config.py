"""Experiment configuration: a versioned YAML schema validated with pydantic."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "BasisSpec",
    "NoiseSpec",
    "NonlinearitySpec",
    "SchemeSpec",
    "SeedSpec",
    "CheckSpec",
    "OutputSpec",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BasisSpec(_Strict):
    n_modes: int = Field(16, ge=1)
    n_grid: int | None = None
    viscosity: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _grid(self):
        if self.n_grid is not None and self.n_grid < 2 * self.n_modes + 1:
            raise ValueError(f"n_grid must be at least 2*n_modes+1 = {2 * self.n_modes + 1}")
        return self


class NoiseSpec(_Strict):
    """Brownian grid and the noise coefficients.

    ``sigma`` holds sine coefficients of the multiplicative-noise fields (one
    row per field); ``lambdas`` the additive-noise amplitudes for Burgers.
    """

    n_noise: int = Field(4, ge=1)
    dt: float = Field(1e-3, gt=0)
    horizon: float = Field(1.0, gt=0)
    past_steps: int = Field(0, ge=0)
    sigma: list[list[float]] = Field(default_factory=list)
    lambdas: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self):
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(f"dt={self.dt:g} does not divide horizon={self.horizon:g}")
        if len(self.sigma) > self.n_noise:
            raise ValueError("more sigma fields than noise rows")
        if len(self.lambdas) > self.n_noise:
            raise ValueError("more lambdas than noise rows")
        if any(x < 0 for x in self.lambdas):
            raise ValueError("lambdas must be non-negative")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def sigma_array(self) -> np.ndarray:
        if not self.sigma:
            return np.zeros((0, 1))
        width = max(len(r) for r in self.sigma)
        return np.array([list(r) + [0.0] * (width - len(r)) for r in self.sigma], dtype=float)


class NonlinearitySpec(_Strict):
    name: str = "zero"
    params: dict[str, float] = Field(default_factory=dict)


class SchemeSpec(_Strict):
    linear: Literal["euler", "chaos", "wong_zakai"] = "euler"
    n_max: int = Field(12, ge=0)
    smoothing: int = Field(16, ge=1)
    picard_tol: float | None = Field(None, gt=0)
    reject_fraction: float = Field(0.5, gt=0)


class SeedSpec(_Strict):
    """Either an explicit list or ``count`` seeds drawn from ``master``."""

    values: list[int] | None = None
    master: int | None = None
    count: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _one_form(self):
        if self.values is not None:
            if self.master is not None or self.count is not None:
                raise ValueError("give either values or master/count, not both")
            if not self.values:
                raise ValueError("seed list must be non-empty")
        elif self.master is None or self.count is None:
            raise ValueError("give values or both master and count")
        return self

    def resolve(self) -> list[int]:
        if self.values is not None:
            return [int(s) for s in self.values]
        state = np.random.SeedSequence(self.master).generate_state(self.count, dtype=np.uint32)
        return [int(s) for s in state]


class CheckSpec(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class OutputSpec(_Strict):
    out_dir: str = "results"
    format: Literal["csv", "json", "both"] = "both"


class ExperimentConfig(_Strict):
    schema_version: int
    name: str = "experiment"
    equation: Literal["linear", "semilinear", "reaction_diffusion", "burgers"]
    basis: BasisSpec = BasisSpec()
    noise: NoiseSpec = NoiseSpec()
    nonlinearity: NonlinearitySpec = NonlinearitySpec()
    scheme: SchemeSpec = SchemeSpec()
    seeds: SeedSpec
    checks: list[CheckSpec] = Field(default_factory=list)
    output: OutputSpec = OutputSpec()

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this build reads {SCHEMA_VERSION}")
        return v

    @model_validator(mode="after")
    def _checks_exist(self):
        from .checks import CHECKS

        for i, c in enumerate(self.checks):
            if c.name not in CHECKS:
                raise ValueError(f"checks.{i}.name: unknown check {c.name!r}")
            allowed = CHECKS[c.name].equations
            if allowed and self.equation not in allowed:
                raise ValueError(f"checks.{i}.name: {c.name!r} does not apply to equation {self.equation!r}")
        return self

    def seed_list(self) -> list[int]:
        return self.seeds.resolve()

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _format_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_error(err)) from None


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config; ``overrides`` replaces top-level keys before validation."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError("<root>: config must be a mapping")
    if overrides:
        data = {**data, **overrides}
    return parse_config(data)
