"""JSON run configuration.

Frequencies in a config file are linear MHz (nu = omega / 2 pi); they are
converted to rad/us once, in :func:`to_job`.
"""

from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .params import PRESETS_MHZ, SystemRates, mhz_to_angular, preset
from .sweep import KINDS, GridSpec, JobError, SweepJob


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RatesBlock(_Strict):
    preset: Optional[Literal["paper-apparatus", "paper-fig1"]] = None
    g_MHz: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    kappa_MHz: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    gamma_MHz: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _one_source(self):
        explicit = [self.g_MHz, self.kappa_MHz, self.gamma_MHz]
        if self.preset is not None and any(v is not None for v in explicit):
            raise ValueError("give either a preset or explicit rates, not both")
        if self.preset is None and any(v is None for v in explicit):
            raise ValueError("explicit rates need all of g_MHz, kappa_MHz and gamma_MHz (or use a preset)")
        return self

    def rates(self, n_atoms: float = 1) -> SystemRates:
        if self.preset is not None:
            return preset(self.preset, n_atoms)
        return SystemRates.from_mhz(self.g_MHz, self.kappa_MHz, self.gamma_MHz, n_atoms)

    def mhz(self) -> tuple[float, float, float]:
        if self.preset is not None:
            return PRESETS_MHZ[self.preset]
        return self.g_MHz, self.kappa_MHz, self.gamma_MHz


class GridBlock(_Strict):
    min_MHz: float = Field(allow_inf_nan=False)
    max_MHz: float = Field(allow_inf_nan=False)
    count: int = Field(ge=3)

    @model_validator(mode="after")
    def _shape(self):
        if self.count % 2 == 0:
            raise ValueError("count must be odd so that the centre is sampled")
        if self.max_MHz <= self.min_MHz:
            raise ValueError("max_MHz must exceed min_MHz")
        return self


class OracleBlock(_Strict):
    enabled: bool = True
    n_max: int = Field(default=4, ge=1, le=12)


class JobBlock(_Strict):
    kind: Optional[Literal["fig1", "inset", "fig4", "spectrum", "oracle-compare"]] = None
    c_list: list[float] = Field(default_factory=list)
    n_list: list[int] = Field(default_factory=list)
    omega_grid: Optional[GridBlock] = None
    y_list: list[float] = Field(default_factory=lambda: [0.05])
    oracle: OracleBlock = Field(default_factory=lambda: OracleBlock(enabled=False))

    @model_validator(mode="after")
    def _lists(self):
        c = self.c_list
        if any(v < 0 for v in c) or any(b <= a for a, b in zip(c, c[1:])):
            raise ValueError("c_list entries must be >= 0 and strictly increasing")
        if any(n < 0 for n in self.n_list):
            raise ValueError("n_list entries must be >= 0")
        if not self.y_list or any(y < 0 for y in self.y_list):
            raise ValueError("y_list must be nonempty with entries >= 0")
        return self


class OutputBlock(_Strict):
    directory: str = "out"
    formats: list[Literal["csv", "json", "svg"]] = Field(default_factory=lambda: ["csv"])


class Config(_Strict):
    rates: RatesBlock
    job: JobBlock = Field(default_factory=JobBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(exclude_none=True), indent=2, sort_keys=True)


def _describe(err: ValidationError) -> list[str]:
    out = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        out.append(f"{loc}: {e['msg']}")
    return out


def parse_config(text: str) -> Config:
    """Parse and validate JSON config text; unknown keys are rejected."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON: {exc}"]) from exc
    try:
        return Config.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    return parse_config(text)


def to_job(config: Config, kind: str, oracle_enabled: Optional[bool] = None, workers: int = 1) -> SweepJob:
    """Build the sweep job for ``kind`` from a validated config."""
    if kind not in KINDS:
        raise ConfigError([f"job.kind: unknown kind {kind!r}"])
    job = config.job
    if job.kind is not None and job.kind != kind:
        raise ConfigError([f"job.kind: config is for {job.kind!r}, command asked for {kind!r}"])
    grid = None
    if job.omega_grid is not None:
        grid = GridSpec(
            mhz_to_angular(job.omega_grid.min_MHz), mhz_to_angular(job.omega_grid.max_MHz), job.omega_grid.count
        )
    n0 = job.n_list[0] if job.n_list else 1
    try:
        return SweepJob(
            kind=kind,
            rates=config.rates.rates(n0),
            c_list=tuple(job.c_list),
            n_list=tuple(job.n_list),
            grid=grid,
            y_list=tuple(job.y_list),
            oracle_enabled=job.oracle.enabled if oracle_enabled is None else oracle_enabled,
            oracle_n_max=job.oracle.n_max,
            workers=workers,
        )
    except JobError as exc:
        raise ConfigError([str(exc)]) from exc
