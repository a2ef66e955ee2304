"""Run configuration: YAML files validated by pydantic models.

Unknown keys are rejected everywhere. :func:`load_config` reports schema
errors with the offending field path and the YAML line it came from.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .field_model import (
    Box,
    ConstantDiffusion,
    DiagonalDiffusion,
    Disk,
    FourierVelocityField,
    ScalarField,
    Torus,
)

Point = tuple[float, float]


class ConfigError(ValueError):
    """Malformed configuration; ``diagnostics`` lists ``(line, field, message)``."""

    def __init__(self, source: str, diagnostics: list[tuple[Optional[int], str, str]]):
        self.source = source
        self.diagnostics = diagnostics
        lines = [
            f"{source}:{line if line is not None else '?'}: {where}: {msg}"
            for line, where, msg in diagnostics
        ]
        super().__init__("\n".join(lines))


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScalarFieldConfig(_Model):
    """c + g.x + sum a cos(2 pi w.x + phi) + sum f exp(-s |x - c_j|^2)."""

    constant: float = 0.0
    gradient: Point = (0.0, 0.0)
    cosine: list[tuple[float, float, float, float]] = Field(default_factory=list)
    bumps: list[tuple[float, float, float]] = Field(default_factory=list)
    sharpness: float = 4.0

    def build(self) -> ScalarField:
        return ScalarField(
            constant_term=self.constant,
            gradient=np.array(self.gradient),
            cosine_terms=np.array(self.cosine, dtype=float).reshape(-1, 4),
            bumps=np.array(self.bumps, dtype=float).reshape(-1, 3),
            sharpness=self.sharpness,
        )


class ModeConfig(_Model):
    k: tuple[int, int]
    re: float = 0.0
    im: float = 0.0


class VelocityConfig(_Model):
    """``constant``: uniform ``value``; ``fourier``: listed ``modes``;
    ``prior``: one draw from the configured prior at ``draw_seed``, times ``scale``."""

    kind: Literal["constant", "fourier", "prior"] = "constant"
    value: Point = (0.0, 0.0)
    max_wavenumber: int = 1
    modes: list[ModeConfig] = Field(default_factory=list)
    draw_seed: int = 0
    scale: float = 1.0

    def build(self, prior: Optional["PriorConfig"] = None) -> FourierVelocityField:
        if self.kind == "constant":
            return FourierVelocityField.constant(self.value)
        if self.kind == "fourier":
            modes = np.array([m.k for m in self.modes], dtype=np.int64).reshape(-1, 2)
            coefs = np.array([complex(m.re, m.im) for m in self.modes], dtype=complex)
            return FourierVelocityField(modes, self.scale * coefs, self.max_wavenumber, np.array(self.value))
        from .inference import prior_draw

        p = (prior or PriorConfig(max_wavenumber=self.max_wavenumber)).build()
        u = prior_draw(p, np.random.default_rng(self.draw_seed))
        return FourierVelocityField.from_vector(p.max_wavenumber, self.scale * u, self.value)


class DiffusionConfig(_Model):
    kappa: Optional[float] = None
    sigma1: Optional[ScalarFieldConfig] = None
    sigma2: Optional[ScalarFieldConfig] = None

    @model_validator(mode="after")
    def _one_form(self):
        diag = self.sigma1 is not None or self.sigma2 is not None
        if (self.kappa is None) == (not diag):
            raise ValueError("give either kappa or both sigma1 and sigma2")
        if diag and (self.sigma1 is None or self.sigma2 is None):
            raise ValueError("diagonal diffusion needs both sigma1 and sigma2")
        if self.kappa is not None and self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        return self

    def build(self):
        if self.kappa is not None:
            return ConstantDiffusion(self.kappa)
        return DiagonalDiffusion(self.sigma1.build(), self.sigma2.build())


class AdObservation(_Model):
    t: float = Field(gt=0)
    x: Point


class AdConfig(_Model):
    initial_condition: ScalarFieldConfig
    observations: list[AdObservation] = Field(min_length=1)


class DomainConfig(_Model):
    kind: Literal["box", "disk"] = "box"
    lower: Point = (0.0, 0.0)
    upper: Point = (1.0, 1.0)
    center: Point = (0.0, 0.0)
    radius: float = 1.0

    def build(self):
        if self.kind == "box":
            return Box(self.lower, self.upper)
        return Disk(self.center, self.radius)


class BvpConfig(_Model):
    domain: DomainConfig = DomainConfig()
    boundary: ScalarFieldConfig
    forcing: Optional[ScalarFieldConfig] = None
    observations: list[Point] = Field(min_length=1)
    max_steps: int = Field(default=10_000_000, ge=1)
    exit_test: Literal["segment", "shifted"] = "segment"


class PriorConfig(_Model):
    max_wavenumber: int = Field(default=2, ge=1)
    s0: float = Field(default=1.0, ge=0)
    alpha: float = 2.5

    def build(self):
        from .inference import PriorSpec

        return PriorSpec(self.max_wavenumber, self.s0, self.alpha)


class LikelihoodConfig(_Model):
    """Observed data, or a synthetic truth drawn from the prior at ``truth_seed``."""

    data: Optional[list[float]] = None
    noise_std: Optional[float] = Field(default=None, gt=0)
    truth_seed: Optional[int] = None
    forward_seed: int = 0

    @model_validator(mode="after")
    def _source(self):
        if self.data is None and self.truth_seed is None:
            raise ValueError("give data or truth_seed")
        return self


class ChainConfig(_Model):
    steps: int = Field(default=1000, ge=0)
    beta: float = Field(default=0.02, gt=0, le=1)
    burn_in: int = Field(default=0, ge=0)
    thin: int = Field(default=1, ge=1)


class OptimizerConfig(_Model):
    centers: list[Point] = Field(min_length=1)
    targets: list[float]
    sharpness: float = 4.0
    x0: Optional[list[float]] = None
    step: float = 1.0
    x_tol: float = 1e-4
    f_tol: float = 1e-6
    max_iter: int = Field(default=2000, ge=0)


class ReferenceConfig(_Model):
    method: Literal["galerkin", "fd"] = "galerkin"
    L: int = Field(default=16, ge=1)
    dt_ref: Optional[float] = Field(default=None, gt=0)
    basis: Literal["square", "disk"] = "square"
    grid: int = Field(default=257, ge=33)
    output_grid: int = Field(default=64, ge=2)


class BenchmarkConfig(_Model):
    n_u: list[int] = Field(default_factory=lambda: [197, 797, 3209], min_length=1)
    repetitions: int = Field(default=5, ge=1)
    velocity_scale: float = 0.05
    final_time: float = Field(default=0.05, gt=0)
    n_particles: int = Field(default=2000, ge=2)
    n_obs: int = Field(default=4, ge=1)
    dt: float = Field(default=0.005, gt=0)
    kappa: float = Field(default=0.001, ge=0)
    reference: bool = True


class RunConfig(_Model):
    problem: Literal["ad", "bvp"]
    seed: int = 0
    workers: Optional[int] = Field(default=None, ge=0)
    n_particles: int = Field(default=10_000, ge=2)
    dt: Optional[float] = Field(default=None, gt=0)
    scheme: Literal["euler-maruyama", "milstein"] = "euler-maruyama"
    velocity: VelocityConfig = VelocityConfig()
    diffusion: DiffusionConfig
    ad: Optional[AdConfig] = None
    bvp: Optional[BvpConfig] = None
    prior: Optional[PriorConfig] = None
    likelihood: Optional[LikelihoodConfig] = None
    chain: ChainConfig = ChainConfig()
    optimizer: Optional[OptimizerConfig] = None
    reference: ReferenceConfig = ReferenceConfig()
    benchmark: BenchmarkConfig = BenchmarkConfig()

    @model_validator(mode="after")
    def _sections(self):
        if self.problem == "ad" and self.ad is None:
            raise ValueError("problem 'ad' needs an 'ad' section")
        if self.problem == "bvp" and self.bvp is None:
            raise ValueError("problem 'bvp' needs a 'bvp' section")
        return self

    # --- builders -------------------------------------------------------

    def velocity_field(self) -> FourierVelocityField:
        return self.velocity.build(self.prior)

    def ad_spec(self):
        from .forward_ad import AdProblemSpec

        if self.ad is None:
            raise ConfigError("<config>", [(None, "ad", "section missing")])
        return AdProblemSpec(
            velocity=self.velocity_field(),
            diffusion=self.diffusion.build(),
            initial_condition=self.ad.initial_condition.build(),
            observations=tuple((o.t, o.x) for o in self.ad.observations),
            dt=self.dt,
            n_particles=self.n_particles,
            scheme=self.scheme,
            domain=Torus(),
        )

    def bvp_spec(self):
        from .forward_bvp import BvpProblemSpec

        if self.bvp is None:
            raise ConfigError("<config>", [(None, "bvp", "section missing")])
        b = self.bvp
        return BvpProblemSpec(
            velocity=self.velocity_field(),
            diffusion=self.diffusion.build(),
            forcing=b.forcing.build() if b.forcing is not None else None,
            boundary=b.boundary.build(),
            domain=b.domain.build(),
            observations=tuple(b.observations),
            dt=self.dt,
            n_particles=self.n_particles,
            scheme=self.scheme,
            max_steps=b.max_steps,
            exit_test=b.exit_test,
        )


def _line_of(node, loc) -> Optional[int]:
    """1-based YAML line for a pydantic error location, best effort."""
    if node is None:
        return None
    line = node.start_mark.line + 1
    for part in loc:
        if isinstance(node, yaml.MappingNode) and isinstance(part, str):
            for k, v in node.value:
                if k.value == part:
                    node = k if v is None else v
                    line = k.start_mark.line + 1
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if part >= len(node.value):
                return line
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(source, [(mark.line + 1 if mark else None, "<yaml>", str(exc))]) from exc
    if not isinstance(data, dict):
        raise ConfigError(source, [(1, "<root>", "top level must be a mapping")])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        diags = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            # unknown-key errors point at the key itself
            diags.append((_line_of(node, loc), ".".join(map(str, loc)) or "<root>", err["msg"]))
        raise ConfigError(source, diags) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
