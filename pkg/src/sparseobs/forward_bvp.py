"""Point observations of the Dirichlet problem through exit-time sampling.

For  -v.grad(theta) + (1/2) sigma sigma^T : Hess(theta) = f  in D with
theta = g on the boundary, each particle pays
g(X_tau) - int_0^tau f(X_t) dt, and the observation is the average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .field_model import Box, ConstantDiffusion, Disk, FourierVelocityField, ScalarField
from .mc_executor import ParticleEstimate, StreamBatch, map_blocks, reduce_estimate
from .sde_kernel import BOUNDARY_SHIFT, DEFAULT_MAX_STEPS, StepScheme, _exit_buffers, as_scheme, exit_block

DEFAULT_PARTICLES = 10_000
# "segment": crossing of the straight step segment with the boundary.
# "shifted": the same test against a boundary pulled in by
# BOUNDARY_SHIFT * sigma * sqrt(dt), which cancels the leading exit bias.
EXIT_TESTS = {"segment": 0.0, "shifted": BOUNDARY_SHIFT}


@dataclass(frozen=True, eq=False)
class BvpProblemSpec:
    velocity: FourierVelocityField
    diffusion: ConstantDiffusion
    forcing: ScalarField | None
    boundary: ScalarField
    domain: Box | Disk
    observations: tuple
    dt: float | None = None
    n_particles: int = DEFAULT_PARTICLES
    scheme: StepScheme = StepScheme.EULER_MARUYAMA
    max_steps: int = DEFAULT_MAX_STEPS
    exit_test: str = "segment"

    def __post_init__(self):
        if not getattr(self.domain, "bounded", False):
            raise ValueError("the Dirichlet problem needs a bounded domain")
        if not isinstance(self.velocity, FourierVelocityField):
            object.__setattr__(self, "velocity", FourierVelocityField.constant(self.velocity))
        obs = tuple((float(x[0]), float(x[1])) for x in self.observations)
        if not obs:
            raise ValueError("at least one observation is required")
        for x in obs:
            if not self.domain.contains(x):
                raise ValueError(f"observation point {x} is not strictly inside the domain")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "scheme", as_scheme(self.scheme))
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_particles < 2:
            raise ValueError("need at least two particles per observation")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.exit_test not in EXIT_TESTS:
            raise ValueError(f"exit_test must be one of {sorted(EXIT_TESTS)}")

    @property
    def n_obs(self) -> int:
        return len(self.observations)

    @property
    def step(self) -> float:
        if self.dt is not None:
            return self.dt
        diam = self.domain.diameter
        kappa = self.diffusion.max_kappa(self.domain)
        speed = self.velocity.speed_bound()
        dt = 1e-3 * diam**2 / (2.0 * kappa + speed * diam)
        return float(min(max(dt, 1e-6), 1e-2))

    def with_forcing(self, forcing: ScalarField | None) -> BvpProblemSpec:
        return replace(self, forcing=forcing)


@dataclass(frozen=True)
class BvpEstimate(ParticleEstimate):
    mean_exit_time: float = math.nan


def _work(spec: BvpProblemSpec):
    dt = spec.step
    vel = spec.velocity.encoded
    diff = spec.diffusion.encoded
    has_forcing = spec.forcing is not None
    forcing = (spec.forcing or ScalarField.constant(0.0)).encoded
    boundary = spec.boundary.encoded
    dom = spec.domain.encoded
    milstein = spec.scheme is StepScheme.MILSTEIN
    shift = EXIT_TESTS[spec.exit_test]

    def work(batch: StreamBatch) -> np.ndarray:
        x1, x2 = spec.observations[batch.obs_index]
        lo, hi = batch.key_words
        outs = _exit_buffers(len(batch))
        exit_block(
            x1, x2, dt, milstein, vel, diff, forcing, has_forcing, boundary, dom,
            lo, hi, batch.obs_index, batch.start, spec.max_steps, shift, *outs,
        )
        val, tau = outs[0], outs[1]
        return np.stack([val, tau], axis=1)

    return work


def observe_bvp(spec: BvpProblemSpec, seed: int = 0, workers: int | None = None) -> list[BvpEstimate]:
    """Particle estimates of theta(x_j); each also carries the mean exit time."""
    out = []
    for arr in map_blocks(_work(spec), spec.n_obs, spec.n_particles, seed, workers):
        est = reduce_estimate(arr[:, 0], spec.n_particles)
        tau = arr[:, 1]
        tau = tau[np.isfinite(tau)]
        out.append(BvpEstimate(est.mean, est.std_error, est.n_particles, est.n_failed, float(tau.mean())))
    return out


def observation_means(spec: BvpProblemSpec, seed: int = 0, workers: int | None = None) -> np.ndarray:
    return np.array([e.mean for e in observe_bvp(spec, seed, workers)])
