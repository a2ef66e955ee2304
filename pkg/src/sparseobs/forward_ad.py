"""Point observations of the time-dependent advection-diffusion problem.

theta(t, x) = E theta_0(X_t) for the backward diffusion
dX = -v(X) dt + sigma(X) dW started at x, so each observation is the
average of theta_0 over particles launched from its location.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .field_model import ConstantDiffusion, FourierVelocityField, ScalarField, Torus
from .mc_executor import ParticleEstimate, StreamBatch, map_blocks, reduce_estimate
from .sde_kernel import StepScheme, as_scheme, time_block, time_grid

DEFAULT_PARTICLES = 10_000


@dataclass(frozen=True, eq=False)
class AdProblemSpec:
    """One instance of the time-dependent forward problem on the unit torus.

    ``observations`` is a sequence of ``(t_j, (x1, x2))``. ``dt=None`` picks
    ``min t_j / 200``.
    """

    velocity: FourierVelocityField
    diffusion: ConstantDiffusion
    initial_condition: ScalarField
    observations: tuple
    dt: float | None = None
    n_particles: int = DEFAULT_PARTICLES
    scheme: StepScheme = StepScheme.EULER_MARUYAMA
    domain: Torus = field(default_factory=Torus)

    def __post_init__(self):
        obs = tuple((float(t), (float(x[0]), float(x[1]))) for t, x in self.observations)
        if not obs:
            raise ValueError("at least one observation is required")
        for t, (x1, x2) in obs:
            if not t > 0:
                raise ValueError(f"observation time must be positive, got {t}")
            if not (0.0 <= x1 < 1.0 and 0.0 <= x2 < 1.0):
                raise ValueError(f"observation point {(x1, x2)} not in [0, 1)^2")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "scheme", as_scheme(self.scheme))
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_particles < 2:
            raise ValueError("need at least two particles per observation")

    @property
    def n_obs(self) -> int:
        return len(self.observations)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.observations])

    @property
    def points(self) -> np.ndarray:
        return np.array([x for _, x in self.observations])

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else float(self.times.min()) / 200.0

    def with_velocity(self, velocity: FourierVelocityField) -> AdProblemSpec:
        return replace(self, velocity=velocity)


def _work(spec: AdProblemSpec):
    dt = spec.step
    grids = [time_grid(t, dt) for t in spec.times]
    vel = spec.velocity.encoded
    diff = spec.diffusion.encoded
    theta0 = spec.initial_condition.encoded
    milstein = spec.scheme is StepScheme.MILSTEIN
    dom_kind = int(spec.domain.encoded[0])

    def work(batch: StreamBatch) -> np.ndarray:
        _, (x1, x2) = spec.observations[batch.obs_index]
        nsteps, last = grids[batch.obs_index]
        lo, hi = batch.key_words
        out = np.empty(len(batch))
        term = np.empty((len(batch), 2))
        time_block(
            x1, x2, nsteps, dt, last, milstein, dom_kind, vel, diff, theta0,
            lo, hi, batch.obs_index, batch.start, out, term,
        )
        return out

    return work


def observe_ad(spec: AdProblemSpec, seed: int = 0, workers: int | None = None) -> list[ParticleEstimate]:
    """Particle estimates of theta(t_j, x_j) for every observation."""
    values = map_blocks(_work(spec), spec.n_obs, spec.n_particles, seed, workers)
    return [reduce_estimate(v, spec.n_particles) for v in values]


def observe_ad_single(spec: AdProblemSpec, j: int, seed: int = 0, workers: int | None = None) -> ParticleEstimate:
    """Estimate for observation ``j`` alone; identical to ``observe_ad(spec)[j]``."""
    if not 0 <= j < spec.n_obs:
        raise IndexError(f"observation index {j} out of range for {spec.n_obs} observations")
    (values,) = map_blocks(_work(spec), spec.n_obs, spec.n_particles, seed, workers, obs_indices=[j])
    return reduce_estimate(values, spec.n_particles)


def particle_values(spec: AdProblemSpec, j: int, seed: int = 0) -> np.ndarray:
    """Per-particle theta_0(X_{t_j}) samples for observation ``j``."""
    (values,) = map_blocks(_work(spec), spec.n_obs, spec.n_particles, seed, 1, obs_indices=[j])
    return values


def observation_means(spec: AdProblemSpec, seed: int = 0, workers: int | None = None) -> np.ndarray:
    return np.array([e.mean for e in observe_ad(spec, seed, workers)])
