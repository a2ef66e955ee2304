"""Cost model and wall-time scaling of the particle forward map versus the
Galerkin reference as the velocity dimension grows."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .field_model import ConstantDiffusion, FourierVelocityField, ScalarField, eval_velocity_fast, lattice_count
from .forward_ad import AdProblemSpec, observe_ad
from .inference import PriorSpec, prior_draw
from .reference_solvers import galerkin_solve_ad, galerkin_system

JITTER_LIMIT = 0.5


@dataclass(frozen=True)
class CostModel:
    n_obs: int
    n_particles: int
    n_steps: int
    n_u: int
    n_b: int
    c_b: float = 1.0
    width: int = 1

    def __post_init__(self):
        for name in ("n_obs", "n_particles", "n_steps", "n_u", "n_b", "width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.c_b > 0:
            raise ValueError("c_b must be positive")

    @property
    def particle_cost(self) -> float:
        return self.n_obs * self.n_particles * self.n_steps * self.c_b * self.n_u / self.width

    @property
    def reference_cost(self) -> float:
        return float(self.n_steps) * self.n_b**2


def predict_cost_ratio(model: CostModel) -> float:
    """Particle-to-reference cost ratio C_b N_u / N_b^2 (unit constant)."""
    return model.c_b * model.n_u / model.n_b**2


def wavenumber_for(n_u: int) -> int:
    """Smallest cutoff K whose lattice disk holds at least ``n_u`` points."""
    K = 1
    while lattice_count(K) < n_u:
        K += 1
    return K


def measure_basis_cost(K: int, n_points: int = 20_000, repeats: int = 5) -> float:
    """Median seconds per point evaluation of a random velocity field at cutoff K."""
    prior = PriorSpec(K)
    vel = FourierVelocityField.from_vector(K, prior_draw(prior, np.random.default_rng(0)))
    pts = np.random.default_rng(1).random((n_points, 2))
    eval_velocity_fast(vel, pts[:2])
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        eval_velocity_fast(vel, pts)
        times.append(time.perf_counter() - t0)
    return statistics.median(times) / n_points


def time_call(fn: Callable[[], object], repetitions: int) -> tuple[float, list[float]]:
    """Median monotonic wall time over ``repetitions`` after one discarded warm-up."""
    fn()
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples), samples


def jitter(samples) -> float:
    """(max - min) / median."""
    med = statistics.median(samples)
    return (max(samples) - min(samples)) / med if med > 0 else 0.0


@dataclass
class ScalingRow:
    n_u: int
    max_wavenumber: int
    particle_time: float
    reference_time: float
    particle_jitter: float
    reference_jitter: float
    reference_steps: int = 0

    @property
    def flagged(self) -> bool:
        return self.particle_jitter > JITTER_LIMIT or (
            not math.isnan(self.reference_jitter) and self.reference_jitter > JITTER_LIMIT
        )


@dataclass
class ScalingTable:
    rows: list[ScalingRow] = field(default_factory=list)

    def slope(self, column: str) -> float:
        """Least-squares log-log slope of ``column`` against N_u (nan with < 2 rows)."""
        pts = [(r.n_u, getattr(r, column)) for r in self.rows if getattr(r, column) > 0]
        if len(pts) < 2:
            return float("nan")
        x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
        return float(np.polyfit(x, y, 1)[0])

    @property
    def particle_slope(self) -> float:
        return self.slope("particle_time")

    @property
    def reference_slope(self) -> float:
        return self.slope("reference_time")


def scaling_problem(n_u: int, velocity_scale: float, kappa: float, final_time: float,
                    n_particles: int, n_obs: int, dt: float, seed: int = 0) -> AdProblemSpec:
    """Observation problem with a prior-drawn velocity at the cutoff matching N_u."""
    K = wavenumber_for(n_u)
    prior = PriorSpec(K)
    u = velocity_scale * prior_draw(prior, np.random.default_rng(seed))
    vel = FourierVelocityField.from_vector(K, u)
    rng = np.random.default_rng(seed + 1)
    obs = tuple((final_time, tuple(p)) for p in rng.random((n_obs, 2)))
    theta0 = ScalarField.cosine_series([(1.0, 1.0, 0.0, 0.0), (0.5, 0.0, 1.0, 0.3)])
    return AdProblemSpec(vel, ConstantDiffusion(kappa), theta0, obs, dt=dt, n_particles=n_particles)


def benchmark_scaling(
    n_u_list,
    repetitions: int = 5,
    velocity_scale: float = 0.05,
    kappa: float = 0.001,
    final_time: float = 0.05,
    n_particles: int = 2000,
    n_obs: int = 4,
    dt: float = 0.005,
    reference: bool = True,
    seed: int = 0,
    workers: int | None = None,
) -> ScalingTable:
    """Median wall times of the particle map and of the Galerkin reference per N_u.

    The reference uses the disk basis with the same lattice as the velocity
    (N_b = N_u) and the largest stable explicit step not above ``dt``. Its
    time includes operator assembly.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    table = ScalingTable()
    for n_u in n_u_list:
        spec = scaling_problem(n_u, velocity_scale, kappa, final_time, n_particles, n_obs, dt, seed)
        K = spec.velocity.max_wavenumber
        t_p, s_p = time_call(lambda: observe_ad(spec, seed, workers), repetitions)
        t_r, j_r, steps = float("nan"), float("nan"), 0
        if reference:
            rho = galerkin_system(spec, K, "disk").spectral_radius_bound()
            dt_ref = min(dt, 1.9 / rho)

            def ref():
                return galerkin_solve_ad(spec, K, dt_ref, basis="disk")

            t_r, s_r = time_call(ref, repetitions)
            j_r = jitter(s_r)
            steps = ref().n_steps
        table.rows.append(ScalingRow(int(n_u), K, t_p, t_r, jitter(s_p), j_r, steps))
    return table
