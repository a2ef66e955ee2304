"""Bayesian inversion for the background flow with pCN MCMC.

The unknown is the real parameter vector of a :class:`FourierVelocityField`
(real and imaginary parts of one coefficient per +/-k pair). The prior is
an independent Gaussian with standard deviation ``s0 * |k|^-alpha`` on both
parts of mode k; the likelihood is Gaussian in the particle forward map.

The forward map inside the potential uses a fixed seed, so the chain samples
the posterior of that fixed-seed surrogate (common random numbers).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .field_model import FourierVelocityField, representative_modes
from .forward_ad import AdProblemSpec, observation_means

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PriorSpec:
    max_wavenumber: int
    s0: float = 1.0
    alpha: float = 2.5

    def __post_init__(self):
        if self.max_wavenumber < 1:
            raise ValueError("max_wavenumber must be >= 1")
        if self.s0 < 0:
            raise ValueError("s0 must be nonnegative")

    @property
    def modes(self) -> np.ndarray:
        return representative_modes(self.max_wavenumber)

    @property
    def dim(self) -> int:
        return 2 * len(self.modes)

    @property
    def std(self) -> np.ndarray:
        """Per-parameter standard deviations, interleaved (re, im) per mode."""
        s = self.s0 * np.linalg.norm(self.modes, axis=1) ** (-self.alpha)
        return np.repeat(s, 2)

    def norm2(self, u) -> float:
        """Squared Cameron-Martin norm sum (u_i / s_i)^2."""
        std = self.std
        if np.any(std == 0):
            return 0.0 if not np.any(u) else np.inf
        return float(np.sum((np.asarray(u) / std) ** 2))

    def field(self, u) -> FourierVelocityField:
        return FourierVelocityField.from_vector(self.max_wavenumber, u)


def prior_draw(prior: PriorSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Mean-zero Gaussian draw(s) from the prior; shape ``(dim,)`` or ``(size, dim)``."""
    shape = (prior.dim,) if size is None else (size, prior.dim)
    return rng.standard_normal(shape) * prior.std


@dataclass(frozen=True, eq=False)
class LikelihoodSpec:
    """Gaussian misfit Phi(u) = |y - G(u)|^2 / (2 noise_std^2).

    ``forward`` is the observation problem whose velocity slot is replaced
    by the field of ``u``; ``seed`` is fixed for every evaluation.
    """

    data: np.ndarray
    noise_std: float
    forward: AdProblemSpec
    prior: PriorSpec
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float).reshape(-1)
        if data.size != self.forward.n_obs:
            raise ValueError(f"{data.size} data values for {self.forward.n_obs} observations")
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")
        object.__setattr__(self, "data", data)

    def forward_map(self, u) -> np.ndarray:
        spec = self.forward.with_velocity(self.prior.field(u))
        return observation_means(spec, self.seed, self.workers)

    def potential(self, u) -> float:
        r = self.data - self.forward_map(u)
        return float(r @ r / (2.0 * self.noise_std**2))

    __call__ = potential


def default_noise_std(data) -> float:
    """10% of the data RMS."""
    data = np.asarray(data, dtype=float)
    return 0.1 * float(np.sqrt(np.mean(data**2)))


@dataclass(frozen=True, eq=False)
class ChainState:
    u: np.ndarray
    phi: float
    iteration: int = 0
    accepted: int = 0
    failed: int = 0
    map_u: np.ndarray | None = None
    map_objective: float = np.inf

    def __post_init__(self):
        if self.accepted > self.iteration:
            raise ValueError("acceptance count exceeds iteration count")

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.iteration if self.iteration else float("nan")


def initial_state(u0, potential: Callable, prior: PriorSpec) -> ChainState:
    u0 = np.array(u0, dtype=float)
    phi = float(potential(u0))
    return ChainState(u0, phi, map_u=u0, map_objective=phi + 0.5 * prior.norm2(u0))


def pcn_step(
    state: ChainState, beta: float, prior: PriorSpec, potential: Callable, rng: np.random.Generator
) -> ChainState:
    """One preconditioned Crank-Nicolson step.

    Proposal ``sqrt(1 - beta^2) u + beta xi`` with ``xi`` from the prior,
    accepted with probability ``min(1, exp(Phi(u) - Phi(u')))``. A potential
    that raises or returns a non-finite value rejects the proposal and bumps
    the ``failed`` counter.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    xi = prior_draw(prior, rng)
    proposal = np.sqrt(1.0 - beta * beta) * state.u + beta * xi
    log_u = np.log(rng.random())
    try:
        phi_new = float(potential(proposal))
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        log.warning("forward map failed at iteration %d: %s", state.iteration, exc)
        phi_new = np.nan
    if not np.isfinite(phi_new):
        return replace(state, iteration=state.iteration + 1, failed=state.failed + 1)
    if log_u < state.phi - phi_new:
        objective = phi_new + 0.5 * prior.norm2(proposal)
        better = objective < state.map_objective
        return replace(
            state,
            u=proposal,
            phi=phi_new,
            iteration=state.iteration + 1,
            accepted=state.accepted + 1,
            map_u=proposal if better else state.map_u,
            map_objective=objective if better else state.map_objective,
        )
    return replace(state, iteration=state.iteration + 1)


@dataclass
class ChainResult:
    samples: np.ndarray          # (n_kept, dim)
    sample_iterations: np.ndarray
    sample_phi: np.ndarray
    phi_trace: np.ndarray        # Phi after every iteration
    map_objective_trace: np.ndarray
    final: ChainState
    initial: ChainState = field(repr=False, default=None)

    @property
    def acceptance_rate(self) -> float:
        return self.final.acceptance_rate

    @property
    def map_u(self) -> np.ndarray:
        return self.final.map_u

    @property
    def map_objective(self) -> float:
        return self.final.map_objective


def run_chain(
    n_steps: int,
    beta: float,
    prior: PriorSpec,
    potential: Callable,
    seed: int = 0,
    u0=None,
    burn_in: int = 0,
    thin: int = 1,
    callback: Callable[[ChainState], None] | None = None,
) -> ChainResult:
    """Run a pCN chain and keep every ``thin``-th state after ``burn_in``.

    ``u0`` defaults to a prior draw from the chain's generator.
    """
    if n_steps < 0 or burn_in < 0 or thin < 1:
        raise ValueError("need n_steps >= 0, burn_in >= 0, thin >= 1")
    rng = np.random.default_rng(seed)
    if u0 is None:
        u0 = prior_draw(prior, rng)
    state = initial_state(u0, potential, prior)
    start = state
    kept, kept_it, kept_phi = [], [], []
    phi_trace = np.empty(n_steps)
    map_trace = np.empty(n_steps)
    for i in range(n_steps):
        state = pcn_step(state, beta, prior, potential, rng)
        phi_trace[i] = state.phi
        map_trace[i] = state.map_objective
        if state.iteration > burn_in and (state.iteration - burn_in) % thin == 0:
            kept.append(state.u)
            kept_it.append(state.iteration)
            kept_phi.append(state.phi)
        if callback is not None:
            callback(state)
    samples = np.array(kept).reshape(-1, prior.dim)
    return ChainResult(
        samples, np.array(kept_it, dtype=int), np.array(kept_phi), phi_trace, map_trace, state, start
    )


@dataclass
class Histogram:
    counts: np.ndarray
    edges: tuple


def histogram(archive, components, bins=30, pairs: bool = False) -> list[Histogram]:
    """Marginal histograms of selected components, or 2D histograms of each pair.

    ``bins`` is a count or an explicit edge array (1D case).
    """
    archive = np.atleast_2d(np.asarray(archive, dtype=float))
    if archive.size == 0 or archive.shape[0] == 0:
        raise ValueError("empty archive")
    components = list(components)
    if not pairs:
        out = []
        for c in components:
            col = archive[:, c]
            b = bins
            if np.isscalar(bins) and col.min() == col.max():
                b = np.linspace(col[0] - 0.5, col[0] + 0.5, int(bins) + 1)
            counts, edges = np.histogram(col, bins=b)
            out.append(Histogram(counts, (edges,)))
        return out
    out = []
    for a in range(len(components)):
        for b in range(a + 1, len(components)):
            counts, ex, ey = np.histogram2d(archive[:, components[a]], archive[:, components[b]], bins=bins)
            out.append(Histogram(counts, (ex, ey)))
    return out


def synthetic_data(likelihood_template: AdProblemSpec, prior: PriorSpec, truth, noise_std, rng, seed=0):
    """Noisy observations of the forward map at ``truth``."""
    clean = observation_means(likelihood_template.with_velocity(prior.field(truth)), seed)
    return clean + noise_std * rng.standard_normal(clean.shape)
