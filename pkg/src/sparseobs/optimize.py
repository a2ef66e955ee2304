"""Derivative-free optimal forcing for the Dirichlet problem.

The control is a vector of amplitudes F for fixed Gaussian forcing bumps,

    f(x) = sum_j F_j exp(-s |x - c_j|^2),

and the cost is the Euclidean misfit between target values and the particle
estimates at the observation points. Every cost evaluation reuses one seed,
which makes the objective deterministic in F.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .field_model import ScalarField
from .forward_bvp import BvpProblemSpec, observation_means

# reflection, expansion, contraction, shrink
NM_COEFFS = (1.0, 2.0, 0.5, 0.5)


@dataclass
class SimplexState:
    vertices: np.ndarray       # (n + 1, n), sorted by cost
    costs: np.ndarray          # (n + 1,), ascending
    iteration: int = 0
    n_evals: int = 0

    @property
    def best(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def best_cost(self) -> float:
        return float(self.costs[0])

    @property
    def diameter(self) -> float:
        d = self.vertices[1:] - self.vertices[0]
        return float(np.max(np.abs(d))) if len(d) else 0.0

    @property
    def spread(self) -> float:
        return float(self.costs[-1] - self.costs[0])

    def sort(self) -> None:
        order = np.argsort(self.costs, kind="stable")
        self.vertices = self.vertices[order]
        self.costs = self.costs[order]


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    n_evals: int
    reason: str
    trace: list = field(default_factory=list)   # (iteration, best x, best f)


def _safe(objective: Callable) -> Callable:
    def f(x):
        try:
            v = float(objective(x))
        except (ArithmeticError, ValueError, RuntimeError):
            return np.inf
        return v if np.isfinite(v) else np.inf

    return f


def initial_simplex(x0, step=1.0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    steps = np.broadcast_to(np.asarray(step, dtype=float), x0.shape)
    return np.vstack([x0, x0 + np.diag(steps)])


def nelder_mead(
    objective: Callable,
    x0,
    step=1.0,
    x_tol: float = 1e-8,
    f_tol: float = 1e-10,
    max_iter: int = 2000,
    simplex=None,
) -> NelderMeadResult:
    """Minimize ``objective`` with the classical Nelder-Mead simplex method.

    Parameters
    ----------
    objective : callable
        Maps a 1-D array to a real number. Exceptions and non-finite values
        count as +inf.
    x0 : array_like
        Starting point; ignored for the simplex when ``simplex`` is given.
    step : float or array_like
        Per-coordinate offsets of the initial simplex vertices.
    x_tol, f_tol : float
        Stop when the simplex diameter (max-norm from the best vertex) falls
        below ``x_tol`` or the cost spread falls below ``f_tol``.
    max_iter : int
        Iteration budget.
    simplex : array_like, optional
        Explicit ``(n + 1, n)`` initial simplex.

    Returns
    -------
    NelderMeadResult
        Best vertex, its value, counts, stop reason and a per-iteration
        trace of the best vertex.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    f = _safe(objective)
    verts = initial_simplex(x0, step) if simplex is None else np.array(simplex, dtype=float)
    n = verts.shape[1]
    if verts.shape != (n + 1, n):
        raise ValueError("simplex must have shape (n + 1, n)")
    st = SimplexState(verts, np.array([f(v) for v in verts]), 0, n + 1)
    st.sort()
    alpha, gamma, rho, shrink = NM_COEFFS
    trace = [(0, st.best.copy(), st.best_cost)]
    reason = "max_iter"
    while True:
        if st.diameter < x_tol:
            reason = "x_tol"
            break
        if np.isfinite(st.costs[-1]) and st.spread < f_tol:
            reason = "f_tol"
            break
        if st.iteration >= max_iter:
            break
        centroid = st.vertices[:-1].mean(axis=0)
        worst, f_worst = st.vertices[-1], st.costs[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        st.n_evals += 1
        if fr < st.costs[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            st.n_evals += 1
            new = (xe, fe) if fe < fr else (xr, fr)
        elif fr < st.costs[-2]:
            new = (xr, fr)
        else:
            if fr < f_worst:
                xc = centroid + rho * (xr - centroid)
            else:
                xc = centroid + rho * (worst - centroid)
            fc = f(xc)
            st.n_evals += 1
            new = (xc, fc) if fc < min(fr, f_worst) else None
            if new is None:
                best = st.vertices[0]
                for i in range(1, n + 1):
                    st.vertices[i] = best + shrink * (st.vertices[i] - best)
                    st.costs[i] = f(st.vertices[i])
                st.n_evals += n
        if new is not None:
            st.vertices[-1], st.costs[-1] = new
        st.sort()
        st.iteration += 1
        trace.append((st.iteration, st.best.copy(), st.best_cost))
    return NelderMeadResult(st.best.copy(), st.best_cost, st.iteration, st.n_evals, reason, trace)


@dataclass(frozen=True)
class ForcingControl:
    centers: tuple
    targets: tuple
    observations: tuple
    sharpness: float = 4.0

    def __post_init__(self):
        centers = tuple((float(a), float(b)) for a, b in self.centers)
        obs = tuple((float(a), float(b)) for a, b in self.observations)
        targets = tuple(float(y) for y in self.targets)
        if len(targets) != len(obs):
            raise ValueError("one target value per observation point required")
        if not centers:
            raise ValueError("at least one forcing center required")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "targets", targets)

    @property
    def n_controls(self) -> int:
        return len(self.centers)

    def forcing(self, amplitudes) -> ScalarField:
        amplitudes = np.asarray(amplitudes, dtype=float)
        if amplitudes.shape != (self.n_controls,):
            raise ValueError(f"expected {self.n_controls} amplitudes")
        return ScalarField.gaussian_bumps(amplitudes, self.centers, self.sharpness)

    def apply(self, spec: BvpProblemSpec, amplitudes) -> BvpProblemSpec:
        return replace(spec, forcing=self.forcing(amplitudes), observations=self.observations)


def forcing_cost(amplitudes, control: ForcingControl, spec: BvpProblemSpec, seed: int = 0,
                 workers: int | None = None) -> float:
    """||Y - G(F)||_2 with G from particle estimates at a fixed seed."""
    g = observation_means(control.apply(spec, amplitudes), seed, workers)
    return float(np.linalg.norm(np.asarray(control.targets) - g))


@dataclass
class ForcingResult:
    amplitudes: np.ndarray
    cost: float
    optimizer: NelderMeadResult


def optimize_forcing(
    control: ForcingControl,
    spec: BvpProblemSpec,
    seed: int = 0,
    x0: Sequence[float] | None = None,
    step: float = 1.0,
    x_tol: float = 1e-4,
    f_tol: float = 1e-6,
    max_iter: int = 2000,
    workers: int | None = None,
) -> ForcingResult:
    """Nelder-Mead over forcing amplitudes with common random numbers."""
    x0 = np.zeros(control.n_controls) if x0 is None else np.asarray(x0, dtype=float)
    res = nelder_mead(
        lambda F: forcing_cost(F, control, spec, seed, workers),
        x0, step=step, x_tol=x_tol, f_tol=f_tol, max_iter=max_iter,
    )
    return ForcingResult(res.x, res.fun, res)
