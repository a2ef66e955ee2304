"""Euler-Maruyama and Milstein integration of dX = -v(X) dt + sigma(X) dW.

The public step functions work on plain numpy points and arbitrary velocity
callables. Whole paths are run by the numba block kernels below, which
process a contiguous range of particle indices for one observation and
draw their noise from :func:`sparseobs.rng.normal_pair`. A single-path call
is just a block of length one, so the per-path API and the batched forward
maps share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numba as nb
import numpy as np

from .field_model import (
    BOUNDARY_EPS,
    BOX,
    TORUS,
    FourierVelocityField,
    ScalarField,
    Torus,
    _segment_exit,
    diffusion_value,
    domain_distance,
    domain_inside,
    domain_project,
    max_wavenumber_of,
    scalar_value,
    velocity_value,
)
from .rng import StreamKey, normal_pair, split_seed

DEFAULT_MAX_STEPS = 10**7
# -zeta(1/2) / sqrt(2 pi): mean overshoot of a discretely monitored Brownian
# path, in units of sigma sqrt(dt). Shifting the boundary inward by this much
# removes the leading sqrt(dt) exit bias.
BOUNDARY_SHIFT = 0.5825971579390106


class StepScheme(str, Enum):
    EULER_MARUYAMA = "euler-maruyama"
    MILSTEIN = "milstein"


def as_scheme(scheme) -> StepScheme:
    try:
        return StepScheme(scheme)
    except ValueError:
        raise ValueError(f"unknown step scheme {scheme!r}") from None


@dataclass(frozen=True)
class PathResult:
    terminal: np.ndarray
    exit_time: float | None
    f_integral: float
    steps_taken: int
    failed: bool = False


def _velocity_at(velocity, x):
    if callable(velocity):
        return np.asarray(velocity(x), dtype=float)
    return np.broadcast_to(np.asarray(velocity, dtype=float), np.shape(x))


def em_step(x, velocity, diffusion, dt: float, xi) -> np.ndarray:
    """One Euler-Maruyama step ``x - v(x) dt + sigma(x) sqrt(dt) xi``.

    ``velocity`` is a callable or a constant vector; ``diffusion`` exposes
    ``sigma(x)`` returning the diagonal of sigma. ``x`` may be a single point
    or an (n, 2) batch.
    """
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    return x - _velocity_at(velocity, x) * dt + diffusion.sigma(x) * math.sqrt(dt) * np.asarray(xi)


def milstein_step(x, velocity, diffusion, dt: float, xi) -> np.ndarray:
    """Euler-Maruyama plus the componentwise ``0.5 sigma_d sigma_d' (xi_d^2 - 1) dt``."""
    if not hasattr(diffusion, "sigma_prime"):
        raise TypeError("Milstein needs a diffusion model exposing sigma_prime")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    base = em_step(x, velocity, diffusion, dt, xi)
    corr = 0.5 * diffusion.sigma(x) * diffusion.sigma_prime(x) * (xi * xi - 1.0) * dt
    # skip exact zeros so constant sigma reproduces Euler-Maruyama bit for bit
    return np.where(corr != 0.0, base + corr, base)


def time_grid(T: float, dt: float) -> tuple[int, float]:
    """Number of steps to reach T and the length of the (shortened) last step."""
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    n = max(1, math.ceil(T / dt * (1.0 - 1e-12)))
    last = T - (n - 1) * dt
    return n, last


# --------------------------------------------------------------------------
# kernels


@nb.njit(cache=True, nogil=True, inline="always")
def _advance(y0, y1, h, sqh, milstein, vel, diff, pow0, pow1, z0, z1):
    v0, v1 = velocity_value(vel, y0, y1, pow0, pow1)
    s0, s1, ds0, ds1 = diffusion_value(diff, y0, y1)
    n0 = y0 - v0 * h + s0 * sqh * z0
    n1 = y1 - v1 * h + s1 * sqh * z1
    if milstein:
        c0 = 0.5 * s0 * ds0 * (z0 * z0 - 1.0) * h
        c1 = 0.5 * s1 * ds1 * (z1 * z1 - 1.0) * h
        if c0 != 0.0:
            n0 += c0
        if c1 != 0.0:
            n1 += c1
    return n0, n1


@nb.njit(cache=True, nogil=True, inline="always")
def _wrap(y):
    y = y - math.floor(y)
    if y >= 1.0:
        y = 0.0
    return y


@nb.njit(cache=True, nogil=True)
def time_block(
    x0, x1, nsteps, dt, last_dt, milstein, dom_kind, vel, diff, theta0,
    key_lo, key_hi, obs, p_start, out_val, out_term,
):
    """Run particles ``p_start .. p_start + len(out_val)`` to the final time."""
    kmax = max_wavenumber_of(vel)
    pow0 = np.empty(kmax + 1, dtype=np.complex128)
    pow1 = np.empty(kmax + 1, dtype=np.complex128)
    sq = math.sqrt(dt)
    sq_last = math.sqrt(last_dt)
    wrap = dom_kind == TORUS
    for p in range(out_val.shape[0]):
        pid = p_start + p
        y0 = x0
        y1 = x1
        h = dt
        sqh = sq
        for s in range(nsteps):
            if s == nsteps - 1:
                h = last_dt
                sqh = sq_last
            z0, z1 = normal_pair(key_lo, key_hi, obs, pid, s)
            y0, y1 = _advance(y0, y1, h, sqh, milstein, vel, diff, pow0, pow1, z0, z1)
            if wrap:
                y0 = _wrap(y0)
                y1 = _wrap(y1)
        out_term[p, 0] = y0
        out_term[p, 1] = y1
        out_val[p] = scalar_value(theta0, y0, y1)


@nb.njit(cache=True, nogil=True, inline="always")
def _shrink(dom, delta, out):
    """Write the domain pulled inward by ``delta`` into ``out``."""
    out[0] = dom[0]
    if dom[0] == BOX:
        out[1] = dom[1] + delta
        out[2] = dom[2] + delta
        out[3] = dom[3] - delta
        out[4] = dom[4] - delta
    else:
        out[1] = dom[1]
        out[2] = dom[2]
        out[3] = dom[3] - delta
        out[4] = dom[4]


@nb.njit(cache=True, nogil=True)
def exit_block(
    x0, x1, dt, milstein, vel, diff, forcing, has_forcing, boundary, dom,
    key_lo, key_hi, obs, p_start, max_steps, shift_coef,
    out_val, out_tau, out_fint, out_steps, out_exit, out_failed,
):
    """Run particles until they leave ``dom``; failed paths get NaN values.

    With ``shift_coef > 0`` exits are tested against the domain pulled in by
    ``shift_coef * sigma * sqrt(dt)`` (sigma the larger diffusion component at
    the current point) and the exit point is projected onto the true
    boundary.
    """
    kmax = max_wavenumber_of(vel)
    pow0 = np.empty(kmax + 1, dtype=np.complex128)
    pow1 = np.empty(kmax + 1, dtype=np.complex128)
    test = np.empty(5)
    test[:] = dom[:5]
    sq = math.sqrt(dt)
    shifted = shift_coef > 0.0
    for p in range(out_val.shape[0]):
        pid = p_start + p
        y0 = x0
        y1 = x1
        fint = 0.0
        tau = 0.0
        s = 0
        exited = False
        if domain_distance(dom, y0, y1) <= BOUNDARY_EPS:
            y0, y1 = domain_project(dom, y0, y1)
            exited = True
        while not exited and s < max_steps:
            if shifted:
                sg0, sg1, _, _ = diffusion_value(diff, y0, y1)
                delta = shift_coef * sq * max(sg0, sg1)
                _shrink(dom, delta, test)
                if not domain_inside(test, y0, y1):
                    y0, y1 = domain_project(dom, y0, y1)
                    tau = s * dt
                    exited = True
                    break
            z0, z1 = normal_pair(key_lo, key_hi, obs, pid, s)
            n0, n1 = _advance(y0, y1, dt, sq, milstein, vel, diff, pow0, pow1, z0, z1)
            fy = scalar_value(forcing, y0, y1) if has_forcing else 0.0
            if not domain_inside(test, n0, n1):
                e0, e1, frac = _segment_exit(test, y0, y1, n0, n1)
                if shifted:
                    e0, e1 = domain_project(dom, e0, e1)
                fint += fy * frac * dt
                tau = (s + frac) * dt
                y0 = e0
                y1 = e1
                exited = True
            else:
                fint += fy * dt
                y0 = n0
                y1 = n1
            s += 1
        out_steps[p] = s
        out_exit[p, 0] = y0
        out_exit[p, 1] = y1
        if exited:
            out_failed[p] = False
            out_tau[p] = tau
            out_fint[p] = fint
            out_val[p] = scalar_value(boundary, y0, y1) - fint
        else:
            out_failed[p] = True
            out_tau[p] = math.nan
            out_fint[p] = fint
            out_val[p] = math.nan


# --------------------------------------------------------------------------
# single-path API


def _as_velocity(velocity) -> FourierVelocityField:
    if isinstance(velocity, FourierVelocityField):
        return velocity
    return FourierVelocityField.constant(velocity)


_ZERO = ScalarField.constant(0.0)


def simulate_to_time(
    x0, T: float, dt: float, velocity, diffusion, key: StreamKey,
    scheme=StepScheme.EULER_MARUYAMA, domain=None,
) -> PathResult:
    """Integrate one path from ``x0`` over [0, T].

    The last step is shortened so the path ends exactly at T. On the torus
    (the default domain) positions are wrapped into [0, 1) after every step;
    pass :class:`~sparseobs.field_model.Plane` to disable wrapping.
    """
    scheme = as_scheme(scheme)
    domain = Torus() if domain is None else domain
    if getattr(domain, "bounded", False):
        raise ValueError("simulate_to_time runs on the torus or the plane")
    nsteps, last = time_grid(T, dt)
    vel = _as_velocity(velocity)
    lo, hi = split_seed(key.seed)
    val = np.empty(1)
    term = np.empty((1, 2))
    x0 = np.asarray(x0, dtype=float)
    time_block(
        float(x0[0]), float(x0[1]), nsteps, float(dt), float(last),
        scheme is StepScheme.MILSTEIN, int(domain.encoded[0]), vel.encoded, diffusion.encoded,
        _ZERO.encoded, lo, hi, key.obs_index, key.particle_index, val, term,
    )
    return PathResult(term[0].copy(), None, 0.0, nsteps)


def simulate_to_exit(
    x0, domain, dt: float, velocity, diffusion, key: StreamKey, forcing=None,
    scheme=StepScheme.EULER_MARUYAMA, max_steps: int = DEFAULT_MAX_STEPS, shift_coef: float = 0.0,
) -> PathResult:
    """Integrate one path until it first leaves the bounded ``domain``.

    The exit point is interpolated on the crossing segment; the exit time is
    ``(completed steps + fraction) * dt`` and the forcing integral is the
    left Riemann sum with the crossing step weighted by the same fraction.
    A path that does not exit within ``max_steps`` comes back with
    ``failed=True``. ``shift_coef`` enables the boundary-shift exit test
    (see :data:`BOUNDARY_SHIFT`).
    """
    scheme = as_scheme(scheme)
    if not getattr(domain, "bounded", False):
        raise ValueError("simulate_to_exit needs a bounded domain")
    if not dt > 0:
        raise ValueError("time step must be positive")
    x0 = np.asarray(x0, dtype=float)
    if not domain.contains(x0) and domain.distance_to_boundary(x0) < -BOUNDARY_EPS:
        raise ValueError(f"start point {x0} is outside the domain")
    vel = _as_velocity(velocity)
    lo, hi = split_seed(key.seed)
    outs = _exit_buffers(1)
    exit_block(
        float(x0[0]), float(x0[1]), float(dt), scheme is StepScheme.MILSTEIN,
        vel.encoded, diffusion.encoded, (forcing or _ZERO).encoded, forcing is not None,
        _ZERO.encoded, domain.encoded, lo, hi, key.obs_index, key.particle_index,
        int(max_steps), float(shift_coef), *outs,
    )
    _, tau, fint, steps, exit_pt, failed = outs
    if failed[0]:
        return PathResult(exit_pt[0].copy(), None, float(fint[0]), int(steps[0]), failed=True)
    return PathResult(exit_pt[0].copy(), float(tau[0]), float(fint[0]), int(steps[0]))


def _exit_buffers(n: int):
    return (
        np.empty(n),
        np.empty(n),
        np.empty(n),
        np.empty(n, dtype=np.int64),
        np.empty((n, 2)),
        np.empty(n, dtype=np.bool_),
    )

