"""Full-field reference solvers used as oracles and as the benchmark baseline.

* :func:`galerkin_solve_ad` projects the time-dependent problem on the
  torus onto Fourier modes e^{2 pi i l.x} and steps M dTheta/dt = A Theta
  with explicit Euler (M = I for this orthonormal basis).
* :func:`fd_solve_bvp` discretizes the Dirichlet problem on a box with
  central differences for the diffusion and upwind differences for the
  drift.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .field_model import Box, ConstantDiffusion, DiagonalDiffusion, eval_velocity_fast
from .forward_ad import AdProblemSpec
from .forward_bvp import BvpProblemSpec

TWO_PI = 2.0 * math.pi


class StabilityError(ValueError):
    """Explicit Euler step too large for the assembled Galerkin operator."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SingularSystemError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Galerkin


def square_basis(L: int) -> np.ndarray:
    """Wavevectors with max(|l1|, |l2|) <= L."""
    r = np.arange(-L, L + 1)
    a, b = np.meshgrid(r, r, indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=1)


def disk_basis(K: int) -> np.ndarray:
    """Wavevectors with |l| <= K (same lattice set as a velocity cutoff K)."""
    sq = square_basis(K)
    return sq[(sq**2).sum(axis=1) <= K * K]


@dataclass
class GalerkinSystem:
    basis: np.ndarray          # (N_b, 2) integer wavevectors
    A: np.ndarray              # (N_b, N_b) complex
    theta0: np.ndarray         # projected initial condition

    @property
    def n_basis(self) -> int:
        return len(self.basis)

    def spectral_radius_bound(self) -> float:
        """Gershgorin bound on the spectral radius of A."""
        return float(np.abs(self.A).sum(axis=1).max())

    def evaluate(self, coeffs, x) -> np.ndarray:
        """sum_l Theta_l exp(2 pi i l.x) at points x, real part."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phase = np.exp(1j * TWO_PI * (x @ self.basis.T.astype(float)))
        return (phase @ coeffs).real


@dataclass
class GalerkinResult:
    system: GalerkinSystem
    times: np.ndarray          # distinct observation times, ascending
    coefficients: np.ndarray   # (len(times), N_b)
    values: np.ndarray         # one per observation, spec order
    n_steps: int

    def field_on_grid(self, time_index: int = -1, n: int = 64):
        g = np.arange(n) / n
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        return X, Y, self.system.evaluate(self.coefficients[time_index], pts).reshape(n, n)


def project_scalar(field, basis: np.ndarray, n_grid: int | None = None) -> np.ndarray:
    """Fourier coefficients of a periodic scalar field on the given basis (FFT)."""
    L = int(np.abs(basis).max()) if len(basis) else 0
    n = n_grid or max(64, 4 * L + 4)
    g = np.arange(n) / n
    X, Y = np.meshgrid(g, g, indexing="ij")
    vals = field(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(n, n)
    F = np.fft.fft2(vals) / (n * n)
    return F[basis[:, 0] % n, basis[:, 1] % n]


def assemble_galerkin(velocity, kappa: float, basis: np.ndarray) -> np.ndarray:
    """Dense A_lm = <phi_l, -v.grad(phi_m) + kappa Lap(phi_m)>.

    With v = sum_k c_k e^{2 pi i k.x}: A_lm = -2 pi i (m . c_{l-m}) - 4 pi^2 kappa |m|^2 delta_lm.
    """
    coeffs = velocity.fourier_coefficients()
    span = int(np.abs(basis).max()) * 2 if len(basis) else 0
    kv = max((max(abs(a), abs(b)) for a, b in coeffs), default=0)
    size = max(span, kv)
    # dense lookup table of c_k over offsets in [-size, size]^2
    table = np.zeros((2 * size + 1, 2 * size + 1, 2), dtype=complex)
    for (a, b), c in coeffs.items():
        if abs(a) <= size and abs(b) <= size:
            table[a + size, b + size] = c
    l = basis.astype(np.int64)
    d0 = (l[:, 0][:, None] - l[:, 0][None, :]) + size
    d1 = (l[:, 1][:, None] - l[:, 1][None, :]) + size
    c = table[d0, d1]  # (N_b, N_b, 2)
    A = -1j * TWO_PI * (c[..., 0] * l[None, :, 0] + c[..., 1] * l[None, :, 1])
    A[np.diag_indices_from(A)] -= 4.0 * math.pi**2 * kappa * (l**2).sum(axis=1)
    return A


def galerkin_system(spec: AdProblemSpec, L: int, basis: str = "square") -> GalerkinSystem:
    if not isinstance(spec.diffusion, ConstantDiffusion):
        raise NotImplementedError("the Galerkin reference supports constant diffusion only")
    modes = square_basis(L) if basis == "square" else disk_basis(L)
    A = assemble_galerkin(spec.velocity, spec.diffusion.kappa, modes)
    return GalerkinSystem(modes, A, project_scalar(spec.initial_condition, modes))


def galerkin_solve_ad(
    spec: AdProblemSpec, L: int, dt_ref: float, basis: str = "square",
    system: GalerkinSystem | None = None,
) -> GalerkinResult:
    """Explicit Euler on the Galerkin system, observed at every (t_j, x_j).

    ``basis`` is ``"square"`` (|l|_inf <= L) or ``"disk"`` (|l|_2 <= L).
    Raises :class:`StabilityError` when dt_ref times the Gershgorin bound on
    the spectral radius of A is not below 2.
    """
    if not dt_ref > 0:
        raise ValueError("dt_ref must be positive")
    system = system or galerkin_system(spec, L, basis)
    rho = system.spectral_radius_bound()
    if rho * dt_ref >= 2.0:
        suggested = 1.9 / rho
        raise StabilityError(
            f"dt_ref={dt_ref:g} unstable (spectral radius bound {rho:.4g}); use dt_ref < {suggested:.3g}",
            suggested,
        )
    times = np.unique(spec.times)
    A = system.A
    theta = system.theta0.copy()
    t = 0.0
    snaps = []
    n_steps = 0
    for t_target in times:
        while t_target - t > 1e-12 * max(1.0, t_target):
            h = min(dt_ref, t_target - t)
            theta = theta + h * (A @ theta)
            t = t_target if h < dt_ref else t + h
            n_steps += 1
        snaps.append(theta.copy())
    snaps = np.array(snaps)
    index = {float(tt): i for i, tt in enumerate(times)}
    values = np.array([
        system.evaluate(snaps[index[float(tj)]], np.array([xj]))[0] for tj, xj in spec.observations
    ])
    return GalerkinResult(system, times, snaps, values, n_steps)


# --------------------------------------------------------------------------
# finite differences


@dataclass
class FdResult:
    x: np.ndarray              # grid coordinates along axis 0
    y: np.ndarray              # grid coordinates along axis 1
    theta: np.ndarray          # (n, n), theta[i, j] at (x[i], y[j])
    values: np.ndarray         # bilinear interpolation at the observations

    def at(self, points) -> np.ndarray:
        interp = RegularGridInterpolator((self.x, self.y), self.theta, method="linear")
        return interp(np.atleast_2d(points))


def fd_solve_bvp(spec: BvpProblemSpec, n: int) -> FdResult:
    """Solve -v.grad(theta) + a_1 d11 theta + a_2 d22 theta = f on an n x n node grid.

    ``a_d = sigma_d^2 / 2``. Boundary nodes carry identity rows pinned to the
    boundary data.
    """
    if n < 33:
        raise ValueError("grid needs n >= 33")
    if not isinstance(spec.domain, Box):
        raise NotImplementedError("the finite-difference oracle supports box domains only")
    lo, hi = np.array(spec.domain.lower), np.array(spec.domain.upper)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    N = n * n
    idx = np.arange(N).reshape(n, n)

    boundary = np.zeros((n, n), dtype=bool)
    boundary[0, :] = boundary[-1, :] = boundary[:, 0] = boundary[:, -1] = True
    bmask = boundary.ravel()
    inner = ~bmask

    drift = -eval_velocity_fast(spec.velocity, pts)   # generator drift b = -v
    if isinstance(spec.diffusion, DiagonalDiffusion):
        a = 0.5 * spec.diffusion.sigma(pts) ** 2
    else:
        a = np.full((N, 2), spec.diffusion.kappa)

    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    ii = idx[inner.reshape(n, n)]
    p = ii
    bx, by = drift[p, 0], drift[p, 1]
    ax, ay = a[p, 0], a[p, 1]
    east, west = p + n, p - n      # i +/- 1
    north, south = p + 1, p - 1    # j +/- 1

    # diffusion
    add(p, east, ax / hx**2)
    add(p, west, ax / hx**2)
    add(p, north, ay / hy**2)
    add(p, south, ay / hy**2)
    diag = -2.0 * ax / hx**2 - 2.0 * ay / hy**2
    # upwind drift: forward difference where b > 0, backward where b < 0
    bxp, bxm = np.maximum(bx, 0.0), np.minimum(bx, 0.0)
    byp, bym = np.maximum(by, 0.0), np.minimum(by, 0.0)
    add(p, east, bxp / hx)
    add(p, west, -bxm / hx)
    add(p, north, byp / hy)
    add(p, south, -bym / hy)
    diag = diag - bxp / hx + bxm / hx - byp / hy + bym / hy
    add(p, p, diag)

    bi = np.flatnonzero(bmask)
    add(bi, bi, np.ones(bi.size))

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    rhs = np.zeros(N)
    if spec.forcing is not None:
        rhs[inner] = spec.forcing(pts[inner])
    rhs[bmask] = spec.boundary(pts[bmask])

    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            theta = spla.spsolve(A.tocsc(), rhs)
        except spla.MatrixRankWarning as exc:
            raise SingularSystemError("finite-difference system is singular") from exc
    if not np.all(np.isfinite(theta)):
        raise SingularSystemError("finite-difference solve produced non-finite values")
    theta = theta.reshape(n, n)
    result = FdResult(xs, ys, theta, np.empty(0))
    result.values = result.at(np.array(spec.observations))
    return result
