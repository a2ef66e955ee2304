"""Spatial data of the advection-diffusion problems.

Velocity, diffusion, scalar fields (initial condition, forcing, boundary
data) and the domain. All objects are immutable. Each one also exposes an
``encoded`` tuple of plain arrays consumed by the numba particle kernels in
:mod:`sparseobs.sde_kernel`; the jitted evaluators for those encodings live
at the bottom of this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numba as nb
import numpy as np

TWO_PI = 2.0 * math.pi

# domain kind codes shared with the kernels
TORUS, BOX, DISK, PLANE = 0, 1, 2, 3

BOUNDARY_EPS = 1e-12


def _frozen(a, dtype=float, shape=None):
    arr = np.array(a, dtype=dtype)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


def _points(x):
    """Coerce to an (n, 2) float array; also report whether input was a single point."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != 2:
        raise ValueError(f"points must have 2 components, got shape {arr.shape}")
    return arr, single


# --------------------------------------------------------------------------
# velocity


def representative_modes(max_wavenumber: int) -> np.ndarray:
    """One wavevector per +/-k pair with 0 < |k| <= K.

    The representative is the member with k2 > 0, or k2 == 0 and k1 > 0.
    Modes are ordered by |k|^2, then k1, then k2.
    """
    K = int(max_wavenumber)
    r = np.arange(-K, K + 1)
    k1, k2 = (a.ravel() for a in np.meshgrid(r, r, indexing="ij"))
    norm2 = k1 * k1 + k2 * k2
    keep = (norm2 <= K * K) & ((k2 > 0) | ((k2 == 0) & (k1 > 0)))
    k1, k2, norm2 = k1[keep], k2[keep], norm2[keep]
    order = np.lexsort((k2, k1, norm2))
    return np.stack([k1[order], k2[order]], axis=1)


def lattice_count(max_wavenumber: int) -> int:
    """Number of integer wavevectors with |k| <= K, the origin included."""
    return 2 * len(representative_modes(max_wavenumber)) + 1


@dataclass(frozen=True, eq=False)
class FourierVelocityField:
    """Divergence-free velocity ``mean + sum_k v_k (k_perp/|k|) exp(2 pi i k.x)``.

    Only one representative of each +/-k pair is stored; its partner is
    ``v_{-k} = -conj(v_k)``, which makes the field real.
    """

    modes: np.ndarray
    coefficients: np.ndarray
    max_wavenumber: int = 1
    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, 2)
        coefs = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        if len(modes) != len(coefs):
            raise ValueError("one coefficient per mode required")
        K = int(self.max_wavenumber)
        if K <= 0:
            raise ValueError("max_wavenumber must be positive")
        norm2 = (modes**2).sum(axis=1)
        if np.any(norm2 == 0):
            raise ValueError("the k = (0, 0) mode is not allowed; use `mean`")
        if np.any(norm2 > K * K):
            raise ValueError(f"mode outside |k| <= {K}")
        seen = set()
        for k1, k2 in modes.tolist():
            if (k1, k2) in seen or (-k1, -k2) in seen:
                raise ValueError(f"mode {(k1, k2)} stored twice (or with its partner)")
            seen.add((k1, k2))
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(coefs))):
            raise ValueError("velocity data must be finite")
        object.__setattr__(self, "modes", _frozen(modes, np.int64))
        object.__setattr__(self, "coefficients", _frozen(coefs, complex))
        object.__setattr__(self, "max_wavenumber", K)
        object.__setattr__(self, "mean", _frozen(mean))

    @classmethod
    def zero(cls, max_wavenumber: int = 1) -> FourierVelocityField:
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0, complex), max_wavenumber)

    @classmethod
    def constant(cls, v) -> FourierVelocityField:
        """A uniform flow with no Fourier modes."""
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0, complex), 1, mean=v)

    @classmethod
    def from_vector(cls, max_wavenumber: int, u, mean=(0.0, 0.0)) -> FourierVelocityField:
        """Build from real parameters ``[re_1, im_1, re_2, im_2, ...]`` over
        :func:`representative_modes` order."""
        modes = representative_modes(max_wavenumber)
        u = np.asarray(u, dtype=float)
        if u.shape != (2 * len(modes),):
            raise ValueError(f"expected {2 * len(modes)} parameters, got {u.shape}")
        return cls(modes, u[0::2] + 1j * u[1::2], max_wavenumber, mean=mean)

    def to_vector(self) -> np.ndarray:
        out = np.empty(2 * len(self.modes))
        out[0::2] = self.coefficients.real
        out[1::2] = self.coefficients.imag
        return out

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @cached_property
    def unit_perp(self) -> np.ndarray:
        k = self.modes.astype(float)
        perp = np.stack([-k[:, 1], k[:, 0]], axis=1)
        return perp / np.linalg.norm(k, axis=1, keepdims=True) if len(k) else perp

    def speed_bound(self) -> float:
        """Upper bound on |v(x)| over the plane."""
        return float(np.linalg.norm(self.mean) + 2.0 * np.abs(self.coefficients).sum())

    def fourier_coefficients(self) -> dict[tuple[int, int], np.ndarray]:
        """Vector Fourier coefficients c_k of the field, both partners and the mean."""
        out = {(0, 0): self.mean.astype(complex)}
        for (k1, k2), vk, perp in zip(self.modes.tolist(), self.coefficients, self.unit_perp):
            out[(k1, k2)] = vk * perp
            out[(-k1, -k2)] = np.conj(vk) * perp
        return out

    def __call__(self, x) -> np.ndarray:
        return eval_velocity(self, x)

    @cached_property
    def encoded(self):
        coef = np.stack([self.coefficients.real, self.coefficients.imag], axis=1)
        return (
            np.ascontiguousarray(self.mean, dtype=float),
            np.ascontiguousarray(self.modes, dtype=np.int64),
            np.ascontiguousarray(coef.reshape(-1, 2)),
            np.ascontiguousarray(self.unit_perp.reshape(-1, 2)),
        )


def eval_velocity(field: FourierVelocityField, x) -> np.ndarray:
    """Evaluate the velocity by direct summation over both members of each pair.

    The imaginary residue of the complex sum is checked and discarded.
    """
    pts, single = _points(x)
    out = np.tile(field.mean.astype(complex), (len(pts), 1))
    if field.n_modes:
        k = field.modes.astype(float)
        phase = np.exp(1j * TWO_PI * (pts @ k.T))  # (n, M)
        partner = np.exp(-1j * TWO_PI * (pts @ k.T))
        vk = field.coefficients
        v_minus = -np.conj(vk)
        perp = field.unit_perp
        out = out + (phase * vk) @ perp + (partner * v_minus) @ (-perp)
    residue = np.abs(out.imag) / (1.0 + np.abs(out.real))
    if residue.size and residue.max() >= 1e-12:
        raise ArithmeticError(f"velocity sum not real (residue {residue.max():.3e})")
    real = out.real
    return real[0] if single else real


def divergence(field, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference divergence of a velocity evaluator."""
    pts, single = _points(x)
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    div = (field(pts + ex)[:, 0] - field(pts - ex)[:, 0]) / (2 * h)
    div += (field(pts + ey)[:, 1] - field(pts - ey)[:, 1]) / (2 * h)
    return div[0] if single else div


# --------------------------------------------------------------------------
# scalar fields


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Sum of a closed set of families::

        c + g.x + sum_m a_m cos(2 pi w_m.x + phi_m) + sum_j f_j exp(-s |x - x_j|^2)

    The usual constructors (:meth:`constant`, :meth:`affine`,
    :meth:`cosine_series`, :meth:`gaussian_bumps`) each fill one family.
    """

    constant_term: float = 0.0
    gradient: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cosine_terms: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    bumps: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    sharpness: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "constant_term", float(self.constant_term))
        object.__setattr__(self, "gradient", _frozen(self.gradient, shape=(2,)))
        object.__setattr__(self, "cosine_terms", _frozen(self.cosine_terms, shape=(-1, 4)))
        object.__setattr__(self, "bumps", _frozen(self.bumps, shape=(-1, 3)))
        object.__setattr__(self, "sharpness", float(self.sharpness))
        arrays = (self.gradient, self.cosine_terms, self.bumps)
        if not (math.isfinite(self.constant_term) and all(np.all(np.isfinite(a)) for a in arrays)):
            raise ValueError("scalar field parameters must be finite")
        if len(self.bumps) and self.sharpness <= 0:
            raise ValueError("bump sharpness must be positive")

    @classmethod
    def constant(cls, c: float) -> ScalarField:
        return cls(constant_term=c)

    @classmethod
    def affine(cls, c: float, gradient) -> ScalarField:
        return cls(constant_term=c, gradient=gradient)

    @classmethod
    def cosine_series(cls, terms) -> ScalarField:
        """``terms`` rows are (amplitude, w1, w2, phase)."""
        return cls(cosine_terms=terms)

    @classmethod
    def gaussian_bumps(cls, amplitudes, centers, sharpness: float = 4.0) -> ScalarField:
        amplitudes = np.asarray(amplitudes, dtype=float).reshape(-1, 1)
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        if len(amplitudes) != len(centers):
            raise ValueError("one amplitude per bump center required")
        return cls(bumps=np.hstack([amplitudes, centers]), sharpness=sharpness)

    @property
    def kind(self) -> str:
        parts = []
        if self.constant_term or not any(
            (np.any(self.gradient), len(self.cosine_terms), len(self.bumps))
        ):
            parts.append("constant")
        if np.any(self.gradient):
            parts.append("affine")
        if len(self.cosine_terms):
            parts.append("cosine-series")
        if len(self.bumps):
            parts.append("gaussian-bump-sum")
        return "+".join(parts)

    @property
    def is_constant(self) -> bool:
        return not (np.any(self.gradient) or len(self.cosine_terms) or len(self.bumps))

    def scaled(self, a: float, shift: float = 0.0) -> ScalarField:
        """The field ``a * self + shift``."""
        terms = self.cosine_terms.copy()
        terms[:, 0] *= a
        bumps = self.bumps.copy()
        bumps[:, 0] *= a
        return ScalarField(a * self.constant_term + shift, a * self.gradient, terms, bumps, self.sharpness)

    def with_bump_amplitudes(self, amplitudes) -> ScalarField:
        bumps = self.bumps.copy()
        bumps[:, 0] = np.asarray(amplitudes, dtype=float)
        return ScalarField(self.constant_term, self.gradient, self.cosine_terms, bumps, self.sharpness)

    def __call__(self, x):
        return eval_scalar(self, x)

    def grad(self, x) -> np.ndarray:
        pts, single = _points(x)
        out = np.empty_like(pts)
        _scalar_grad_many(self.encoded, pts, out)
        return out[0] if single else out

    @cached_property
    def encoded(self):
        params = np.array([self.constant_term, *self.gradient, self.sharpness])
        return (
            params,
            np.ascontiguousarray(self.cosine_terms, dtype=float),
            np.ascontiguousarray(self.bumps, dtype=float),
        )


def eval_scalar(field: ScalarField, x):
    """Evaluate a scalar field at one point (returns float) or many (returns array)."""
    pts, single = _points(x)
    out = np.empty(len(pts))
    _scalar_value_many(field.encoded, pts, out)
    return float(out[0]) if single else out


# --------------------------------------------------------------------------
# diffusion


@dataclass(frozen=True)
class ConstantDiffusion:
    """Isotropic diffusion kappa * Laplacian, i.e. sigma = sqrt(2 kappa) I."""

    kappa: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError("kappa must be finite and nonnegative")

    kind = "constant-isotropic"
    is_constant = True

    @property
    def sigma_value(self) -> float:
        return math.sqrt(2.0 * self.kappa)

    def sigma(self, x) -> np.ndarray:
        pts, single = _points(x)
        out = np.full(pts.shape, self.sigma_value)
        return out[0] if single else out

    def sigma_prime(self, x) -> np.ndarray:
        pts, single = _points(x)
        out = np.zeros(pts.shape)
        return out[0] if single else out

    def max_kappa(self, domain=None) -> float:
        return self.kappa

    @cached_property
    def encoded(self):
        dummy = ScalarField.constant(0.0).encoded
        return (np.array([0.0, self.kappa]), dummy, dummy)


@dataclass(frozen=True)
class DiagonalDiffusion:
    """State-dependent diagonal sigma = diag(sigma_1(x), sigma_2(x)).

    ``sigma_prime`` returns d sigma_d / d x_d for each component d, which is
    the derivative entering the componentwise Milstein correction.
    """

    sigma1: ScalarField
    sigma2: ScalarField

    kind = "diagonal-state-dependent"
    is_constant = False

    def sigma(self, x) -> np.ndarray:
        pts, single = _points(x)
        out = np.stack([self.sigma1(pts), self.sigma2(pts)], axis=1)
        return out[0] if single else out

    def sigma_prime(self, x) -> np.ndarray:
        pts, single = _points(x)
        out = np.stack([self.sigma1.grad(pts)[:, 0], self.sigma2.grad(pts)[:, 1]], axis=1)
        return out[0] if single else out

    def max_kappa(self, domain=None) -> float:
        """Largest sigma_d^2 / 2 over a coarse sample of the domain."""
        lo, hi = (np.zeros(2), np.ones(2)) if domain is None else domain.bounding_box()
        g = np.linspace(0.0, 1.0, 33)
        pts = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2) * (hi - lo) + lo
        return float(0.5 * np.max(self.sigma(pts) ** 2))

    @cached_property
    def encoded(self):
        return (np.array([1.0, 0.0]), self.sigma1.encoded, self.sigma2.encoded)


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Torus:
    """The periodic unit square [0, 1)^2."""

    kind = "periodic-torus"
    bounded = False

    def contains(self, x) -> np.ndarray | bool:
        pts, single = _points(x)
        out = np.all(np.isfinite(pts), axis=1)
        return bool(out[0]) if single else out

    def wrap(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float) % 1.0
        return np.where(y >= 1.0, 0.0, y)

    def bounding_box(self):
        return np.zeros(2), np.ones(2)

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0)

    @cached_property
    def encoded(self):
        return np.array([TORUS, 0.0, 0.0, 1.0, 1.0])


@dataclass(frozen=True)
class Box:
    """Open axis-aligned rectangle (lower, upper)."""

    lower: tuple = (0.0, 0.0)
    upper: tuple = (1.0, 1.0)

    kind = "axis-aligned-box"
    bounded = True

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != 2 or len(hi) != 2 or not (lo[0] < hi[0] and lo[1] < hi[1]):
            raise ValueError("box needs lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, x):
        pts, single = _points(x)
        lo, hi = np.array(self.lower), np.array(self.upper)
        out = np.all((pts > lo) & (pts < hi), axis=1)
        return bool(out[0]) if single else out

    def distance_to_boundary(self, x):
        pts, single = _points(x)
        d = np.minimum(pts - np.array(self.lower), np.array(self.upper) - pts).min(axis=1)
        return float(d[0]) if single else d

    def bounding_box(self):
        return np.array(self.lower), np.array(self.upper)

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.upper[0] - self.lower[0], self.upper[1] - self.lower[1]))

    def boundary_exit(self, inside, outside):
        return boundary_exit(self, inside, outside)

    @cached_property
    def encoded(self):
        return np.array([BOX, *self.lower, *self.upper])


@dataclass(frozen=True)
class Disk:
    """Open disk of given center and radius."""

    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    kind = "disk"
    bounded = True

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 2 or not self.radius > 0:
            raise ValueError("disk needs a 2D center and positive radius")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, x):
        pts, single = _points(x)
        out = np.linalg.norm(pts - np.array(self.center), axis=1) < self.radius
        return bool(out[0]) if single else out

    def distance_to_boundary(self, x):
        pts, single = _points(x)
        d = self.radius - np.linalg.norm(pts - np.array(self.center), axis=1)
        return float(d[0]) if single else d

    def bounding_box(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def boundary_exit(self, inside, outside):
        return boundary_exit(self, inside, outside)

    @cached_property
    def encoded(self):
        return np.array([DISK, *self.center, self.radius, 0.0])


@dataclass(frozen=True)
class Plane:
    """Unbounded plane; paths are neither wrapped nor stopped."""

    kind = "plane"
    bounded = False

    def contains(self, x):
        pts, single = _points(x)
        out = np.all(np.isfinite(pts), axis=1)
        return bool(out[0]) if single else out

    def bounding_box(self):
        return np.zeros(2), np.ones(2)

    @cached_property
    def encoded(self):
        return np.array([PLANE, 0.0, 0.0, 0.0, 0.0])


def boundary_exit(domain, inside, outside) -> tuple[np.ndarray, float]:
    """Where the segment inside -> outside first meets the boundary.

    Returns ``(exit_point, fraction)`` with ``exit_point = inside +
    fraction * (outside - inside)`` projected exactly onto the boundary.
    """
    if not getattr(domain, "bounded", False):
        raise ValueError(f"{type(domain).__name__} has no boundary")
    a = np.asarray(inside, dtype=float).reshape(2)
    b = np.asarray(outside, dtype=float).reshape(2)
    if np.array_equal(a, b):
        raise ValueError("degenerate segment: inside == outside")
    if not domain.contains(a) and domain.distance_to_boundary(a) < 0:
        raise ValueError(f"start point {a} is outside the domain")
    if domain.contains(b):
        raise ValueError(f"end point {b} is inside the domain")
    e0, e1, frac = _segment_exit(domain.encoded, a[0], a[1], b[0], b[1])
    return np.array([e0, e1]), float(frac)


# --------------------------------------------------------------------------
# jitted evaluators over the encodings


@nb.njit(cache=True, nogil=True, inline="always")
def scalar_value(sf, x0, x1):
    params, cos_terms, bumps = sf
    val = params[0] + params[1] * x0 + params[2] * x1
    for m in range(cos_terms.shape[0]):
        val += cos_terms[m, 0] * math.cos(
            TWO_PI * (cos_terms[m, 1] * x0 + cos_terms[m, 2] * x1) + cos_terms[m, 3]
        )
    s = params[3]
    for j in range(bumps.shape[0]):
        d0 = x0 - bumps[j, 1]
        d1 = x1 - bumps[j, 2]
        val += bumps[j, 0] * math.exp(-s * (d0 * d0 + d1 * d1))
    return val


@nb.njit(cache=True, nogil=True, inline="always")
def scalar_grad(sf, x0, x1):
    params, cos_terms, bumps = sf
    g0 = params[1]
    g1 = params[2]
    for m in range(cos_terms.shape[0]):
        w0 = cos_terms[m, 1]
        w1 = cos_terms[m, 2]
        s = -cos_terms[m, 0] * TWO_PI * math.sin(TWO_PI * (w0 * x0 + w1 * x1) + cos_terms[m, 3])
        g0 += s * w0
        g1 += s * w1
    sh = params[3]
    for j in range(bumps.shape[0]):
        d0 = x0 - bumps[j, 1]
        d1 = x1 - bumps[j, 2]
        e = -2.0 * sh * bumps[j, 0] * math.exp(-sh * (d0 * d0 + d1 * d1))
        g0 += e * d0
        g1 += e * d1
    return g0, g1


@nb.njit(cache=True, nogil=True)
def _scalar_value_many(sf, pts, out):
    for i in range(pts.shape[0]):
        out[i] = scalar_value(sf, pts[i, 0], pts[i, 1])


@nb.njit(cache=True, nogil=True)
def _scalar_grad_many(sf, pts, out):
    for i in range(pts.shape[0]):
        g0, g1 = scalar_grad(sf, pts[i, 0], pts[i, 1])
        out[i, 0] = g0
        out[i, 1] = g1


@nb.njit(cache=True, nogil=True)
def max_wavenumber_of(vel):
    modes = vel[1]
    kmax = 0
    for m in range(modes.shape[0]):
        kmax = max(kmax, abs(modes[m, 0]), abs(modes[m, 1]))
    return kmax


@nb.njit(cache=True, nogil=True, inline="always")
def velocity_value(vel, x0, x1, pow0, pow1):
    """Velocity via 2 Re(v_k e^{2 pi i k.x}) k_perp/|k|.

    ``pow0``/``pow1`` are complex scratch arrays of length >= kmax + 1 that
    receive the powers of exp(2 pi i x_d), so each mode costs one complex
    product instead of a trig call.
    """
    mean, modes, coefs, perp = vel
    v0 = mean[0]
    v1 = mean[1]
    nm = modes.shape[0]
    if nm == 0:
        return v0, v1
    kmax = pow0.shape[0] - 1
    e0 = complex(math.cos(TWO_PI * x0), math.sin(TWO_PI * x0))
    e1 = complex(math.cos(TWO_PI * x1), math.sin(TWO_PI * x1))
    pow0[0] = 1.0
    pow1[0] = 1.0
    for j in range(1, kmax + 1):
        pow0[j] = pow0[j - 1] * e0
        pow1[j] = pow1[j - 1] * e1
    for m in range(nm):
        k0 = modes[m, 0]
        k1 = modes[m, 1]
        z0 = pow0[k0] if k0 >= 0 else pow0[-k0].conjugate()
        z1 = pow1[k1] if k1 >= 0 else pow1[-k1].conjugate()
        z = z0 * z1
        amp = 2.0 * (coefs[m, 0] * z.real - coefs[m, 1] * z.imag)
        v0 += amp * perp[m, 0]
        v1 += amp * perp[m, 1]
    return v0, v1


@nb.njit(cache=True, nogil=True)
def _velocity_many(vel, pts, out):
    kmax = max_wavenumber_of(vel)
    pow0 = np.empty(kmax + 1, dtype=np.complex128)
    pow1 = np.empty(kmax + 1, dtype=np.complex128)
    for i in range(pts.shape[0]):
        v0, v1 = velocity_value(vel, pts[i, 0], pts[i, 1], pow0, pow1)
        out[i, 0] = v0
        out[i, 1] = v1


def eval_velocity_fast(field: FourierVelocityField, x) -> np.ndarray:
    """Kernel-path velocity evaluation (power-table, real form)."""
    pts, single = _points(x)
    out = np.empty_like(pts)
    _velocity_many(field.encoded, np.ascontiguousarray(pts), out)
    return out[0] if single else out


@nb.njit(cache=True, nogil=True, inline="always")
def diffusion_value(diff, x0, x1):
    """Return (sigma_1, sigma_2, dsigma_1/dx_1, dsigma_2/dx_2)."""
    dparams, sf1, sf2 = diff
    if dparams[0] == 0.0:
        s = math.sqrt(2.0 * dparams[1])
        return s, s, 0.0, 0.0
    s1 = scalar_value(sf1, x0, x1)
    s2 = scalar_value(sf2, x0, x1)
    g1 = scalar_grad(sf1, x0, x1)
    g2 = scalar_grad(sf2, x0, x1)
    return s1, s2, g1[0], g2[1]


@nb.njit(cache=True, nogil=True, inline="always")
def domain_inside(dom, x0, x1):
    kind = dom[0]
    if kind == BOX:
        return dom[1] < x0 < dom[3] and dom[2] < x1 < dom[4]
    if kind == DISK:
        d0 = x0 - dom[1]
        d1 = x1 - dom[2]
        return d0 * d0 + d1 * d1 < dom[3] * dom[3]
    return True


@nb.njit(cache=True, nogil=True, inline="always")
def domain_distance(dom, x0, x1):
    kind = dom[0]
    if kind == BOX:
        return min(x0 - dom[1], dom[3] - x0, x1 - dom[2], dom[4] - x1)
    if kind == DISK:
        return dom[3] - math.hypot(x0 - dom[1], x1 - dom[2])
    return math.inf


@nb.njit(cache=True, nogil=True)
def domain_project(dom, x0, x1):
    """Nearest boundary point (used for starts within BOUNDARY_EPS of the boundary)."""
    kind = dom[0]
    if kind == BOX:
        dists = (x0 - dom[1], dom[3] - x0, x1 - dom[2], dom[4] - x1)
        best = 0
        for i in range(1, 4):
            if dists[i] < dists[best]:
                best = i
        if best == 0:
            return dom[1], x1
        if best == 1:
            return dom[3], x1
        if best == 2:
            return x0, dom[2]
        return x0, dom[4]
    d0 = x0 - dom[1]
    d1 = x1 - dom[2]
    r = math.hypot(d0, d1)
    if r == 0.0:
        return dom[1] + dom[3], dom[2]
    return dom[1] + dom[3] * d0 / r, dom[2] + dom[3] * d1 / r


@nb.njit(cache=True, nogil=True)
def _segment_exit(dom, a0, a1, b0, b1):
    """Exit point and segment fraction for a step from inside (a) to outside (b)."""
    kind = dom[0]
    d0 = b0 - a0
    d1 = b1 - a1
    if kind == BOX:
        frac = 1.0
        face = -1
        if b0 <= dom[1] and d0 != 0.0:
            t = (dom[1] - a0) / d0
            if t < frac:
                frac, face = t, 0
        if b0 >= dom[3] and d0 != 0.0:
            t = (dom[3] - a0) / d0
            if t < frac:
                frac, face = t, 1
        if b1 <= dom[2] and d1 != 0.0:
            t = (dom[2] - a1) / d1
            if t < frac:
                frac, face = t, 2
        if b1 >= dom[4] and d1 != 0.0:
            t = (dom[4] - a1) / d1
            if t < frac:
                frac, face = t, 3
        frac = min(max(frac, 0.0), 1.0)
        e0 = a0 + frac * d0
        e1 = a1 + frac * d1
        # pin the crossed coordinate to the face and keep the other on the closed box
        if face == 0:
            e0 = dom[1]
        elif face == 1:
            e0 = dom[3]
        elif face == 2:
            e1 = dom[2]
        elif face == 3:
            e1 = dom[4]
        e0 = min(max(e0, dom[1]), dom[3])
        e1 = min(max(e1, dom[2]), dom[4])
        return e0, e1, frac
    # disk: positive root of |p + t d|^2 = r^2 with p inside
    p0 = a0 - dom[1]
    p1 = a1 - dom[2]
    r = dom[3]
    dd = d0 * d0 + d1 * d1
    pd = p0 * d0 + p1 * d1
    c = r * r - (p0 * p0 + p1 * p1)
    if c < 0.0:
        c = 0.0
    disc = math.sqrt(pd * pd + dd * c)
    if pd >= 0.0:
        frac = c / (pd + disc) if pd + disc > 0.0 else 0.0
    else:
        frac = (disc - pd) / dd
    frac = min(max(frac, 0.0), 1.0)
    q0 = p0 + frac * d0
    q1 = p1 + frac * d1
    nq = math.hypot(q0, q1)
    if nq > 0.0:
        q0 *= r / nq
        q1 *= r / nq
    return dom[1] + q0, dom[2] + q1, frac
