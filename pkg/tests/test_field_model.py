import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseobs.field_model import (
    Box,
    ConstantDiffusion,
    DiagonalDiffusion,
    Disk,
    FourierVelocityField,
    Plane,
    ScalarField,
    Torus,
    boundary_exit,
    divergence,
    eval_scalar,
    eval_velocity,
    eval_velocity_fast,
    lattice_count,
    representative_modes,
)

from conftest import cosine_boundary


def random_field(K, rng, scale=1.0):
    modes = representative_modes(K)
    coefs = scale * (rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes)))
    return FourierVelocityField(modes, coefs, K)


def direct_sum(field, x):
    """Sum over both members of every pair, complex arithmetic, no shortcuts."""
    total = np.zeros(2, dtype=complex)
    for k, c in zip(field.modes, field.coefficients):
        for kk, cc in ((k, c), (-k, -np.conj(c))):
            perp = np.array([-kk[1], kk[0]]) / np.linalg.norm(kk)
            total += cc * perp * np.exp(2j * np.pi * (kk @ x))
    return total


class TestModes:
    @pytest.mark.parametrize("K, count", [(2, 13), (4, 49), (8, 197), (16, 797), (32, 3209)])
    def test_lattice_counts_match_tiers(self, K, count):
        assert lattice_count(K) == count
        assert len(representative_modes(K)) == (count - 1) // 2

    def test_representatives_are_one_per_pair(self):
        modes = representative_modes(5)
        s = {tuple(m) for m in modes}
        assert all(tuple(-m) not in s for m in modes)
        assert all(m[1] > 0 or (m[1] == 0 and m[0] > 0) for m in modes)

    def test_perp_orthogonal(self):
        f = random_field(6, np.random.default_rng(0))
        perp = np.stack([-f.modes[:, 1], f.modes[:, 0]], axis=1)
        assert np.all((f.modes * perp).sum(axis=1) == 0)
        assert np.allclose(f.unit_perp * np.linalg.norm(f.modes, axis=1)[:, None], perp, atol=1e-14)

    @pytest.mark.parametrize(
        "modes, err",
        [([[0, 0]], "k = 0"), ([[3, 0]], "cutoff"), ([[1, 0], [-1, 0]], "partner")],
    )
    def test_invalid_modes_rejected(self, modes, err):
        with pytest.raises(ValueError):
            FourierVelocityField(np.array(modes), np.ones(len(modes), complex), 2)

    def test_vector_roundtrip(self, rng):
        u = rng.standard_normal(2 * len(representative_modes(3)))
        f = FourierVelocityField.from_vector(3, u)
        assert np.array_equal(f.to_vector(), u)


class TestVelocity:
    def test_zero_field(self):
        assert np.array_equal(eval_velocity(FourierVelocityField.zero(3), (0.3, 0.7)), [0.0, 0.0])

    def test_single_pair_hand_value(self):
        # v_k = i/2 at k = (1, 0): v = 2 Re(i/2 e^{2 pi i x1}) (0, 1) = (0, -sin(2 pi x1))
        f = FourierVelocityField(np.array([[1, 0]]), np.array([0.5j]), 1)
        assert np.allclose(eval_velocity(f, (0.0, 0.0)), [0.0, 0.0], atol=1e-15)
        assert np.allclose(eval_velocity(f, (0.25, 0.3)), [0.0, -1.0], atol=1e-15)
        for x in [(0.1, 0.2), (0.7, 0.9)]:
            assert np.allclose(eval_velocity(f, x), direct_sum(f, np.array(x)).real, atol=1e-14)

    def test_fast_kernel_matches_direct_sum(self, rng):
        f = random_field(8, rng)
        pts = rng.random((100, 2))
        ref = np.array([direct_sum(f, p).real for p in pts])
        assert np.allclose(eval_velocity(f, pts), ref, atol=1e-11)
        assert np.allclose(eval_velocity_fast(f, pts), ref, atol=1e-11)

    def test_reality(self, rng):
        f = random_field(8, rng)
        pts = rng.random((1000, 2))
        raw = np.array([direct_sum(f, p) for p in pts])
        assert np.max(np.abs(raw.imag) / (1 + np.abs(raw.real))) < 1e-12

    def test_divergence_free_random_8_mode(self, rng):
        modes = representative_modes(3)[:8]
        coefs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        f = FourierVelocityField(modes, coefs, 3)
        pts = rng.random((100, 2))
        assert np.max(np.abs(divergence(f, pts))) <= 1e-6 * max(1.0, f.speed_bound())

    def test_constant_field(self):
        f = FourierVelocityField.constant((1.0, -2.0))
        assert np.array_equal(f((0.4, 0.1)), [1.0, -2.0])

    @given(st.lists(st.floats(-3, 3), min_size=12, max_size=12), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_periodic(self, u, a, b):
        f = FourierVelocityField.from_vector(2, np.array(u))
        assert np.allclose(f((a, b)), f((a + 1.0, b - 2.0)), atol=1e-11)


class TestScalar:
    def test_constant(self):
        assert eval_scalar(ScalarField.constant(3.5), (0.2, 9.0)) == 3.5

    def test_bump_at_center(self):
        f = ScalarField.gaussian_bumps([1.0, 0.0, 0.0], [(0.2, 0.3), (0.5, 0.5), (0.9, 0.1)])
        assert eval_scalar(f, (0.2, 0.3)) == 1.0

    def test_boundary_data_corners(self):
        g = cosine_boundary()
        assert g((0.0, 0.0)) == pytest.approx(1.0, abs=1e-15)
        assert g((1.0, 1.0)) == pytest.approx(0.0, abs=1e-15)

    def test_families_and_gradient(self, rng):
        f = ScalarField(0.5, np.array([1.0, -2.0]), np.array([[0.7, 1.0, 2.0, 0.3]]),
                        np.array([[2.0, 0.4, 0.6]]), 3.0)
        pts = rng.random((20, 2))
        x, y = pts[:, 0], pts[:, 1]
        expect = (0.5 + x - 2 * y + 0.7 * np.cos(2 * np.pi * (x + 2 * y) + 0.3)
                  + 2.0 * np.exp(-3.0 * ((x - 0.4) ** 2 + (y - 0.6) ** 2)))
        assert np.allclose(f(pts), expect, atol=1e-14)
        h = 1e-6
        fd = np.stack([(f(pts + [h, 0]) - f(pts - [h, 0])) / (2 * h),
                       (f(pts + [0, h]) - f(pts - [0, h])) / (2 * h)], axis=1)
        assert np.allclose(f.grad(pts), fd, atol=1e-6)

    def test_scaled(self, rng):
        f = ScalarField.cosine_series([(1.0, 1.0, 0.0, 0.0)]).scaled(3.0, 1.0)
        p = rng.random((5, 2))
        assert np.allclose(f(p), 3 * np.cos(2 * np.pi * p[:, 0]) + 1)


class TestDiffusion:
    def test_constant(self):
        d = ConstantDiffusion(0.5)
        assert d.sigma_value == 1.0
        assert np.array_equal(d.sigma_prime((0.1, 0.2)), [0.0, 0.0])

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            ConstantDiffusion(-0.1)

    def test_diagonal_derivative(self):
        d = DiagonalDiffusion(ScalarField.affine(0.0, (1.0, 0.0)), ScalarField.constant(0.3))
        assert np.allclose(d.sigma((2.0, 5.0)), [2.0, 0.3])
        assert np.allclose(d.sigma_prime((2.0, 5.0)), [1.0, 0.0])


class TestDomains:
    def test_membership(self):
        b, d = Box((0, 0), (1, 1)), Disk((0, 0), 1.0)
        assert b.contains((0.5, 0.5)) and not b.contains((1.0, 0.5)) and not b.contains((1.2, 0.5))
        assert d.contains((0.0, 0.99)) and not d.contains((0.8, 0.8))
        assert Torus().contains((0.3, 0.999)) and Plane().contains((1e9, -3))

    def test_box_exit(self):
        p, f = boundary_exit(Box((0, 0), (1, 1)), (0.5, 0.5), (1.5, 0.5))
        assert np.allclose(p, [1.0, 0.5]) and f == pytest.approx(0.5)

    def test_disk_exit(self):
        p, f = boundary_exit(Disk((0, 0), 1.0), (0.0, 0.0), (2.0, 0.0))
        assert np.allclose(p, [1.0, 0.0]) and f == pytest.approx(0.5)

    def test_first_crossed_face(self):
        # x-face at fraction 0.5, y-face at fraction 1/3: the y-face wins
        p, f = boundary_exit(Box((0, 0), (1, 1)), (0.9, 0.9), (1.1, 1.2))
        assert f == pytest.approx(1 / 3)
        assert np.allclose(p, [0.9 + 0.2 / 3, 1.0])

    def test_degenerate_segment(self):
        with pytest.raises(ValueError):
            boundary_exit(Box(), (0.5, 0.5), (0.5, 0.5))

    def test_inside_endpoint_rejected(self):
        with pytest.raises(ValueError):
            boundary_exit(Box(), (0.5, 0.5), (0.6, 0.5))

    @given(
        st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99)),
        st.floats(0, 2 * math.pi),
        st.floats(0.05, 3.0),
        st.sampled_from(["box", "disk"]),
    )
    @settings(max_examples=300, deadline=None)
    def test_exit_point_on_boundary(self, a, angle, length, kind):
        dom = Box((0, 0), (1, 1)) if kind == "box" else Disk((0.5, 0.5), 0.5)
        a = np.array(a)
        if not dom.contains(a):
            return
        b = a + length * np.array([math.cos(angle), math.sin(angle)])
        if dom.contains(b):
            return
        p, f = boundary_exit(dom, a, b)
        assert 0.0 <= f <= 1.0
        assert abs(dom.distance_to_boundary(p)) <= 1e-9
        assert np.allclose(p, a + f * (b - a), atol=1e-9)
        # membership flips across the exit point
        d = (b - a) / np.linalg.norm(b - a)
        assert dom.contains(p - 1e-9 * d) or dom.distance_to_boundary(p - 1e-9 * d) > -1e-12
        assert not dom.contains(p + 1e-9 * d)
