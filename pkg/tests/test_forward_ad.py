import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseobs.field_model import ConstantDiffusion, DiagonalDiffusion, FourierVelocityField, ScalarField
from sparseobs.forward_ad import AdProblemSpec, observe_ad, observe_ad_single, particle_values

from conftest import two_mode_field

COS_X = ScalarField.cosine_series([(1.0, 1.0, 0.0, 0.0)])
THREE_MODE = ScalarField.cosine_series([(1.0, 1.0, 0.0, 0.0), (0.5, 0.0, 1.0, 0.7), (0.25, 1.0, -1.0, 1.3)])


def spec_for(theta0=THREE_MODE, kappa=0.05, obs=((0.2, (0.1, 0.3)), (0.4, (0.6, 0.8))), **kw):
    kw.setdefault("n_particles", 4000)
    kw.setdefault("dt", 0.01)
    return AdProblemSpec(two_mode_field(), ConstantDiffusion(kappa), theta0, obs, **kw)


def test_no_motion_is_exact():
    spec = AdProblemSpec(FourierVelocityField.zero(), ConstantDiffusion(0.0), THREE_MODE,
                         [(0.5, (0.3, 0.4))], n_particles=100)
    e = observe_ad(spec)[0]
    assert e.mean == THREE_MODE((0.3, 0.4)) and e.std_error == 0.0


def test_heat_solution_moderate_particles():
    spec = AdProblemSpec(FourierVelocityField.zero(), ConstantDiffusion(0.01), COS_X, [(0.5, (0.0, 0.0))],
                         dt=0.01, n_particles=20_000)
    e = observe_ad(spec, seed=4)[0]
    assert abs(e.mean - math.exp(-4 * math.pi**2 * 0.005)) <= 3 * e.std_error + 0.01


def test_pure_advection_follows_characteristic():
    # constant flow (1, 0.5), no diffusion: theta(t, x) = theta0(x - v t) on the torus
    spec = AdProblemSpec(FourierVelocityField.constant((1.0, 0.5)), ConstantDiffusion(0.0), THREE_MODE,
                         [(0.3, (0.2, 0.9))], dt=0.01, n_particles=2)
    e = observe_ad(spec)[0]
    assert e.mean == pytest.approx(THREE_MODE((0.2 - 0.3, 0.9 - 0.15)), abs=1e-12)


def test_default_step():
    assert spec_for(dt=None).step == pytest.approx(0.2 / 200)


@pytest.mark.parametrize(
    "obs", [[(0.0, (0.1, 0.1))], [(-1.0, (0.1, 0.1))], [(0.1, (1.0, 0.1))], [(0.1, (0.1, -0.2))], []]
)
def test_invalid_observations(obs):
    with pytest.raises(ValueError):
        spec_for(obs=obs)


def test_single_matches_full_and_is_deterministic():
    spec = spec_for()
    full = observe_ad(spec, seed=3)
    for j in range(spec.n_obs):
        a = observe_ad_single(spec, j, seed=3)
        assert a == full[j] == observe_ad_single(spec, j, seed=3)
    with pytest.raises(IndexError):
        observe_ad_single(spec, 2)
    one = spec_for(obs=[(0.2, (0.1, 0.3))])
    assert observe_ad_single(one, 0, seed=1) == observe_ad(one, seed=1)[0]


def test_observation_independence_on_append():
    base = spec_for()
    more = spec_for(obs=base.observations + ((0.7, (0.5, 0.5)),))
    a, b = observe_ad(base, seed=8), observe_ad(more, seed=8)
    assert a == b[:2]


def test_seed_changes_result():
    spec = spec_for()
    assert observe_ad(spec, seed=1)[0].mean != observe_ad(spec, seed=2)[0].mean


@given(st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=20, deadline=None)
def test_linearity_in_initial_condition(a, b):
    base = spec_for(n_particles=500)
    scaled = spec_for(theta0=THREE_MODE.scaled(a, b), n_particles=500)
    for e0, e1 in zip(observe_ad(base, seed=6), observe_ad(scaled, seed=6)):
        assert e1.mean == pytest.approx(a * e0.mean + b, rel=1e-12, abs=1e-12 * (1 + abs(a) + abs(b)))


def test_particle_values_bounded():
    v = particle_values(spec_for(), 1, seed=2)
    lo, hi = -1.75, 1.75
    assert v.shape == (4000,) and np.all((v >= lo) & (v <= hi))


def test_milstein_with_diagonal_diffusion_runs():
    sig = DiagonalDiffusion(ScalarField.cosine_series([(0.1, 1.0, 0.0, 0.0)]).scaled(1.0, 0.3),
                            ScalarField.constant(0.2))
    spec = AdProblemSpec(two_mode_field(), sig, THREE_MODE, [(0.2, (0.4, 0.4))], dt=0.01,
                         n_particles=2000, scheme="milstein")
    em = AdProblemSpec(two_mode_field(), sig, THREE_MODE, [(0.2, (0.4, 0.4))], dt=0.01, n_particles=2000)
    a, b = observe_ad(spec, seed=1)[0], observe_ad(em, seed=1)[0]
    assert a.mean != b.mean
    assert abs(a.mean - b.mean) < 3 * a.std_error + 0.02
