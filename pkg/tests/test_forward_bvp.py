import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseobs.field_model import Box, ConstantDiffusion, Disk, FourierVelocityField, ScalarField
from sparseobs.forward_bvp import BvpProblemSpec, observe_bvp

from conftest import cosine_boundary, laminar_bvp_fields, two_mode_field


def manufactured(**kw):
    return BvpProblemSpec(FourierVelocityField.constant((1.0, 1.0)), ConstantDiffusion(kw.pop("kappa", 0.1)),
                          ScalarField.constant(-2.0), ScalarField.affine(0.0, (1.0, 1.0)), Box(),
                          kw.pop("obs", [(0.5, 0.5)]), **kw)


def test_constant_boundary_is_exact():
    spec = BvpProblemSpec(two_mode_field(), ConstantDiffusion(0.1), None, ScalarField.constant(0.7), Box(),
                          [(0.3, 0.6), (0.5, 0.5)], n_particles=500, dt=1e-3)
    for e in observe_bvp(spec):
        assert e.mean == 0.7 and e.std_error == 0.0 and e.n_failed == 0


def test_manufactured_solution():
    e = observe_bvp(manufactured(dt=2.5e-4, n_particles=20_000), seed=2)[0]
    assert abs(e.mean - 1.0) <= 3 * e.std_error + 0.01
    assert e.mean_exit_time > 0


def test_manufactured_on_disk():
    spec = BvpProblemSpec(FourierVelocityField.constant((1.0, 1.0)), ConstantDiffusion(0.2),
                          ScalarField.constant(-2.0), ScalarField.affine(0.0, (1.0, 1.0)),
                          Disk((0.5, 0.5), 0.5), [(0.4, 0.6)], dt=1e-3, n_particles=20_000, exit_test="shifted")
    e = observe_bvp(spec, seed=5)[0]
    assert abs(e.mean - 1.0) <= 3 * e.std_error + 0.01


def test_boundary_consistency():
    spec = BvpProblemSpec(**laminar_bvp_fields(), forcing=None, observations=[(0.001, 0.5), (0.5, 0.999)],
                          dt=1e-4, n_particles=4000)
    g = cosine_boundary()
    for e, nearest in zip(observe_bvp(spec, seed=3), [(0.0, 0.5), (0.5, 1.0)]):
        assert abs(e.mean - g(nearest)) <= 3 * e.std_error + 0.02


@given(st.floats(-4, 4).filter(lambda a: abs(a) > 1e-3))
@settings(max_examples=10, deadline=None)
def test_linearity_in_data(a):
    f = ScalarField.gaussian_bumps([1.0, -2.0], [(0.3, 0.3), (0.7, 0.6)])
    fields = laminar_bvp_fields()
    g = fields.pop("boundary")
    base = BvpProblemSpec(**fields, boundary=g, forcing=f, observations=[(0.4, 0.5)], dt=1e-3, n_particles=500)
    scaled = BvpProblemSpec(**fields, boundary=g.scaled(a), forcing=f.scaled(a), observations=[(0.4, 0.5)],
                            dt=1e-3, n_particles=500)
    e0, e1 = observe_bvp(base, seed=1)[0], observe_bvp(scaled, seed=1)[0]
    assert e1.mean == pytest.approx(a * e0.mean, rel=1e-12)


def test_exit_certainty():
    spec = BvpProblemSpec(**laminar_bvp_fields(), forcing=None, observations=[(0.5, 0.5)], n_particles=20_000)
    e = observe_bvp(spec, seed=0)[0]
    assert e.n_failed / e.n_particles < 1e-6


def test_default_step_formula():
    spec = BvpProblemSpec(**laminar_bvp_fields(), forcing=None, observations=[(0.5, 0.5)])
    diam = np.sqrt(2)
    assert spec.step == pytest.approx(1e-3 * diam**2 / (2 * 0.282 + np.sqrt(2) * diam))


@pytest.mark.parametrize(
    "kw", [dict(observations=[(1.0, 0.5)]), dict(observations=[]), dict(n_particles=1), dict(dt=0.0),
           dict(exit_test="bridge")]
)
def test_invalid_specs(kw):
    base = dict(**laminar_bvp_fields(), forcing=None, observations=[(0.5, 0.5)])
    base.update(kw)
    with pytest.raises(ValueError):
        BvpProblemSpec(**base)


def test_failures_reported():
    spec = BvpProblemSpec(FourierVelocityField.zero(), ConstantDiffusion(0.001), None, ScalarField.constant(1.0),
                          Box(), [(0.5, 0.5)], dt=1e-3, n_particles=100, max_steps=5)
    with pytest.raises(RuntimeError):
        observe_bvp(spec)


def test_shifted_test_reduces_bias():
    # mean exit time from the centre of the unit disk under kappa Lap is 1 / (4 kappa)
    out = {}
    for test in ("segment", "shifted"):
        spec = BvpProblemSpec(FourierVelocityField.zero(), ConstantDiffusion(0.5), ScalarField.constant(1.0),
                              ScalarField.constant(0.0), Disk(), [(0.0, 0.0)], dt=4e-3, n_particles=40_000,
                              exit_test=test)
        out[test] = abs(-observe_bvp(spec, seed=9)[0].mean - 0.5)
    assert out["shifted"] < out["segment"] / 3
