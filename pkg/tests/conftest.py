import numpy as np
import pytest

from sparseobs.field_model import Box, ConstantDiffusion, FourierVelocityField, ScalarField


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def cosine_boundary():
    """1/2 [cos(pi x / 2) + cos(pi y / 2)] as a cosine series."""
    return ScalarField.cosine_series([(0.5, 0.25, 0.0, 0.0), (0.5, 0.0, 0.25, 0.0)])


def laminar_bvp_fields(kappa=0.282):
    return dict(
        velocity=FourierVelocityField.constant((1.0, 1.0)),
        diffusion=ConstantDiffusion(kappa),
        boundary=cosine_boundary(),
        domain=Box((0.0, 0.0), (1.0, 1.0)),
    )


def two_mode_field():
    """Real divergence-free field with modes (1, 0) and (0, 1)."""
    return FourierVelocityField(
        np.array([[1, 0], [0, 1]]), np.array([0.3 + 0.2j, -0.25 + 0.1j]), max_wavenumber=1
    )


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Log one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
