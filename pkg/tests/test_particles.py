import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kinseg.errors import DimensionError, DomainError
from kinseg.particles import (
    DiffusionKind,
    ModelParams,
    ParticleSystem,
    diffusion_array,
    diffusion_value,
    interaction_kernel,
    system_from_image,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("kind", ["d1", "d2", "d3", "d4"])
def test_diffusion_vanishes_at_pure_levels(kind):
    assert diffusion_value(kind, 0.0) == 0.0
    assert diffusion_value(kind, 1.0) == 0.0


@given(unit)
def test_diffusion_closed_forms(c):
    d1 = c * (1 - c)
    assert diffusion_value("d1", c) == pytest.approx(d1, abs=1e-15)
    assert diffusion_value("d2", c) == pytest.approx(4 * d1**2, abs=1e-15)
    d3 = c / 2 if c <= 0.5 else (c / 2) * (1 - c)
    assert diffusion_value("d3", c) == pytest.approx(d3, abs=1e-15)
    assert diffusion_value("d4", c) == pytest.approx(64 * d1**4, abs=1e-15)
    assert diffusion_value("const", c) == 1.0
    for k in DiffusionKind:
        assert diffusion_value(k, c) >= 0.0


def test_diffusion_peaks():
    assert diffusion_value("d1", 0.5) == 0.25
    assert diffusion_value("d2", 0.5) == 0.25
    assert diffusion_value("d4", 0.5) == 0.25
    assert diffusion_value("d3", 0.5) == 0.25


def test_diffusion_domain():
    with pytest.raises(DomainError):
        diffusion_array("d1", [0.5, 1.2])
    with pytest.raises(ValueError):
        DiffusionKind.parse("d9")
    assert DiffusionKind.parse("constant") is DiffusionKind.CONSTANT


def test_model_params_validation():
    p = ModelParams(0.2, 0.1, 0.05)
    assert p.diffusion is DiffusionKind.D1
    assert p.n_steps == 30000
    assert ModelParams(0.2, 0.1, 0.0, epsilon=0.1, horizon=0.25).n_steps == 2
    for bad in (dict(delta1=-1), dict(sigma2=math.nan), dict(epsilon=1.0), dict(epsilon=0.0), dict(horizon=-1)):
        with pytest.raises(DomainError):
            p.replace(**bad)
    assert p.replace(delta1=0.4).delta1 == 0.4


def test_system_from_image_geometry():
    img = np.random.default_rng(0).random((256, 256))
    s = system_from_image(img)
    assert len(s) == 65536
    assert s.spacing == pytest.approx((2 / 255, 2 / 255))
    assert s.positions.min() == -1.0 and s.positions.max() == 1.0
    # row-major: particle k comes from pixel (k // W, k % W), x along columns
    p = s[257]
    assert p.origin == (1, 1)
    assert p.position == pytest.approx((-1 + 2 / 255, -1 + 2 / 255))
    assert p.feature == img[1, 1]


def test_system_rectangular_scaling():
    s = system_from_image(np.zeros((3, 5)))
    assert s.width == 5 and s.height == 3
    assert s.spacing == pytest.approx((0.5, 1.0))


def test_system_rejects_bad_input():
    with pytest.raises(DimensionError):
        system_from_image(np.zeros((1, 4)))
    with pytest.raises(DomainError):
        system_from_image(np.full((3, 3), 1.5))
    with pytest.raises(DimensionError):
        ParticleSystem(np.zeros((1, 2)), [0.5], [(3, 0)], 2, 2)


def test_system_is_read_only():
    s = system_from_image(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        s.positions[0, 0] = 3.0
    t = s.with_positions(s.positions + 1)
    assert t.positions[0, 0] == 0.0 and s.positions[0, 0] == -1.0
    assert t.features is not None and np.array_equal(t.origins, s.origins)


def test_kernel_inclusive_bounds():
    p = ModelParams(0.5, 0.25, 0.0)
    assert interaction_kernel((0, 0), (0.3, 0.4), 0.5, 0.75, p) == 1
    assert interaction_kernel((0, 0), (0.3, 0.41), 0.5, 0.75, p) == 0
    assert interaction_kernel((0, 0), (0.3, 0.4), 0.5, 0.76, p) == 0


@given(st.tuples(unit, unit), st.tuples(unit, unit), unit, unit)
def test_kernel_symmetric(xi, xj, ci, cj):
    p = ModelParams(0.4, 0.3, 0.0)
    assert interaction_kernel(xi, xj, ci, cj, p) == interaction_kernel(xj, xi, cj, ci, p)
