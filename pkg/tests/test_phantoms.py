import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invmed.errors import DegenerateInputError, SupportViolationError
from invmed.grid import RealField, unit_grid
from invmed.phantoms import (
    GEOMETRIC_KINDS,
    GeometricPhantom,
    geometric_preset,
    make_geometric,
    normalize_max,
    sample_gaussian_mixture,
    support_window,
    two_gauss_raw,
    two_gauss_test,
)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_mixture_parameter_ranges(seed):
    spec, q = sample_gaussian_mixture(unit_grid(17), seed)
    assert 1 <= spec.eta <= 6
    assert all(len(p) == spec.eta for p in (spec.a, spec.b, spec.c, spec.d, spec.lam))
    assert all(100 <= v <= 200 for v in spec.a + spec.c)
    assert all(0.2 <= v <= 0.8 for v in spec.b + spec.d)
    assert all(-1 <= v <= 1 for v in spec.lam)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_mixture_vanishes_outside_support(seed):
    grid = unit_grid(65)
    _, q = sample_gaussian_mixture(grid, seed)
    X, Y = grid.mesh()
    outside = (X < 0.1) | (X > 0.9) | (Y < 0.1) | (Y > 0.9)
    assert np.all(q.values[outside] == 0.0)


def test_mixture_is_deterministic():
    a = sample_gaussian_mixture(unit_grid(33), 42)[1].values
    b = sample_gaussian_mixture(unit_grid(33), 42)[1].values
    c = sample_gaussian_mixture(unit_grid(33), 43)[1].values
    assert a.tobytes() == b.tobytes() and a.tobytes() != c.tobytes()


def test_untapered_mixture_matches_formula():
    grid = unit_grid(17)
    spec, q = sample_gaussian_mixture(grid, 5, taper=False)
    x, y = grid.x[6], grid.y[9]
    ref = sum(l * math.exp(-a * (x - b) ** 2 - c * (y - d) ** 2)
              for a, b, c, d, l in zip(spec.a, spec.b, spec.c, spec.d, spec.lam))
    assert q.values[9, 6] == pytest.approx(ref, rel=1e-14)


def test_support_window_profile():
    assert support_window(0.5, 0.5) == 1.0
    assert support_window(0.05, 0.5) == 0.0
    assert support_window(0.15, 0.5) == pytest.approx(0.5)
    assert support_window(0.85, 0.85) == pytest.approx(0.25)


def test_two_gauss():
    assert two_gauss_raw(0.3, 0.6) == pytest.approx(1 - 0.7 * math.exp(-10), abs=1e-15)
    assert two_gauss_raw(0.3, 0.6) == pytest.approx(0.9999682, abs=1e-7)
    grid = unit_grid(129)
    q = two_gauss_test(grid, 0.1)
    assert np.max(np.abs(q.values)) == pytest.approx(0.1, rel=1e-15)
    assert q.values.min() < 0 < q.values.max()


@given(st.floats(1e-3, 10.0))
@settings(max_examples=30, deadline=None)
def test_normalize_max(target):
    q = two_gauss_test(unit_grid(17), 1.0)
    assert np.max(np.abs(normalize_max(q, target).values)) == pytest.approx(target, rel=1e-14)


def test_normalize_zero_field():
    with pytest.raises(DegenerateInputError):
        normalize_max(RealField.zeros(unit_grid(5)), 1.0)


@pytest.mark.parametrize("kind", GEOMETRIC_KINDS)
def test_geometric_presets(kind):
    grid = unit_grid(129)
    q = make_geometric(geometric_preset(kind, 0.5), grid)
    assert q.values.max() == pytest.approx(0.5)
    assert q.values.min() == 0.0
    X, Y = grid.mesh()
    assert np.all(q.values[(X < 0.15) | (X > 0.85) | (Y < 0.15) | (Y > 0.85)] == 0)


def test_disc_area():
    grid = unit_grid(513)
    q = make_geometric(GeometricPhantom(discs=((0.5, 0.5, 0.2),)), grid)
    area = np.sum(q.values > 0) * grid.h ** 2
    assert area == pytest.approx(math.pi * 0.04, rel=1e-2)


def test_overlaps_add_up():
    p = GeometricPhantom(rects=((0.2, 0.2, 0.6, 0.6), (0.4, 0.4, 0.8, 0.8)), magnitude=1.0)
    q = make_geometric(p, unit_grid(101))
    assert q.values[50, 50] == 1.0 and q.values[25, 25] == 0.5


def test_shape_outside_margin():
    with pytest.raises(SupportViolationError):
        make_geometric(GeometricPhantom(discs=((0.1, 0.5, 0.05),)), unit_grid(33))
    with pytest.raises(ValueError):
        geometric_preset("mnist", 1.0)


def test_two_gauss_is_the_exact_formula_without_taper():
    # the reference target keeps its tails; only mixtures and shapes are compactly supported
    grid = unit_grid(65)
    X, Y = grid.mesh()
    q = two_gauss_test(grid, 1.0)
    np.testing.assert_allclose(q.values, two_gauss_raw(X, Y) / np.abs(two_gauss_raw(X, Y)).max(), rtol=1e-14, atol=1e-16)


def test_mixture_widths_over_many_draws():
    from invmed.phantoms import _draw_mixture

    rng = np.random.default_rng(0)
    a = np.concatenate([_draw_mixture(rng).a for _ in range(1000)])
    assert 100 <= a.min() and a.max() <= 200
    assert a.min() < 101 and a.max() > 199


def test_single_centred_gaussian_peak():
    from invmed.phantoms import GaussianMixtureSpec

    spec = GaussianMixtureSpec(1, (100.0,), (0.5,), (100.0,), (0.5,), (1.0,))
    X, Y = unit_grid(33).mesh()
    v = spec.evaluate(X, Y)
    assert np.unravel_index(np.argmax(v), v.shape) == (16, 16) and v.max() == 1.0


def test_normalize_idempotent_and_argmax_invariant():
    q = sample_gaussian_mixture(unit_grid(33), 3)[1]
    a = normalize_max(q, 0.3)
    b = normalize_max(a, 0.3)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-15, atol=0)
    assert np.argmax(np.abs(a.values)) == np.argmax(np.abs(q.values))
    c = normalize_max(q, float(np.max(np.abs(q.values))))
    np.testing.assert_allclose(c.values, q.values, rtol=1e-15, atol=0)


def test_single_disc_and_empty_phantom():
    grid = unit_grid(101)
    q = make_geometric(GeometricPhantom(discs=((0.5, 0.5, 0.2),), magnitude=0.6), grid)
    assert q.values[50, 50] == 0.6 and q.values[50, 80] == 0.0
    assert set(np.unique(q.values)) == {0.0, 0.6}
    with pytest.raises(DegenerateInputError):
        make_geometric(GeometricPhantom(), grid)
