import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.metrics import structural_similarity

from invmed.errors import DegenerateInputError, IncompatibleGridError
from invmed.grid import RealField, unit_grid
from invmed.metrics import metric_report, relative_error, ssim
from invmed.phantoms import two_gauss_test


def test_relative_error():
    g = unit_grid(17)
    q = two_gauss_test(g, 0.5)
    assert relative_error(q, q) == 0.0
    assert relative_error(RealField.zeros(g), q) == pytest.approx(1.0)
    assert relative_error(q.with_values(1.5 * q.values), q) == pytest.approx(0.5)
    with pytest.raises(DegenerateInputError):
        relative_error(q, RealField.zeros(g))
    with pytest.raises(IncompatibleGridError):
        relative_error(q, two_gauss_test(unit_grid(9)))


@given(st.integers(0, 10 ** 6), st.floats(0.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_ssim_matches_reference_implementation(seed, noise):
    g = unit_grid(33)
    truth = two_gauss_test(g, 0.3)
    rng = np.random.default_rng(seed)
    rec = truth.with_values(truth.values + noise * 0.1 * rng.standard_normal(g.shape))
    rng_ = float(truth.values.max() - truth.values.min())
    ref = structural_similarity(rec.values, truth.values, data_range=rng_, gaussian_weights=True,
                                sigma=1.5, use_sample_covariance=False)
    assert ssim(rec, truth) == pytest.approx(ref, abs=1e-12)


def test_ssim_bounds():
    g = unit_grid(33)
    truth = two_gauss_test(g, 0.3)
    assert ssim(truth, truth) == pytest.approx(1.0)
    assert ssim(truth.with_values(-truth.values), truth) < ssim(truth.with_values(0.9 * truth.values), truth) < 1.0
    with pytest.raises(DegenerateInputError):
        ssim(truth, truth.with_values(np.ones(g.shape)))


def test_metric_report():
    g = unit_grid(33)
    truth = two_gauss_test(g, 0.3)
    r = metric_report(truth.with_values(0.9 * truth.values), truth, data_misfit=2.0)
    d = r.to_dict()
    assert set(d) == {"rel_err", "ssim", "data_misfit", "data_range"}
    assert d["rel_err"] == pytest.approx(0.1) and d["data_misfit"] == 2.0


def test_ssim_sign_for_locally_zero_mean_structure():
    # windowed SSIM multiplies a luminance and a structure term; both flip sign under
    # negation, so the product is negative only where local means vanish
    g = unit_grid(65)
    i = np.arange(65)
    f = RealField(g, (-1.0) ** (i[:, None] + i[None, :]))
    assert ssim(f.with_values(-f.values), f) < 0


@given(st.integers(0, 1000), st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_metric_invariances(seed, alpha):
    g = unit_grid(33)
    rng = np.random.default_rng(seed)
    truth = two_gauss_test(g, 0.3)
    rec = truth.with_values(truth.values + 0.05 * rng.standard_normal(g.shape))
    assert relative_error(rec.with_values(alpha * rec.values), truth.with_values(alpha * truth.values)) == \
        pytest.approx(relative_error(rec, truth), rel=1e-12)
    s = ssim(rec, truth, data_range=0.6)
    assert -1 <= s <= 1
    assert ssim(truth, rec, data_range=0.6) == pytest.approx(s, abs=1e-12)
