import math

import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from qlink.core import (
    FWHM_SIGMA_RATIO,
    SpectralShape,
    band_fraction,
    db_to_linear,
    frequency_to_wavelength,
    integrate_band,
    wavelength_to_frequency,
)


def test_wavelength_frequency_conversion():
    assert wavelength_to_frequency(810.0) == pytest.approx(370.11414567901235, rel=1e-14)
    assert frequency_to_wavelength(370.11414567901235) == pytest.approx(810.0, rel=1e-14)


@given(st.floats(min_value=100.0, max_value=5000.0))
def test_conversion_round_trip(wl):
    assert frequency_to_wavelength(wavelength_to_frequency(wl)) == pytest.approx(wl, rel=1e-12)


def test_bad_wavelengths_rejected():
    for bad in (0.0, -5.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            wavelength_to_frequency(bad)


def test_db_to_linear():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(6.0) == pytest.approx(0.501187233627272 ** 2, rel=1e-12)
    assert db_to_linear(63.0) == pytest.approx(5.01187233627272e-7, rel=1e-12)
    with pytest.raises(ValueError):
        db_to_linear(-1.0)


def test_fwhm_sigma_ratio():
    assert FWHM_SIGMA_RATIO == pytest.approx(2.3548200450309494, rel=1e-15)


def test_gaussian_band_at_peak():
    shape = SpectralShape("gaussian", 810.44, 11.0)
    got = integrate_band(shape, 810.44 - 0.0375, 810.44 + 0.0375)
    assert got == pytest.approx(0.006405185375313442, rel=1e-12)


def test_tophat_band_is_linear():
    shape = SpectralShape("tophat", 810.0, 10.0)
    assert integrate_band(shape, 805.0, 815.0) == pytest.approx(1.0)
    assert integrate_band(shape, 805.0, 807.5) == pytest.approx(0.25)
    assert integrate_band(shape, 790.0, 800.0) == 0.0


@pytest.mark.parametrize("kind", ["gaussian", "sinc2", "tophat"])
def test_closed_form_matches_quadrature(kind):
    """The closed-form band integrals against direct numerical quadrature."""
    shape = SpectralShape(kind, 810.44, 11.0)
    for lo, hi in [(805.0, 807.0), (810.0, 810.9), (810.44 - 0.0375, 810.44 + 0.0375), (798.0, 823.0)]:
        expected, err = quad(shape.density, lo, hi, limit=200)
        assert integrate_band(shape, lo, hi) == pytest.approx(expected, abs=max(1e-10, 5 * err))


@pytest.mark.parametrize("kind", ["gaussian", "sinc2"])
def test_sinc2_and_gaussian_half_power(kind):
    shape = SpectralShape(kind, 810.0, 8.0)
    peak = shape.density(810.0)
    assert shape.density(810.0 + 4.0) == pytest.approx(0.5 * peak, rel=1e-9)
    assert shape.density(810.0 - 4.0) == pytest.approx(0.5 * peak, rel=1e-9)


@given(
    kind=st.sampled_from(["gaussian", "sinc2", "tophat"]),
    lo=st.floats(min_value=780.0, max_value=840.0),
    width=st.floats(min_value=1e-3, max_value=30.0),
    split=st.floats(min_value=1e-4, max_value=1.0 - 1e-4),
)
def test_band_additivity(kind, lo, width, split):
    shape = SpectralShape(kind, 810.0, 11.0)
    mid = lo + split * width
    whole = integrate_band(shape, lo, lo + width)
    parts = integrate_band(shape, lo, mid) + integrate_band(shape, mid, lo + width)
    assert parts == pytest.approx(whole, abs=1e-12)
    assert 0.0 <= whole <= 1.0


@given(
    kind=st.sampled_from(["gaussian", "sinc2", "tophat"]),
    center=st.floats(min_value=700.0, max_value=900.0),
    fwhm=st.floats(min_value=0.1, max_value=50.0),
)
def test_full_range_captures_everything(kind, center, fwhm):
    # the sinc2 tails fall off only as 1/x^2, so convergence is much slower
    tol = 1e-3 if kind == "sinc2" else 1e-6
    shape = SpectralShape(kind, center, fwhm)
    assert band_fraction(shape, center - 400 * fwhm, center + 400 * fwhm) == pytest.approx(1.0, abs=tol)


def test_band_fraction_of_zero_total_uses_shape_only():
    shape = SpectralShape("gaussian", 810.0, 11.0, total=0.0)
    assert band_fraction(shape, 809.0, 811.0) > 0.0


def test_band_requires_ordered_edges():
    shape = SpectralShape("gaussian", 810.0, 11.0)
    with pytest.raises(ValueError):
        integrate_band(shape, 811.0, 810.0)


def test_shape_validation():
    with pytest.raises(ValueError):
        SpectralShape("triangle", 810.0, 11.0)
    with pytest.raises(ValueError):
        SpectralShape("gaussian", 810.0, -1.0)
    with pytest.raises(ValueError):
        SpectralShape("gaussian", -810.0, 11.0)
