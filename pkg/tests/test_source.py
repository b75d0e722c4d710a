import pytest
from hypothesis import given, strategies as st

from qlink.core import SpectralShape
from qlink.source import SourceSpec, generated_pair_rate, pair_rate_in_channel_pair


def test_default_source():
    spec = SourceSpec()
    assert spec.brightness_pairs_per_s_per_mw == 9.55e7
    assert spec.degenerate_wavelength_nm == pytest.approx(810.44)
    assert spec.spectrum.kind == "gaussian"
    assert spec.spectrum.fwhm_nm == 11.0
    assert spec.spectrum.center_nm == pytest.approx(810.44)


def test_generated_rate_at_one_mw():
    assert generated_pair_rate(SourceSpec(pump_power_mw=1.0)) == 9.55e7


@given(power=st.floats(min_value=1e-3, max_value=1e3))
def test_rate_scales_linearly_with_pump(power):
    one = generated_pair_rate(SourceSpec(pump_power_mw=1.0))
    assert generated_pair_rate(SourceSpec(pump_power_mw=power)) == pytest.approx(power * one, rel=1e-12)


def test_capture_fraction_bounds():
    spec = SourceSpec()
    assert pair_rate_in_channel_pair(spec, 0.0) == 0.0
    assert pair_rate_in_channel_pair(spec, 1.0) == generated_pair_rate(spec)
    with pytest.raises(ValueError):
        pair_rate_in_channel_pair(spec, 1.5)
    with pytest.raises(ValueError):
        pair_rate_in_channel_pair(spec, -0.1)


def test_spectrum_must_sit_at_degenerate_wavelength():
    off_center = SpectralShape("gaussian", 812.0, 11.0)
    with pytest.raises(ValueError):
        SourceSpec(spectrum=off_center)
    # within tolerance is fine
    SourceSpec(spectrum=SpectralShape("gaussian", 810.39, 11.0))


def test_source_validation():
    with pytest.raises(ValueError):
        SourceSpec(pump_power_mw=-1.0)
    with pytest.raises(ValueError):
        SourceSpec(brightness_pairs_per_s_per_mw=-1.0)
    with pytest.raises(ValueError):
        SourceSpec(visibility=0.0)
    with pytest.raises(ValueError):
        SourceSpec(visibility=1.2)
