import math

import pytest
from hypothesis import given, strategies as st

from qlink.coincidence import (
    ArmEfficiency,
    DetectorSpec,
    accidental_rate,
    aggregate_pair_rates,
    arm_total,
    build_rate_report,
    car,
    jitter_sigma_from_fwhm,
    pair_statistics,
    qber,
    singles_rate,
    true_coincidence_rate,
    visibility_measured,
    window_acceptance,
)

LAB_ARM = ArmEfficiency(optics=0.96, fiber_coupling=0.5, detector=0.5)
SPAD = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=100.0)


def test_lab_arm_transmission():
    assert arm_total(LAB_ARM) == pytest.approx(0.24, rel=1e-15)


def test_link_attenuation_applies_in_db():
    arm = ArmEfficiency(detector=1.0, link_attenuation_db=3.0)
    assert arm_total(arm) == pytest.approx(0.501187233627272, rel=1e-12)


def test_window_acceptance_known_values():
    assert window_acceptance(1.0, 0.4, 0.4) == pytest.approx(0.62324088218841797, rel=1e-12)
    assert window_acceptance(3.0, 0.4, 0.4) == pytest.approx(0.99199005767011997, rel=1e-12)
    assert window_acceptance(1.0, 0.0, 0.0) == 1.0


@given(
    window=st.floats(min_value=0.01, max_value=10.0),
    sa=st.floats(min_value=0.0, max_value=1.0),
    sb=st.floats(min_value=0.0, max_value=1.0),
)
def test_window_acceptance_is_a_probability(window, sa, sb):
    acc = window_acceptance(window, sa, sb)
    assert 0.0 < acc <= 1.0
    wider = window_acceptance(2.0 * window, sa, sb)
    assert wider >= acc


def test_jitter_fwhm_conversion():
    assert jitter_sigma_from_fwhm(0.94192801801237975) == pytest.approx(0.4, rel=1e-12)


def test_singles_rate_without_dead_time():
    assert singles_rate(1e6, 0.24, SPAD) == pytest.approx(240100.0, rel=1e-15)


def test_singles_rate_with_dead_time():
    det = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=25.0, dark_rate_cps=100.0)
    assert singles_rate(1e6, 0.24, det) == pytest.approx(238667.3989378754, rel=1e-12)


def test_accidentals_scale_with_window():
    assert accidental_rate(1e5, 1e5, 1.0) == pytest.approx(10.0, rel=1e-15)
    assert accidental_rate(1e5, 1e5, 3.0) == pytest.approx(30.0, rel=1e-15)


def test_true_rate_chain():
    acc = window_acceptance(3.0, 0.4, 0.4)
    assert true_coincidence_rate(9.55e7, 0.24, 0.24, acc) == pytest.approx(5456738.9092317959, rel=1e-12)


def test_car_edge_cases():
    assert car(100.0, 10.0) == 10.0
    assert car(5.0, 0.0) == math.inf
    with pytest.raises(ValueError):
        car(0.0, 0.0)


@given(
    v0=st.floats(min_value=0.5, max_value=1.0),
    trues=st.floats(min_value=1e-3, max_value=1e9),
    acc=st.floats(min_value=0.0, max_value=1e9),
)
def test_qber_is_half_the_visibility_deficit(v0, trues, acc):
    v = visibility_measured(v0, trues, acc)
    assert qber(v0, trues, acc) == pytest.approx((1.0 - v) / 2.0, abs=1e-12)


def test_qber_limits():
    # no accidentals: intrinsic error only
    assert qber(0.99, 1e6, 0.0) == pytest.approx(0.005, rel=1e-12)
    # accidentals swamp the signal: error tends to 1/2
    assert qber(0.99, 1.0, 1e9) == pytest.approx(0.5, rel=1e-6)


def test_pair_statistics_lab_point():
    rates = pair_statistics(9.55e7, 1.0, LAB_ARM, LAB_ARM, SPAD, SPAD, 3.0, 0.99)
    assert rates.singles_a == pytest.approx(9.55e7 * 0.24 + 100.0, rel=1e-12)
    assert rates.trues == pytest.approx(5456738.9092317959, rel=1e-12)
    assert rates.accidentals == pytest.approx(rates.singles_a * rates.singles_b * 3e-9, rel=1e-12)
    assert rates.car == pytest.approx(rates.trues / rates.accidentals, rel=1e-12)
    assert rates.qber == pytest.approx((1.0 - rates.visibility) / 2.0, abs=1e-12)


def test_dead_time_suppresses_trues_via_livetime():
    det = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=25.0, dark_rate_cps=100.0)
    rates = pair_statistics(1e6, 1.0, LAB_ARM, LAB_ARM, det, det, 3.0, 0.99)
    assert rates.trues == pytest.approx(56458.805154812787, rel=1e-12)
    assert rates.accidentals == pytest.approx(170.88638194731291, rel=1e-12)


def test_zero_flux_zero_darks_yields_undefined_ratios():
    quiet = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=0.0)
    rates = pair_statistics(0.0, 1.0, LAB_ARM, LAB_ARM, quiet, quiet, 3.0, 0.99)
    assert rates.trues == 0.0
    assert math.isnan(rates.car)
    assert math.isnan(rates.qber)


@given(scale=st.floats(min_value=1.5, max_value=50.0))
def test_car_falls_inversely_with_flux(scale):
    """Trues grow linearly but accidentals quadratically, so CAR ~ 1/flux
    once dark counts are negligible."""
    quiet = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=0.0)
    low = pair_statistics(1e6, 1.0, LAB_ARM, LAB_ARM, quiet, quiet, 3.0, 0.99)
    high = pair_statistics(scale * 1e6, 1.0, LAB_ARM, LAB_ARM, quiet, quiet, 3.0, 0.99)
    assert high.car == pytest.approx(low.car / scale, rel=1e-9)


def test_aggregate_sums_rates_and_recomputes_ratios():
    quiet = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=0.0)
    one = pair_statistics(1e6, 1.0, LAB_ARM, LAB_ARM, quiet, quiet, 3.0, 0.99)
    total = aggregate_pair_rates((one, one), 0.99)
    assert total.trues == pytest.approx(2 * one.trues, rel=1e-12)
    assert total.accidentals == pytest.approx(2 * one.accidentals, rel=1e-12)
    assert total.car == pytest.approx(one.car, rel=1e-12)


def test_report_shapes():
    report = build_rate_report([1e6, 2e6], 1.0, LAB_ARM, LAB_ARM, SPAD, SPAD, 3.0, 0.99)
    assert len(report.pairs) == 2
    assert report.totals.trues == pytest.approx(sum(p.trues for p in report.pairs), rel=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        DetectorSpec(efficiency=1.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=0.0)
    with pytest.raises(ValueError):
        DetectorSpec(efficiency=0.5, jitter_sigma_ns=-0.1, dead_time_ns=0.0, dark_rate_cps=0.0)
    with pytest.raises(ValueError):
        ArmEfficiency(optics=1.2)
    with pytest.raises(ValueError):
        ArmEfficiency(link_attenuation_db=-3.0)
    with pytest.raises(ValueError):
        window_acceptance(0.0, 0.4, 0.4)
    with pytest.raises(ValueError):
        qber(0.99, 0.0, 0.0)
