import math
from dataclasses import replace

import numpy as np
import pytest

from qlink.montecarlo import (
    ChannelSimConfig,
    EventStream,
    MCConfig,
    compare_with_analytic,
    count_coincidences,
    dump_time_tags,
    expected_rates,
    run_channel_pair,
    simulate_channel_pair,
    simulate_plan,
)


def stream(times, bits=None, det=0):
    t = np.asarray(times, dtype=np.float64)
    b = np.zeros(t.shape, dtype=np.uint8) if bits is None else np.asarray(bits, dtype=np.uint8)
    return EventStream(det, t, b, np.zeros(t.shape, dtype=np.uint8))


BASE = ChannelSimConfig(
    pair_flux=1.5e6,
    survival_a=0.24,
    survival_b=0.24,
    jitter_sigma_a_ns=0.4,
    jitter_sigma_b_ns=0.4,
    dead_time_a_ns=0.0,
    dead_time_b_ns=0.0,
    dark_rate_a_cps=100.0,
    dark_rate_b_cps=100.0,
    v0=0.99,
    window_ns=3.0,
)


def test_counting_by_hand():
    a = stream([0.0, 10.0, 20.0])
    b = stream([0.3, 15.0], det=1)
    assert count_coincidences(a, b, 1.0) == (1, 0)


def test_each_event_used_once():
    a = stream([0.0, 0.2])
    b = stream([0.1], det=1)
    matches, _ = count_coincidences(a, b, 1.0)
    assert matches == 1


def test_nearest_partner_wins():
    a = stream([10.0], bits=[0])
    b = stream([9.7, 10.1], bits=[1, 0], det=1)
    # 10.1 is nearer, so the polarization bits agree
    assert count_coincidences(a, b, 1.0) == (1, 0)


def test_tie_goes_to_the_earlier_partner():
    a = stream([10.0], bits=[0])
    b = stream([9.5, 10.5], bits=[0, 1], det=1)
    assert count_coincidences(a, b, 1.0) == (1, 0)


def test_window_edge_is_inclusive():
    a = stream([10.0])
    b = stream([10.5], det=1)
    assert count_coincidences(a, b, 1.0)[0] == 1
    assert count_coincidences(a, b, 0.999)[0] == 0


def test_mismatched_bits_are_counted():
    a = stream([0.0, 10.0], bits=[0, 1])
    b = stream([0.1, 10.1], bits=[1, 1], det=1)
    assert count_coincidences(a, b, 1.0) == (2, 1)


def test_empty_streams():
    assert count_coincidences(stream([]), stream([], det=1), 1.0) == (0, 0)


def test_unsorted_input_is_rejected():
    with pytest.raises(ValueError, match="not sorted"):
        count_coincidences(stream([5.0, 1.0]), stream([2.0], det=1), 1.0)


def test_offset_must_clear_the_window():
    a = stream([0.0, 500.0])
    b = stream([0.0, 500.0], det=1)
    with pytest.raises(ValueError, match="offset"):
        count_coincidences(a, b, 1.0, offset_ns=50.0)
    # far enough away the shifted streams no longer line up
    assert count_coincidences(a, b, 1.0, offset_ns=250.0)[0] == 0


def test_simulation_is_deterministic():
    mc = MCConfig(duration_s=0.05, seed=404)
    assert run_channel_pair(BASE, mc) == run_channel_pair(BASE, mc)
    a1, b1 = simulate_channel_pair(BASE, mc, 3)
    a2, b2 = simulate_channel_pair(BASE, mc, 3)
    assert np.array_equal(a1.times_ns, a2.times_ns)
    assert np.array_equal(b1.pol_bits, b2.pol_bits)


def test_channels_draw_from_distinct_substreams():
    mc = MCConfig(duration_s=0.02, seed=11)
    a1, _ = simulate_channel_pair(BASE, mc, 1)
    a2, _ = simulate_channel_pair(BASE, mc, 2)
    assert a1.times_ns.shape != a2.times_ns.shape or not np.array_equal(a1.times_ns, a2.times_ns)


def test_streams_are_sorted_and_inside_the_run():
    mc = MCConfig(duration_s=0.01, seed=5)
    for s in simulate_channel_pair(BASE, mc):
        assert np.all(np.diff(s.times_ns) >= 0)
        assert s.times_ns[0] >= 0.0
        assert s.times_ns[-1] <= 0.01 * 1e9


def test_dead_time_enforces_minimum_gap():
    cfg = ChannelSimConfig(
        pair_flux=8e5, survival_a=0.4, survival_b=0.4,
        jitter_sigma_a_ns=0.4, jitter_sigma_b_ns=0.4,
        dead_time_a_ns=25.0, dead_time_b_ns=25.0,
        dark_rate_a_cps=100.0, dark_rate_b_cps=100.0,
        v0=0.99, window_ns=3.0,
    )
    a, b = simulate_channel_pair(cfg, MCConfig(duration_s=0.02, seed=21))
    for s in (a, b):
        assert len(s) > 100
        assert np.diff(s.times_ns).min() >= 25.0


def test_dead_time_only_removes_events():
    lively = simulate_channel_pair(BASE, MCConfig(duration_s=0.02, seed=9))
    dead_cfg = replace(BASE, dead_time_a_ns=25.0, dead_time_b_ns=25.0)
    deadened = simulate_channel_pair(dead_cfg, MCConfig(duration_s=0.02, seed=9))
    assert len(deadened[0]) < len(lively[0])
    assert set(deadened[0].times_ns).issubset(set(lively[0].times_ns))


def test_counts_track_the_rate_model():
    """One fixed seed; a generous 5-sigma envelope guards against drift
    without making the test flaky."""
    mc = MCConfig(duration_s=0.2, seed=2024)
    report = run_channel_pair(BASE, mc)
    for row in compare_with_analytic(BASE, report):
        assert abs(row.z) < 5.0, f"{row.statistic}: z={row.z:.2f}"


def test_dark_only_run():
    cfg = ChannelSimConfig(
        pair_flux=0.0, survival_a=0.5, survival_b=0.5,
        jitter_sigma_a_ns=0.4, jitter_sigma_b_ns=0.4,
        dead_time_a_ns=0.0, dead_time_b_ns=0.0,
        dark_rate_a_cps=5000.0, dark_rate_b_cps=5000.0,
        v0=0.99, window_ns=3.0,
    )
    report = run_channel_pair(cfg, MCConfig(duration_s=1.0, seed=77))
    exp = expected_rates(cfg)
    assert exp["trues"] == 0.0
    assert report.singles_a == pytest.approx(5000.0, abs=5 * math.sqrt(5000.0))
    assert report.coincidences <= 5


def test_plan_results_do_not_depend_on_worker_count(monkeypatch):
    configs = {k: BASE for k in (1, 2, 3)}
    mc = MCConfig(duration_s=0.01, seed=31)
    monkeypatch.setenv("QLINK_THREADS", "1")
    serial = simulate_plan(configs, mc)
    monkeypatch.setenv("QLINK_THREADS", "3")
    threaded = simulate_plan(configs, mc)
    assert serial == threaded
    assert len({r.coincidences for r in serial.values()}) > 1


def test_bad_thread_budget(monkeypatch):
    monkeypatch.setenv("QLINK_THREADS", "lots")
    with pytest.raises(ValueError, match="QLINK_THREADS"):
        simulate_plan({1: BASE, 2: BASE}, MCConfig(duration_s=0.001, seed=1))


def test_time_tag_dump(tmp_path):
    mc = MCConfig(duration_s=0.002, seed=8)
    streams = simulate_channel_pair(BASE, mc)
    path = tmp_path / "tags.txt"
    dump_time_tags(str(path), BASE, mc, streams)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# qlink-timetags v1 config=")
    assert f"config={BASE.digest()}" in lines[0]
    body = [line.split() for line in lines[1:]]
    assert len(body) == len(streams[0]) + len(streams[1])
    times = [float(row[0]) for row in body]
    assert times == sorted(times)
    assert {row[1] for row in body} == {"0", "1"}
    assert {row[2] for row in body} <= {"0", "1"}
    assert {row[3] for row in body} <= {"pair", "dark"}


def test_config_validation():
    with pytest.raises(ValueError):
        ChannelSimConfig(
            pair_flux=-1.0, survival_a=0.2, survival_b=0.2,
            jitter_sigma_a_ns=0.4, jitter_sigma_b_ns=0.4,
            dead_time_a_ns=0.0, dead_time_b_ns=0.0,
            dark_rate_a_cps=0.0, dark_rate_b_cps=0.0,
            v0=0.99, window_ns=3.0,
        )
    with pytest.raises(ValueError):
        MCConfig(duration_s=0.0, seed=1)
