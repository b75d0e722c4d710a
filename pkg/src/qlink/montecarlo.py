"""Event-level Monte Carlo oracle for one or more conjugate channel pairs.

Time-tag streams are generated per detector (homogeneous Poisson pair
emission, independent per-arm thinning, Gaussian timing jitter, uniform
dark counts, non-paralyzable dead time) and counted with a greedy
nearest-match coincidence sweep. Everything is driven by named PCG64
substreams derived from (seed, channel index), so results are identical
across runs and across parallel execution plans.
"""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .coincidence import (
    ArmEfficiency,
    DetectorSpec,
    accidental_rate,
    arm_total,
    qber,
    singles_rate,
    true_coincidence_rate,
    window_acceptance,
)
from .core import S_PER_NS
from .demux import ChannelPlan, pair_band_fraction, _pair_at
from .source import SourceSpec, generated_pair_rate

ORIGIN_PAIR = 0
ORIGIN_DARK = 1

MIN_OFFSET_WINDOWS = 100.0


@dataclass(frozen=True)
class MCConfig:
    duration_s: float
    seed: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.duration_s) or self.duration_s <= 0:
            raise ValueError(f"duration must be finite and > 0 s, got {self.duration_s!r}")


@dataclass(frozen=True)
class ChannelSimConfig:
    """Ground truth for simulating one conjugate channel pair."""

    pair_flux: float
    survival_a: float
    survival_b: float
    jitter_sigma_a_ns: float
    jitter_sigma_b_ns: float
    dead_time_a_ns: float
    dead_time_b_ns: float
    dark_rate_a_cps: float
    dark_rate_b_cps: float
    v0: float
    window_ns: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.pair_flux) or self.pair_flux < 0:
            raise ValueError(f"pair flux must be finite and >= 0, got {self.pair_flux!r}")
        for label in ("survival_a", "survival_b"):
            v = getattr(self, label)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{label} must be in [0, 1], got {v!r}")
        if not (0.0 < self.v0 <= 1.0):
            raise ValueError(f"v0 must be in (0, 1], got {self.v0!r}")
        if self.window_ns <= 0:
            raise ValueError(f"window must be > 0 ns, got {self.window_ns!r}")

    def digest(self) -> str:
        text = ",".join(f"{k}={getattr(self, k)!r}" for k in sorted(self.__dataclass_fields__))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class EventStream:
    """Sorted time tags of one detector."""

    detector_id: int
    times_ns: np.ndarray
    pol_bits: np.ndarray
    origins: np.ndarray

    def __len__(self) -> int:
        return int(self.times_ns.shape[0])


@dataclass(frozen=True)
class MCReport:
    duration_s: float
    window_ns: float
    offset_ns: float
    singles_a: int
    singles_b: int
    coincidences: int
    error_coincidences: int
    accidental_matches: int

    @property
    def qber_observed(self) -> float:
        return self.error_coincidences / self.coincidences if self.coincidences else math.nan

    @property
    def visibility_observed(self) -> float:
        return 1.0 - 2.0 * self.qber_observed


def channel_sim_config(
    source: SourceSpec,
    plan: ChannelPlan,
    index: int,
    arm_a: ArmEfficiency,
    arm_b: ArmEfficiency,
    det_a: DetectorSpec,
    det_b: DetectorSpec,
    window_ns: float,
) -> ChannelSimConfig:
    """Physical ground truth for channel pair `index` of a plan."""
    pair = _pair_at(plan, index)
    flux = generated_pair_rate(source) * pair_band_fraction(plan, source.spectrum, index)
    return ChannelSimConfig(
        pair_flux=flux,
        survival_a=pair.efficiency * arm_total(arm_a),
        survival_b=pair.efficiency * arm_total(arm_b),
        jitter_sigma_a_ns=det_a.jitter_sigma_ns,
        jitter_sigma_b_ns=det_b.jitter_sigma_ns,
        dead_time_a_ns=det_a.dead_time_ns,
        dead_time_b_ns=det_b.dead_time_ns,
        dark_rate_a_cps=det_a.dark_rate_cps,
        dark_rate_b_cps=det_b.dark_rate_cps,
        v0=source.visibility,
        window_ns=window_ns,
    )


def simulate_channel_pair(
    cfg: ChannelSimConfig,
    mc: MCConfig,
    channel_index: int = 1,
) -> tuple[EventStream, EventStream]:
    """Generate the two detector streams of one channel pair.

    Draw order is fixed: pair times, arm survivals, jitters, polarization
    bits, then darks for detector a, then darks for detector b.
    """
    rng = np.random.default_rng(np.random.SeedSequence(mc.seed, spawn_key=(channel_index,)))
    duration_ns = mc.duration_s * 1e9

    n_pairs = rng.poisson(cfg.pair_flux * mc.duration_s)
    t_pairs = rng.uniform(0.0, duration_ns, n_pairs)
    keep_a = rng.random(n_pairs) < cfg.survival_a
    keep_b = rng.random(n_pairs) < cfg.survival_b
    jit_a = rng.normal(0.0, cfg.jitter_sigma_a_ns, n_pairs) if cfg.jitter_sigma_a_ns > 0 else np.zeros(n_pairs)
    jit_b = rng.normal(0.0, cfg.jitter_sigma_b_ns, n_pairs) if cfg.jitter_sigma_b_ns > 0 else np.zeros(n_pairs)
    bits_a = rng.integers(0, 2, n_pairs, dtype=np.uint8)
    flips = rng.random(n_pairs) < (1.0 - cfg.v0) / 2.0
    bits_b = bits_a ^ flips.astype(np.uint8)

    stream_a = _assemble_stream(
        0, t_pairs[keep_a] + jit_a[keep_a], bits_a[keep_a],
        cfg.dark_rate_a_cps, cfg.dead_time_a_ns, duration_ns, rng,
    )
    stream_b = _assemble_stream(
        1, t_pairs[keep_b] + jit_b[keep_b], bits_b[keep_b],
        cfg.dark_rate_b_cps, cfg.dead_time_b_ns, duration_ns, rng,
    )
    return stream_a, stream_b


def _assemble_stream(detector_id, pair_times, pair_bits, dark_rate, dead_ns, duration_ns, rng) -> EventStream:
    n_dark = rng.poisson(dark_rate * duration_ns * S_PER_NS)
    t_dark = rng.uniform(0.0, duration_ns, n_dark)
    bits_dark = rng.integers(0, 2, n_dark, dtype=np.uint8)

    times = np.concatenate([pair_times, t_dark])
    bits = np.concatenate([pair_bits, bits_dark])
    origins = np.concatenate([
        np.full(pair_times.shape[0], ORIGIN_PAIR, dtype=np.uint8),
        np.full(n_dark, ORIGIN_DARK, dtype=np.uint8),
    ])

    inside = (times >= 0.0) & (times <= duration_ns)
    times, bits, origins = times[inside], bits[inside], origins[inside]
    order = np.argsort(times, kind="stable")
    times, bits, origins = times[order], bits[order], origins[order]

    if dead_ns > 0.0 and times.shape[0]:
        keep = _dead_time_mask(times, dead_ns)
        times, bits, origins = times[keep], bits[keep], origins[keep]
    return EventStream(detector_id, times, bits, origins)


def count_coincidences(
    stream_a: EventStream,
    stream_b: EventStream,
    window_ns: float,
    offset_ns: float = 0.0,
) -> tuple[int, int]:
    """Count coincidences |t_a - (t_b + offset)| <= window/2.

    Greedy nearest-match: events are consumed in time order, each event
    participates in at most one coincidence, ties resolve to the earlier
    partner. A nonzero offset must be at least 100 windows (delayed-window
    accidental estimation). Returns (matches, polarization mismatches).
    """
    if window_ns <= 0:
        raise ValueError(f"window must be > 0 ns, got {window_ns!r}")
    if offset_ns != 0.0 and abs(offset_ns) < MIN_OFFSET_WINDOWS * window_ns:
        raise ValueError(
            f"offset {offset_ns} ns is too close to the window; need at least "
            f"{MIN_OFFSET_WINDOWS:g} windows ({MIN_OFFSET_WINDOWS * window_ns:g} ns)"
        )
    ta, tb = stream_a.times_ns, stream_b.times_ns
    for label, t in (("a", ta), ("b", tb)):
        if t.shape[0] > 1 and np.any(np.diff(t) < 0):
            raise ValueError(f"stream {label} is not sorted by timestamp")
    if ta.shape[0] == 0 or tb.shape[0] == 0:
        return 0, 0
    matches, mismatches = _greedy_match(
        ta.astype(np.float64),
        stream_a.pol_bits.astype(np.uint8),
        tb.astype(np.float64) + offset_ns,
        stream_b.pol_bits.astype(np.uint8),
        0.5 * window_ns,
    )
    return int(matches), int(mismatches)


def run_channel_pair(cfg: ChannelSimConfig, mc: MCConfig, channel_index: int = 1) -> MCReport:
    """Simulate one channel pair and reduce it to counted statistics."""
    return reduce_streams(cfg, mc, simulate_channel_pair(cfg, mc, channel_index))


def reduce_streams(cfg: ChannelSimConfig, mc: MCConfig, streams: tuple[EventStream, EventStream]) -> MCReport:
    """Counted statistics of a simulated stream pair, including the
    delayed-window accidental estimate."""
    stream_a, stream_b = streams
    offset = MIN_OFFSET_WINDOWS * cfg.window_ns
    coinc, errors = count_coincidences(stream_a, stream_b, cfg.window_ns)
    acc, _ = count_coincidences(stream_a, stream_b, cfg.window_ns, offset_ns=offset)
    return MCReport(
        duration_s=mc.duration_s,
        window_ns=cfg.window_ns,
        offset_ns=offset,
        singles_a=len(stream_a),
        singles_b=len(stream_b),
        coincidences=coinc,
        error_coincidences=errors,
        accidental_matches=acc,
    )


def simulate_plan(configs: dict[int, ChannelSimConfig], mc: MCConfig) -> dict[int, MCReport]:
    """Simulate several channel pairs, fanning out over QLINK_THREADS workers.

    Per-channel substreams make the result independent of worker count.
    """
    workers = max(1, _thread_budget(len(configs)))
    if workers == 1 or len(configs) <= 1:
        return {k: run_channel_pair(cfg, mc, k) for k, cfg in configs.items()}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {k: pool.submit(run_channel_pair, cfg, mc, k) for k, cfg in configs.items()}
        return {k: f.result() for k, f in futures.items()}


def _thread_budget(n_tasks: int) -> int:
    raw = os.environ.get("QLINK_THREADS", "")
    try:
        budget = int(raw) if raw else min(4, os.cpu_count() or 1)
    except ValueError as exc:
        raise ValueError(f"QLINK_THREADS must be an integer, got {raw!r}") from exc
    return min(max(budget, 1), max(n_tasks, 1))


@dataclass(frozen=True)
class ComparisonRow:
    statistic: str
    observed: float
    expected: float
    sigma: float

    @property
    def z(self) -> float:
        return (self.observed - self.expected) / self.sigma if self.sigma > 0 else 0.0


def expected_rates(cfg: ChannelSimConfig) -> dict[str, float]:
    """Analytic-model predictions for the simulated ground truth."""
    det_a = DetectorSpec(1.0, cfg.jitter_sigma_a_ns, cfg.dead_time_a_ns, cfg.dark_rate_a_cps)
    det_b = DetectorSpec(1.0, cfg.jitter_sigma_b_ns, cfg.dead_time_b_ns, cfg.dark_rate_b_cps)
    s_a = singles_rate(cfg.pair_flux, cfg.survival_a, det_a)
    s_b = singles_rate(cfg.pair_flux, cfg.survival_b, det_b)
    acceptance = window_acceptance(cfg.window_ns, cfg.jitter_sigma_a_ns, cfg.jitter_sigma_b_ns)
    trues = true_coincidence_rate(cfg.pair_flux, cfg.survival_a, cfg.survival_b, acceptance)
    raw_a = cfg.pair_flux * cfg.survival_a + cfg.dark_rate_a_cps
    raw_b = cfg.pair_flux * cfg.survival_b + cfg.dark_rate_b_cps
    trues *= (s_a / raw_a if raw_a else 1.0) * (s_b / raw_b if raw_b else 1.0)
    acc = accidental_rate(s_a, s_b, cfg.window_ns)
    return {
        "singles_a": s_a,
        "singles_b": s_b,
        "trues": trues,
        "accidentals": acc,
        "qber": qber(cfg.v0, trues, acc) if trues + acc > 0 else math.nan,
    }


def compare_with_analytic(cfg: ChannelSimConfig, report: MCReport) -> list[ComparisonRow]:
    """Counted statistics against analytic expectations, with Poisson sigmas."""
    exp = expected_rates(cfg)
    t = report.duration_s
    rows = [
        ComparisonRow("singles_a", report.singles_a, exp["singles_a"] * t, math.sqrt(max(exp["singles_a"] * t, 1.0))),
        ComparisonRow("singles_b", report.singles_b, exp["singles_b"] * t, math.sqrt(max(exp["singles_b"] * t, 1.0))),
        ComparisonRow(
            "coincidences",
            report.coincidences,
            (exp["trues"] + exp["accidentals"]) * t,
            math.sqrt(max((exp["trues"] + exp["accidentals"]) * t, 1.0)),
        ),
        ComparisonRow(
            "accidentals",
            report.accidental_matches,
            exp["accidentals"] * t,
            math.sqrt(max(exp["accidentals"] * t, 1.0)),
        ),
        ComparisonRow(
            "trues",
            report.coincidences - report.accidental_matches,
            exp["trues"] * t,
            math.sqrt(max((exp["trues"] + 2.0 * exp["accidentals"]) * t, 1.0)),
        ),
    ]
    if report.coincidences:
        e = exp["qber"]
        sigma_q = math.sqrt(max(e * (1.0 - e), 1e-12) / report.coincidences)
        rows.append(ComparisonRow("qber", report.qber_observed, e, sigma_q))
        rows.append(ComparisonRow("visibility", report.visibility_observed, 1.0 - 2.0 * e, 2.0 * sigma_q))
    return rows


def dump_time_tags(path: str, cfg: ChannelSimConfig, mc: MCConfig, streams: tuple[EventStream, EventStream]) -> None:
    """Write merged time tags: `timestamp_ns detector_id pol_bit origin`."""
    a, b = streams
    times = np.concatenate([a.times_ns, b.times_ns])
    dets = np.concatenate([np.full(len(a), a.detector_id), np.full(len(b), b.detector_id)])
    bits = np.concatenate([a.pol_bits, b.pol_bits])
    origins = np.concatenate([a.origins, b.origins])
    order = np.argsort(times, kind="stable")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# qlink-timetags v1 config={cfg.digest()} duration_s={mc.duration_s!r} seed={mc.seed}\n")
        for i in order:
            origin = "pair" if origins[i] == ORIGIN_PAIR else "dark"
            fh.write(f"{times[i]:.6f} {dets[i]} {bits[i]} {origin}\n")


@njit(cache=True)
def _dead_time_mask(times, dead_ns):
    n = times.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    last = -1e300
    for i in range(n):
        if times[i] - last >= dead_ns:
            keep[i] = True
            last = times[i]
    return keep


@njit(cache=True)
def _greedy_match(ta, bits_a, tb, bits_b, half_ns):
    na = ta.shape[0]
    nb = tb.shape[0]
    used = np.zeros(nb, dtype=np.bool_)
    j0 = 0
    n_match = 0
    n_err = 0
    for i in range(na):
        t = ta[i]
        lo = t - half_ns
        hi = t + half_ns
        while j0 < nb and (used[j0] or tb[j0] < lo):
            j0 += 1
        j = j0
        best = -1
        best_d = half_ns * 2.0 + 1.0
        while j < nb and tb[j] <= hi:
            if not used[j]:
                d = abs(tb[j] - t)
                if d < best_d:
                    best_d = d
                    best = j
            j += 1
        if best >= 0 and best_d <= half_ns:
            used[best] = True
            n_match += 1
            if bits_a[i] != bits_b[best]:
                n_err += 1
    return n_match, n_err
