"""Instrument presets and working-point exploration.

A preset bundles source, channel plan, per-arm efficiencies, detectors,
the coincidence window and key-rate parameters. Evaluation spreads the
generated pair flux losslessly over the plan's channel pairs when
demultiplexing is on (one undivided stream when off) and runs the
analytic coincidence and key-rate chain on each part. Per-channel
spectral capture stays available separately for event-level simulation
and plan inspection; the rate chain deliberately conserves total flux so
toggling the demultiplexer isolates the accidental-rate effect.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coincidence import (
    ArmEfficiency,
    DetectorSpec,
    PairRates,
    RateReport,
    build_rate_report,
)
from .demux import ChannelPlan, build_channel_plan, pair_band_fraction, pair_capture_fraction
from .qkd import KeyRateParams, KeyRateReport, build_key_rate_report
from .source import SourceSpec, generated_pair_rate

SWEEP_AXES = ("pump_power_mw", "window_ns", "attenuation_db")

MICIUS_BAND_DB = (56.0, 71.0)
MICIUS_SKR_BPS = 0.12


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    source: SourceSpec
    plan: ChannelPlan
    arm_a: ArmEfficiency
    arm_b: ArmEfficiency
    det_a: DetectorSpec
    det_b: DetectorSpec
    window_ns: float
    key_params: KeyRateParams

    def __post_init__(self) -> None:
        if self.window_ns <= 0:
            raise ValueError(f"coincidence window must be > 0 ns, got {self.window_ns!r}")
        for label, arm, det in (("a", self.arm_a, self.det_a), ("b", self.arm_b, self.det_b)):
            if not math.isclose(arm.detector, det.efficiency, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(
                    f"arm {label} carries detector efficiency {arm.detector} but the detector "
                    f"reports {det.efficiency}; they must match"
                )
            if arm.demux_insertion != 1.0 and any(p.efficiency != 1.0 for p in self.plan.pairs):
                raise ValueError(
                    "demux insertion loss is set on both the arm and the channel plan; "
                    "keep it in one place"
                )


@dataclass(frozen=True)
class ScenarioResult:
    preset: str
    demux_on: bool
    rates: RateReport
    keys: KeyRateReport


def channel_fluxes(preset: ScenarioPreset, demux_on: bool) -> list[float]:
    """Pair flux feeding each evaluated channel pair.

    Demultiplexed operation splits the full flux evenly over the plan's
    pairs; without it the whole flux rides a single output pair.
    """
    mu = generated_pair_rate(preset.source)
    if not demux_on:
        return [mu]
    n = preset.plan.num_pairs
    if n == 0:
        raise ValueError("channel plan has no pairs to demultiplex into")
    return [mu / n] * n


def evaluate(preset: ScenarioPreset, demux_on: bool = True) -> ScenarioResult:
    rates = build_rate_report(
        channel_fluxes(preset, demux_on),
        1.0,
        preset.arm_a,
        preset.arm_b,
        preset.det_a,
        preset.det_b,
        preset.window_ns,
        preset.source.visibility,
    )
    keys = build_key_rate_report(rates, preset.source.visibility, preset.key_params)
    return ScenarioResult(preset.name, demux_on, rates, keys)


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    steps: int

    def __post_init__(self) -> None:
        if self.name not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.name!r}; pick one of {SWEEP_AXES}")
        if self.steps < 2:
            raise ValueError(f"a sweep axis needs at least 2 steps, got {self.steps}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.start >= self.stop:
            raise ValueError(f"axis range must satisfy start < stop, got [{self.start!r}, {self.stop!r}]")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[SweepAxis, ...]
    demux_on: bool = True

    def __post_init__(self) -> None:
        if not 1 <= len(self.axes) <= 2:
            raise ValueError("sweeps take one or two axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"sweep axes must differ, got {names}")


@dataclass(frozen=True)
class SweepPoint:
    values: tuple[float, ...]
    demux_on: bool
    totals: PairRates
    sifted: float
    skr: float


def apply_axis(preset: ScenarioPreset, name: str, value: float) -> ScenarioPreset:
    """A preset with one swept quantity replaced."""
    if name == "pump_power_mw":
        return replace(preset, source=replace(preset.source, pump_power_mw=value))
    if name == "window_ns":
        return replace(preset, window_ns=value)
    if name == "attenuation_db":
        half = value / 2.0
        return replace(
            preset,
            arm_a=replace(preset.arm_a, link_attenuation_db=half),
            arm_b=replace(preset.arm_b, link_attenuation_db=half),
        )
    raise ValueError(f"unknown sweep axis {name!r}; pick one of {SWEEP_AXES}")


def run_sweep(preset: ScenarioPreset, spec: SweepSpec) -> list[SweepPoint]:
    """Evaluate the preset over the full grid, outer axis varying slowest."""
    grids = [axis.values() for axis in spec.axes]
    points = []
    for combo in _grid_iter(grids):
        p = preset
        for axis, value in zip(spec.axes, combo):
            p = apply_axis(p, axis.name, float(value))
        result = evaluate(p, spec.demux_on)
        points.append(
            SweepPoint(
                values=tuple(float(v) for v in combo),
                demux_on=spec.demux_on,
                totals=result.rates.totals,
                sifted=result.keys.sifted_total,
                skr=result.keys.skr_total,
            )
        )
    return points


def _grid_iter(grids):
    if len(grids) == 1:
        for v in grids[0]:
            yield (v,)
    else:
        for v0 in grids[0]:
            for v1 in grids[1]:
                yield (v0, v1)


@dataclass(frozen=True)
class OptimizeResult:
    objective: str
    best: SweepPoint
    no_positive_rate: bool


def optimize(preset: ScenarioPreset, spec: SweepSpec, objective: str = "skr") -> OptimizeResult:
    """Exhaustive grid search; ties resolve to the earliest grid point
    (lowest outer-axis value first, then inner)."""
    if objective not in ("skr", "qber"):
        raise ValueError(f"objective must be 'skr' or 'qber', got {objective!r}")
    points = run_sweep(preset, spec)
    best = None
    for p in points:
        score = p.skr if objective == "skr" else p.totals.qber
        if objective == "qber" and math.isnan(score):
            continue
        if best is None:
            best = (score, p)
        elif objective == "skr" and score > best[0]:
            best = (score, p)
        elif objective == "qber" and score < best[0]:
            best = (score, p)
    if best is None:
        return OptimizeResult(objective, points[0], True)
    flagged = objective == "skr" and best[0] <= 0.0
    return OptimizeResult(objective, best[1], flagged)


@dataclass(frozen=True)
class LinkBudgetRow:
    attenuation_db: float
    totals: PairRates
    skr: float


def link_budget(preset: ScenarioPreset, start_db: float, stop_db: float, steps: int,
                demux_on: bool = True) -> list[LinkBudgetRow]:
    """Secure key rate against symmetric dual-link attenuation."""
    axis = SweepAxis("attenuation_db", start_db, stop_db, steps)
    rows = []
    for db in axis.values():
        result = evaluate(apply_axis(preset, "attenuation_db", float(db)), demux_on)
        rows.append(LinkBudgetRow(float(db), result.rates.totals, result.keys.skr_total))
    return rows


@dataclass(frozen=True)
class PlanRow:
    index: int
    signal_center_nm: float
    idler_center_nm: float
    band_fraction: float
    capture_fraction: float


def plan_summary(preset: ScenarioPreset) -> list[PlanRow]:
    """Per-pair spectral placement and physical capture of the plan."""
    return [
        PlanRow(
            p.index,
            p.signal_center_nm,
            p.idler_center_nm,
            pair_band_fraction(preset.plan, preset.source.spectrum, p.index),
            pair_capture_fraction(preset.plan, preset.source.spectrum, p.index),
        )
        for p in preset.plan.pairs
    ]


def _lab_preset() -> ScenarioPreset:
    source = SourceSpec(pump_power_mw=1.0)
    plan = build_channel_plan(source.pump_wavelength_nm, 75.0, 300.0, 2)
    arm = ArmEfficiency(optics=0.96, fiber_coupling=0.5, detector=0.5)
    det = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=100.0)
    return ScenarioPreset("lab", source, plan, arm, arm, det, det, 3.0, KeyRateParams())


def _downlink_preset(name: str, det: DetectorSpec, window_ns: float) -> ScenarioPreset:
    source = SourceSpec(pump_power_mw=5.0)
    plan = build_channel_plan(source.pump_wavelength_nm, 75.0, 300.0, 28)
    arm = ArmEfficiency(detector=det.efficiency, link_attenuation_db=20.0)
    return ScenarioPreset(name, source, plan, arm, arm, det, det, window_ns, KeyRateParams())


def _downlink_snspd() -> ScenarioPreset:
    det = DetectorSpec(efficiency=0.8, jitter_sigma_ns=0.007, dead_time_ns=0.0, dark_rate_cps=100.0)
    return _downlink_preset("downlink-snspd", det, 0.1)


def _downlink_spad() -> ScenarioPreset:
    det = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=0.0, dark_rate_cps=100.0)
    return _downlink_preset("downlink-spad", det, 2.5)


_PRESETS = {
    "lab": _lab_preset,
    "downlink-snspd": _downlink_snspd,
    "downlink-spad": _downlink_spad,
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))


def load_preset(name: str) -> ScenarioPreset:
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None
    return factory()
