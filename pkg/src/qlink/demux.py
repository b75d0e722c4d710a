"""Conjugate wavelength channel plans for demultiplexed pair detection.

Channels sit on a uniform optical-frequency grid symmetric about half the
pump frequency, so energy conservation pairs each signal channel A_k with
its idler partner B_k exactly. The innermost channels are offset half a
grid pitch from the degenerate wavelength.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    C_NM_THZ,
    SpectralShape,
    band_fraction,
    require_wavelength,
    wavelength_to_frequency,
)

# Conjugacy residual allowed at band centers, in nm. Construction is
# exact to float rounding, far below this bound.
CONJUGACY_TOLERANCE_NM = 1e-6

# Per-photon channel efficiency: grating diffraction times fiber coupling.
DEFAULT_CHANNEL_EFFICIENCY = 0.98 * 0.84


def conjugate_wavelength(wavelength_nm: float, pump_wavelength_nm: float) -> float:
    """Idler wavelength conjugate to a signal wavelength under a CW pump.

    Energy conservation: 1/lambda_signal + 1/lambda_idler = 1/lambda_pump.
    The signal must be strictly longer than the pump wavelength.
    """
    require_wavelength(wavelength_nm)
    require_wavelength(pump_wavelength_nm, "pump wavelength")
    if wavelength_nm <= pump_wavelength_nm:
        raise ValueError(
            f"wavelength {wavelength_nm} nm must exceed the pump wavelength "
            f"{pump_wavelength_nm} nm for a conjugate to exist"
        )
    return 1.0 / (1.0 / pump_wavelength_nm - 1.0 / wavelength_nm)


@dataclass(frozen=True)
class ChannelPair:
    """One conjugate channel pair: signal band A_k and idler band B_k."""

    index: int
    signal_center_nm: float
    idler_center_nm: float
    bandwidth_pm: float
    efficiency: float

    def signal_band_nm(self) -> tuple[float, float]:
        half = 0.5 * self.bandwidth_pm * 1e-3
        return (self.signal_center_nm - half, self.signal_center_nm + half)

    def idler_band_nm(self) -> tuple[float, float]:
        half = 0.5 * self.bandwidth_pm * 1e-3
        return (self.idler_center_nm - half, self.idler_center_nm + half)


@dataclass(frozen=True)
class ChannelPlan:
    pump_wavelength_nm: float
    bandwidth_pm: float
    spacing_pm: float
    pairs: tuple[ChannelPair, ...]

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)

    @property
    def num_channels(self) -> int:
        return 2 * len(self.pairs)

    @property
    def degenerate_wavelength_nm(self) -> float:
        return 2.0 * self.pump_wavelength_nm

    def conjugacy_residual_nm(self) -> float:
        """Largest distance between each stored idler center and the exact
        conjugate of its signal center, in nm."""
        worst = 0.0
        for p in self.pairs:
            exact = conjugate_wavelength(p.signal_center_nm, self.pump_wavelength_nm)
            worst = max(worst, abs(exact - p.idler_center_nm))
        return worst


def max_pairs_in_span(span_nm: float, bandwidth_pm: float, spacing_pm: float) -> int:
    """How many conjugate pairs fit with every channel edge within span_nm
    of the degenerate wavelength (span bounds the one-sided detuning)."""
    if span_nm <= 0 or bandwidth_pm <= 0 or spacing_pm <= 0:
        raise ValueError("span, bandwidth and spacing must all be > 0")
    pitch_nm = (bandwidth_pm + spacing_pm) * 1e-3
    half_bw_nm = 0.5 * bandwidth_pm * 1e-3
    n = int(math.floor((span_nm - half_bw_nm) / pitch_nm + 0.5))
    return max(n, 0)


def build_channel_plan(
    pump_wavelength_nm: float,
    bandwidth_pm: float,
    spacing_pm: float,
    num_pairs: int,
    efficiency: float = DEFAULT_CHANNEL_EFFICIENCY,
    span_nm: float | None = None,
) -> ChannelPlan:
    """Place num_pairs conjugate channel pairs on the frequency grid.

    The grid pitch is bandwidth + spacing converted to frequency at the
    degenerate wavelength. Signal channels lie below the degenerate
    wavelength, idlers above. span_nm, when given, bounds how far any
    channel edge may sit from the degenerate wavelength.
    """
    require_wavelength(pump_wavelength_nm, "pump wavelength")
    if num_pairs < 0:
        raise ValueError(f"num_pairs must be >= 0, got {num_pairs}")
    if bandwidth_pm <= 0 or spacing_pm <= 0:
        raise ValueError("bandwidth and spacing must be > 0 pm")
    if not (0.0 < efficiency <= 1.0):
        raise ValueError(f"channel efficiency must be in (0, 1], got {efficiency!r}")

    degenerate_nm = 2.0 * pump_wavelength_nm
    pump_thz = wavelength_to_frequency(pump_wavelength_nm)
    center_thz = 0.5 * pump_thz
    pitch_nm = (bandwidth_pm + spacing_pm) * 1e-3
    pitch_thz = C_NM_THZ * pitch_nm / (degenerate_nm * degenerate_nm)
    half_bw_nm = 0.5 * bandwidth_pm * 1e-3

    pairs = []
    for k in range(1, num_pairs + 1):
        offset_thz = (k - 0.5) * pitch_thz
        signal_nm = C_NM_THZ / (center_thz + offset_thz)
        idler_nm = C_NM_THZ / (center_thz - offset_thz)
        if span_nm is not None:
            outer_edge = max(degenerate_nm - (signal_nm - half_bw_nm), (idler_nm + half_bw_nm) - degenerate_nm)
            if outer_edge > span_nm:
                feasible = _feasible_pairs(degenerate_nm, center_thz, pitch_thz, half_bw_nm, span_nm)
                raise ValueError(
                    f"{num_pairs} channel pairs exceed the {span_nm} nm spectral span; "
                    f"at most {feasible} pairs fit"
                )
        pairs.append(ChannelPair(k, signal_nm, idler_nm, bandwidth_pm, efficiency))

    plan = ChannelPlan(pump_wavelength_nm, bandwidth_pm, spacing_pm, tuple(pairs))
    _validate_disjoint(plan)
    if plan.conjugacy_residual_nm() > CONJUGACY_TOLERANCE_NM:
        raise ValueError("channel plan violates conjugacy tolerance")
    return plan


def _feasible_pairs(degenerate_nm, center_thz, pitch_thz, half_bw_nm, span_nm) -> int:
    n = 0
    while True:
        offset_thz = (n + 0.5) * pitch_thz
        if offset_thz >= center_thz:
            return n
        signal_nm = C_NM_THZ / (center_thz + offset_thz)
        idler_nm = C_NM_THZ / (center_thz - offset_thz)
        outer = max(degenerate_nm - (signal_nm - half_bw_nm), (idler_nm + half_bw_nm) - degenerate_nm)
        if outer > span_nm:
            return n
        n += 1


def _validate_disjoint(plan: ChannelPlan) -> None:
    bands = []
    for p in plan.pairs:
        bands.append(p.signal_band_nm())
        bands.append(p.idler_band_nm())
    bands.sort()
    for (lo_a, hi_a), (lo_b, hi_b) in zip(bands, bands[1:]):
        if hi_a > lo_b:
            raise ValueError(
                f"channel bands overlap: [{lo_a:.6f}, {hi_a:.6f}] and [{lo_b:.6f}, {hi_b:.6f}] nm"
            )


def pair_band_fraction(plan: ChannelPlan, spectrum: SpectralShape, index: int) -> float:
    """Fraction of generated pairs whose signal photon lands in channel A_k.

    By exact conjugacy the idler of such a pair lands in the conjugate
    image of A_k, which is what B_k detects; the same fraction therefore
    applies to either photon of the pair.
    """
    pair = _pair_at(plan, index)
    lo, hi = pair.signal_band_nm()
    return band_fraction(spectrum, lo, hi)


def pair_capture_fraction(plan: ChannelPlan, spectrum: SpectralShape, index: int) -> float:
    """Probability that a generated pair is captured by channel pair k:
    spectral band fraction times the squared per-photon channel efficiency."""
    pair = _pair_at(plan, index)
    return pair_band_fraction(plan, spectrum, index) * pair.efficiency * pair.efficiency


def crosstalk_fraction(plan: ChannelPlan, index_a: int, index_b: int) -> float:
    """Pair capture between non-conjugate channels A_j and B_k (j != k).

    Disjoint bands on an exactly conjugate grid make this identically
    zero under a monochromatic pump; asking for the conjugate pairing
    itself is a domain error.
    """
    _pair_at(plan, index_a)
    _pair_at(plan, index_b)
    if index_a == index_b:
        raise ValueError(
            f"channels A_{index_a} and B_{index_b} are conjugate partners, not a crosstalk pairing"
        )
    return 0.0


def _pair_at(plan: ChannelPlan, index: int) -> ChannelPair:
    for p in plan.pairs:
        if p.index == index:
            return p
    raise ValueError(f"channel pair {index} not in plan (1..{plan.num_pairs})")
