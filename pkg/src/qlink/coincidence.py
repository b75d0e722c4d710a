"""Singles, true and accidental coincidence rates, CAR, visibility, QBER.

The model: a channel pair carries a pair flux mu (pairs/s). Each photon
independently survives its detection arm with probability eta_channel *
arm_total. Relative detection times of a surviving pair are Gaussian with
sigma_delta = hypot(sigma_a, sigma_b); a coincidence window tau_c centered
on zero accepts |dt| <= tau_c / 2. Accidentals follow the CW product rule
singles_a * singles_b * tau_c. Dead time is non-paralyzable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import FWHM_SIGMA_RATIO, S_PER_NS, db_to_linear


@dataclass(frozen=True)
class DetectorSpec:
    """Single-photon detector: efficiency, Gaussian timing jitter (sigma, ns),
    non-paralyzable dead time (ns), dark count rate (counts/s)."""

    efficiency: float = 0.5
    jitter_sigma_ns: float = 0.4
    dead_time_ns: float = 0.0
    dark_rate_cps: float = 100.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.efficiency <= 1.0):
            raise ValueError(f"detector efficiency must be in [0, 1], got {self.efficiency!r}")
        if not math.isfinite(self.jitter_sigma_ns) or self.jitter_sigma_ns < 0:
            raise ValueError(f"jitter sigma must be finite and >= 0 ns, got {self.jitter_sigma_ns!r}")
        if not math.isfinite(self.dead_time_ns) or self.dead_time_ns < 0:
            raise ValueError(f"dead time must be finite and >= 0 ns, got {self.dead_time_ns!r}")
        if not math.isfinite(self.dark_rate_cps) or self.dark_rate_cps < 0:
            raise ValueError(f"dark rate must be finite and >= 0 cps, got {self.dark_rate_cps!r}")


def jitter_sigma_from_fwhm(fwhm_ns: float) -> float:
    """Convert a timing response quoted as FWHM to the Gaussian sigma."""
    if not math.isfinite(fwhm_ns) or fwhm_ns < 0:
        raise ValueError(f"jitter fwhm must be finite and >= 0 ns, got {fwhm_ns!r}")
    return fwhm_ns / FWHM_SIGMA_RATIO


@dataclass(frozen=True)
class ArmEfficiency:
    """Multiplicative survival chain for one photon from crystal to click."""

    optics: float = 1.0
    fiber_coupling: float = 1.0
    demux_insertion: float = 1.0
    link_attenuation_db: float = 0.0
    detector: float = 1.0

    def __post_init__(self) -> None:
        for label in ("optics", "fiber_coupling", "demux_insertion", "detector"):
            v = getattr(self, label)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"arm {label} must be in [0, 1], got {v!r}")
        db_to_linear(self.link_attenuation_db)


def arm_total(arm: ArmEfficiency) -> float:
    """Total per-photon survival probability of one arm."""
    return (
        arm.optics
        * arm.fiber_coupling
        * arm.demux_insertion
        * db_to_linear(arm.link_attenuation_db)
        * arm.detector
    )


def window_acceptance(window_ns: float, sigma_a_ns: float, sigma_b_ns: float) -> float:
    """Fraction of surviving pairs whose arrival difference fits the window.

    Equals erf(tau_c / (2 sqrt(2) sigma_delta)) with
    sigma_delta = sqrt(sigma_a^2 + sigma_b^2); 1.0 for jitterless detectors.
    """
    if not math.isfinite(window_ns) or window_ns <= 0:
        raise ValueError(f"coincidence window must be finite and > 0 ns, got {window_ns!r}")
    sigma_delta = math.hypot(sigma_a_ns, sigma_b_ns)
    if sigma_delta == 0.0:
        return 1.0
    return math.erf(window_ns / (2.0 * math.sqrt(2.0) * sigma_delta))


def singles_rate(pair_flux: float, arm_survival: float, detector: DetectorSpec) -> float:
    """Measured singles rate of one detector.

    raw = pair_flux * arm_survival + darks; dead time corrects this to
    raw / (1 + raw * dead_time), the non-paralyzable steady state.
    """
    _require_rate(pair_flux, "pair flux")
    _require_probability(arm_survival, "arm survival")
    raw = pair_flux * arm_survival + detector.dark_rate_cps
    if detector.dead_time_ns == 0.0:
        return raw
    return raw / (1.0 + raw * detector.dead_time_ns * S_PER_NS)


def true_coincidence_rate(pair_flux: float, survival_a: float, survival_b: float, acceptance: float) -> float:
    """Detected true-pair rate: mu * eta_a * eta_b * window acceptance."""
    _require_rate(pair_flux, "pair flux")
    _require_probability(survival_a, "arm survival a")
    _require_probability(survival_b, "arm survival b")
    _require_probability(acceptance, "window acceptance")
    return pair_flux * survival_a * survival_b * acceptance


def accidental_rate(singles_a: float, singles_b: float, window_ns: float) -> float:
    """Accidental coincidence rate of two independent streams: s_a s_b tau_c."""
    _require_rate(singles_a, "singles a")
    _require_rate(singles_b, "singles b")
    if not math.isfinite(window_ns) or window_ns <= 0:
        raise ValueError(f"coincidence window must be finite and > 0 ns, got {window_ns!r}")
    return singles_a * singles_b * window_ns * S_PER_NS


def car(trues: float, accidentals: float) -> float:
    """Coincidence-to-accidental ratio; inf marks a noiseless channel."""
    _require_rate(trues, "trues")
    _require_rate(accidentals, "accidentals")
    if accidentals == 0.0:
        if trues == 0.0:
            raise ValueError("CAR is undefined with zero trues and zero accidentals")
        return math.inf
    return trues / accidentals


def visibility_measured(v0: float, trues: float, accidentals: float) -> float:
    """Polarization visibility diluted by accidentals: V0 * T / (T + A)."""
    if not (0.0 < v0 <= 1.0):
        raise ValueError(f"intrinsic visibility must be in (0, 1], got {v0!r}")
    _require_rate(trues, "trues")
    _require_rate(accidentals, "accidentals")
    if trues + accidentals == 0.0:
        raise ValueError("visibility is undefined with no coincidences")
    return v0 * trues / (trues + accidentals)


def qber(v0: float, trues: float, accidentals: float) -> float:
    """Quantum bit error rate of the sifted coincidences.

    Erroneous fraction (1 - V0)/2 of trues plus half of the accidentals;
    algebraically identical to (1 - visibility_measured) / 2.
    """
    if not (0.0 < v0 <= 1.0):
        raise ValueError(f"intrinsic visibility must be in (0, 1], got {v0!r}")
    _require_rate(trues, "trues")
    _require_rate(accidentals, "accidentals")
    total = trues + accidentals
    if total == 0.0:
        raise ValueError("QBER is undefined with no coincidences")
    return (trues * (1.0 - v0) / 2.0 + accidentals / 2.0) / total


@dataclass(frozen=True)
class PairRates:
    """Steady-state rates of one conjugate channel pair (or one aggregate)."""

    singles_a: float
    singles_b: float
    trues: float
    accidentals: float
    car: float
    visibility: float
    qber: float


@dataclass(frozen=True)
class RateReport:
    pairs: tuple[PairRates, ...]
    totals: PairRates


def pair_statistics(
    pair_flux: float,
    channel_efficiency: float,
    arm_a: ArmEfficiency,
    arm_b: ArmEfficiency,
    det_a: DetectorSpec,
    det_b: DetectorSpec,
    window_ns: float,
    v0: float,
) -> PairRates:
    """Full statistics chain for one channel pair carrying pair_flux.

    The channel efficiency applies once per photon for singles and twice
    for pair detection. When dead time is configured, trues are scaled by
    both detectors' livetime fractions so they track measured streams.
    """
    surv_a = channel_efficiency * arm_total(arm_a)
    surv_b = channel_efficiency * arm_total(arm_b)
    s_a = singles_rate(pair_flux, surv_a, det_a)
    s_b = singles_rate(pair_flux, surv_b, det_b)
    acceptance = window_acceptance(window_ns, det_a.jitter_sigma_ns, det_b.jitter_sigma_ns)
    trues = true_coincidence_rate(pair_flux, surv_a, surv_b, acceptance)
    trues *= _livetime_fraction(pair_flux, surv_a, det_a) * _livetime_fraction(pair_flux, surv_b, det_b)
    acc = accidental_rate(s_a, s_b, window_ns)
    if trues == 0.0 and acc == 0.0:
        return PairRates(s_a, s_b, 0.0, 0.0, math.nan, math.nan, math.nan)
    return PairRates(
        s_a,
        s_b,
        trues,
        acc,
        car(trues, acc),
        visibility_measured(v0, trues, acc),
        qber(v0, trues, acc),
    )


def aggregate_pair_rates(pairs: tuple[PairRates, ...], v0: float) -> PairRates:
    """Flux-weighted totals over channel pairs (sums of rates, ratio stats
    recomputed from the summed trues and accidentals)."""
    s_a = sum(p.singles_a for p in pairs)
    s_b = sum(p.singles_b for p in pairs)
    trues = sum(p.trues for p in pairs)
    acc = sum(p.accidentals for p in pairs)
    if trues == 0.0 and acc == 0.0:
        return PairRates(s_a, s_b, 0.0, 0.0, math.nan, math.nan, math.nan)
    return PairRates(s_a, s_b, trues, acc, car(trues, acc), visibility_measured(v0, trues, acc), qber(v0, trues, acc))


def build_rate_report(
    fluxes: list[float],
    channel_efficiency: float,
    arm_a: ArmEfficiency,
    arm_b: ArmEfficiency,
    det_a: DetectorSpec,
    det_b: DetectorSpec,
    window_ns: float,
    v0: float,
) -> RateReport:
    pairs = tuple(
        pair_statistics(flux, channel_efficiency, arm_a, arm_b, det_a, det_b, window_ns, v0)
        for flux in fluxes
    )
    if not pairs:
        empty = PairRates(0.0, 0.0, 0.0, 0.0, math.nan, math.nan, math.nan)
        return RateReport(pairs, empty)
    return RateReport(pairs, aggregate_pair_rates(pairs, v0))


def _livetime_fraction(pair_flux: float, arm_survival: float, det: DetectorSpec) -> float:
    if det.dead_time_ns == 0.0:
        return 1.0
    raw = pair_flux * arm_survival + det.dark_rate_cps
    return 1.0 / (1.0 + raw * det.dead_time_ns * S_PER_NS)


def _require_rate(value: float, name: str) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


def _require_probability(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
