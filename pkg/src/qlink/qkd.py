"""Asymptotic BBM92 secure key rate from coincidence statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .coincidence import PairRates, RateReport, qber


@dataclass(frozen=True)
class KeyRateParams:
    """sifting_factor q is the basis-reconciliation fraction; f_ec the
    error-correction inefficiency relative to the Shannon limit."""

    sifting_factor: float = 0.5
    error_correction_inefficiency: float = 1.1

    def __post_init__(self) -> None:
        if not (0.0 < self.sifting_factor <= 1.0):
            raise ValueError(f"sifting factor must be in (0, 1], got {self.sifting_factor!r}")
        if not math.isfinite(self.error_correction_inefficiency) or self.error_correction_inefficiency < 1.0:
            raise ValueError(
                f"error-correction inefficiency must be >= 1, got {self.error_correction_inefficiency!r}"
            )


def binary_entropy(e: float) -> float:
    """Shannon entropy of a bit with error probability e, in bits."""
    if not (0.0 <= e <= 1.0):
        raise ValueError(f"error rate must be in [0, 1], got {e!r}")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e)


def secure_fraction(error_rate: float, params: KeyRateParams = KeyRateParams()) -> float:
    """Secure bits per sifted coincidence: max(0, 1 - f_ec h(e) - h(e))."""
    h = binary_entropy(error_rate)
    return max(0.0, 1.0 - params.error_correction_inefficiency * h - h)


def sifted_rate(trues: float, accidentals: float, params: KeyRateParams = KeyRateParams()) -> float:
    """Sifted coincidence rate q * (T + A)."""
    return params.sifting_factor * (trues + accidentals)


def skr_channel(
    trues: float,
    accidentals: float,
    v0: float,
    params: KeyRateParams = KeyRateParams(),
) -> float:
    """Asymptotic secure key rate of one channel pair, bits/s."""
    total = trues + accidentals
    if total == 0.0:
        return 0.0
    return sifted_rate(trues, accidentals, params) * secure_fraction(qber(v0, trues, accidentals), params)


def skr_total(channel_rates: list[tuple[float, float]], v0: float, params: KeyRateParams = KeyRateParams()) -> float:
    """Sum of per-channel secure key rates over (trues, accidentals) pairs."""
    return sum(skr_channel(t, a, v0, params) for t, a in channel_rates)


@dataclass(frozen=True)
class ChannelKeyRate:
    sifted: float
    qber: float
    skr: float


@dataclass(frozen=True)
class KeyRateReport:
    channels: tuple[ChannelKeyRate, ...]
    sifted_total: float
    skr_total: float


def build_key_rate_report(rates: RateReport, v0: float, params: KeyRateParams = KeyRateParams()) -> KeyRateReport:
    channels = tuple(_channel_key_rate(p, v0, params) for p in rates.pairs)
    sifted_sum = sum(c.sifted for c in channels)
    skr_sum = sum(c.skr for c in channels)
    return KeyRateReport(channels, sifted_sum, skr_sum)


def _channel_key_rate(p: PairRates, v0: float, params: KeyRateParams) -> ChannelKeyRate:
    if p.trues == 0.0 and p.accidentals == 0.0:
        return ChannelKeyRate(0.0, math.nan, 0.0)
    return ChannelKeyRate(
        sifted_rate(p.trues, p.accidentals, params),
        p.qber,
        skr_channel(p.trues, p.accidentals, v0, params),
    )
