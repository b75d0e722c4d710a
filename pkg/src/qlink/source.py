"""Continuous-wave pair source: brightness, pump scaling, spectral capture."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import SpectralShape, require_wavelength

# Generated pairs per second per mW of pump. Chosen so that the default
# per-arm detection chain of 0.24 reproduces a detected pair rate of
# 5.5e6 /s/mW (9.55e7 * 0.24^2 = 5.5008e6).
DEFAULT_BRIGHTNESS_PER_MW = 9.55e7

# Degenerate-pair alignment tolerance between the spectrum center and
# twice the pump wavelength, in nm.
CENTER_TOLERANCE_NM = 0.1


@dataclass(frozen=True)
class SourceSpec:
    """A CW-pumped degenerate pair source.

    brightness is in generated pairs per second per mW, pump_power in mW,
    wavelengths in nm. visibility is the intrinsic two-photon polarization
    visibility in (0, 1].
    """

    brightness_pairs_per_s_per_mw: float = DEFAULT_BRIGHTNESS_PER_MW
    pump_power_mw: float = 1.0
    pump_wavelength_nm: float = 405.22
    spectrum: SpectralShape | None = None
    visibility: float = 0.99

    def __post_init__(self) -> None:
        if not math.isfinite(self.brightness_pairs_per_s_per_mw) or self.brightness_pairs_per_s_per_mw < 0:
            raise ValueError(f"brightness must be finite and >= 0, got {self.brightness_pairs_per_s_per_mw!r}")
        if not math.isfinite(self.pump_power_mw) or self.pump_power_mw < 0:
            raise ValueError(f"pump power must be finite and >= 0 mW, got {self.pump_power_mw!r}")
        require_wavelength(self.pump_wavelength_nm, "pump wavelength")
        if not (0.0 < self.visibility <= 1.0):
            raise ValueError(f"visibility must be in (0, 1], got {self.visibility!r}")
        if self.spectrum is None:
            object.__setattr__(
                self,
                "spectrum",
                SpectralShape("gaussian", 2.0 * self.pump_wavelength_nm, 11.0, 1.0),
            )
        drift = abs(self.spectrum.center_nm - 2.0 * self.pump_wavelength_nm)
        if drift > CENTER_TOLERANCE_NM:
            raise ValueError(
                f"spectrum center {self.spectrum.center_nm} nm is {drift:.4g} nm away from the "
                f"degenerate wavelength 2*{self.pump_wavelength_nm} nm (tolerance {CENTER_TOLERANCE_NM} nm)"
            )

    @property
    def degenerate_wavelength_nm(self) -> float:
        return 2.0 * self.pump_wavelength_nm


def generated_pair_rate(spec: SourceSpec) -> float:
    """Total generated pair rate in pairs/s; exactly linear in pump power."""
    return spec.brightness_pairs_per_s_per_mw * spec.pump_power_mw


def pair_rate_in_channel_pair(spec: SourceSpec, capture_fraction: float) -> float:
    """Generated pair rate landing in one conjugate channel pair.

    capture_fraction is the spectral capture of the pair (band fraction
    times squared channel efficiency), as computed by the demux module.
    """
    if not math.isfinite(capture_fraction) or not (0.0 <= capture_fraction <= 1.0):
        raise ValueError(f"capture fraction must be in [0, 1], got {capture_fraction!r}")
    return generated_pair_rate(spec) * capture_fraction
