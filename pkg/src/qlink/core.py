"""Unit conventions and spectral shapes shared by every other module.

Conventions: rates in events/s, wavelengths in nm, times in ns unless a
name says otherwise. Conversions to SI seconds happen here and nowhere
else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import sici

# Speed of light in nm * THz (exact, since both units derive from the metre).
C_NM_THZ = 299792.458

NS_PER_S = 1e9
S_PER_NS = 1e-9

# FWHM of a Gaussian = FWHM_SIGMA_RATIO * sigma.
FWHM_SIGMA_RATIO = 2.0 * math.sqrt(2.0 * math.log(2.0))

# Half-power point of sinc^2(x): sin(x)/x = 1/sqrt(2).
_SINC2_HALF_POWER = 1.39155737825151

SPECTRUM_KINDS = ("gaussian", "sinc2", "tophat")


def require_wavelength(value_nm: float, name: str = "wavelength") -> float:
    """Validate a wavelength in nm: finite and strictly positive."""
    if not math.isfinite(value_nm) or value_nm <= 0.0:
        raise ValueError(f"{name} must be finite and > 0 nm, got {value_nm!r}")
    return float(value_nm)


def wavelength_to_frequency(wavelength_nm: float) -> float:
    """Convert a wavelength in nm to an optical frequency in THz."""
    require_wavelength(wavelength_nm)
    return C_NM_THZ / wavelength_nm


def frequency_to_wavelength(frequency_thz: float) -> float:
    """Convert an optical frequency in THz to a wavelength in nm."""
    if not math.isfinite(frequency_thz) or frequency_thz <= 0.0:
        raise ValueError(f"frequency must be finite and > 0 THz, got {frequency_thz!r}")
    return C_NM_THZ / frequency_thz


def db_to_linear(attenuation_db: float) -> float:
    """Convert a non-negative attenuation in dB to a linear transmission factor."""
    if not math.isfinite(attenuation_db) or attenuation_db < 0.0:
        raise ValueError(f"attenuation must be finite and >= 0 dB, got {attenuation_db!r}")
    return 10.0 ** (-attenuation_db / 10.0)


@dataclass(frozen=True)
class SpectralShape:
    """Spectral density of the pair source around its center wavelength.

    Parameters
    ----------
    kind : str
        One of ``gaussian``, ``sinc2``, ``tophat``.
    center_nm : float
        Center wavelength in nm.
    fwhm_nm : float
        Full width at half maximum in nm (for ``tophat`` this is the full
        width of the rectangle).
    total : float
        Normalization: the integral of the density over all wavelengths,
        in pairs per second (or 1.0 for a unit-normalized spectrum).
    """

    kind: str
    center_nm: float
    fwhm_nm: float
    total: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}, expected one of {SPECTRUM_KINDS}")
        require_wavelength(self.center_nm, "spectrum center")
        if not math.isfinite(self.fwhm_nm) or self.fwhm_nm <= 0.0:
            raise ValueError(f"spectrum fwhm must be finite and > 0 nm, got {self.fwhm_nm!r}")
        if not math.isfinite(self.total) or self.total < 0.0:
            raise ValueError(f"spectrum total must be finite and >= 0, got {self.total!r}")

    def density(self, wavelength_nm: float) -> float:
        """Spectral density at one wavelength, in units of total per nm."""
        x = wavelength_nm - self.center_nm
        if self.kind == "gaussian":
            sigma = self.fwhm_nm / FWHM_SIGMA_RATIO
            return self.total * math.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        if self.kind == "sinc2":
            a = 2.0 * _SINC2_HALF_POWER / self.fwhm_nm
            u = a * x
            s = 1.0 if u == 0.0 else math.sin(u) / u
            return self.total * (a / math.pi) * s * s
        half = 0.5 * self.fwhm_nm
        return self.total / self.fwhm_nm if -half <= x <= half else 0.0

    def _cdf(self, wavelength_nm: float) -> float:
        """Cumulative integral of the unit-normalized density up to wavelength_nm."""
        x = wavelength_nm - self.center_nm
        if self.kind == "gaussian":
            sigma = self.fwhm_nm / FWHM_SIGMA_RATIO
            return 0.5 * (1.0 + math.erf(x / (sigma * math.sqrt(2.0))))
        if self.kind == "sinc2":
            a = 2.0 * _SINC2_HALF_POWER / self.fwhm_nm
            u = a * x
            if u == 0.0:
                return 0.5
            si, _ = sici(2.0 * abs(u))
            tail = (si - math.sin(abs(u)) ** 2 / abs(u)) / math.pi
            return 0.5 + math.copysign(tail, u)
        half = 0.5 * self.fwhm_nm
        if x <= -half:
            return 0.0
        if x >= half:
            return 1.0
        return (x + half) / self.fwhm_nm


def integrate_band(shape: SpectralShape, lo_nm: float, hi_nm: float) -> float:
    """Integral of the spectral density over [lo_nm, hi_nm].

    Exact closed-form band integrals (error function for gaussian, sine
    integral for sinc2, linear for tophat); result is clamped to
    [0, shape.total].
    """
    if not (math.isfinite(lo_nm) and math.isfinite(hi_nm)):
        raise ValueError("band edges must be finite")
    if lo_nm >= hi_nm:
        raise ValueError(f"band must satisfy lo < hi, got [{lo_nm!r}, {hi_nm!r}]")
    frac = shape._cdf(hi_nm) - shape._cdf(lo_nm)
    return min(max(frac * shape.total, 0.0), shape.total)


def band_fraction(shape: SpectralShape, lo_nm: float, hi_nm: float) -> float:
    """Fraction of the spectrum falling inside [lo_nm, hi_nm], in [0, 1]."""
    if shape.total == 0.0:
        # Normalization carries no information; the shape still defines a pdf.
        unit = SpectralShape(shape.kind, shape.center_nm, shape.fwhm_nm, 1.0)
        return integrate_band(unit, lo_nm, hi_nm)
    return integrate_band(shape, lo_nm, hi_nm) / shape.total
