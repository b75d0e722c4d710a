#!/usr/bin/env python3
"""Recompute the pinned reference numbers from first principles.

Every hard-coded expectation used in the tests is rederived here with
generic numerics (scipy quadrature, root finding, plain arithmetic) and
compared against the package's closed forms. Exits nonzero on any
disagreement, so this doubles as a standalone cross-check:

    python3 scripts/oracle_check.py
"""
import math
import sys

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erf

from qlink.coincidence import singles_rate, window_acceptance, DetectorSpec
from qlink.core import SpectralShape, integrate_band, wavelength_to_frequency
from qlink.demux import conjugate_wavelength, max_pairs_in_span
from qlink.qkd import KeyRateParams, binary_entropy, secure_fraction, skr_channel

CHECKS = []


def check(label, got, want, tol=1e-12):
    ok = math.isclose(got, want, rel_tol=tol, abs_tol=tol)
    CHECKS.append(ok)
    print(f"{'ok ' if ok else 'BAD'} {label:46s} {got!r} vs {want!r}")


def main():
    # frequency of a 810 nm photon, THz
    check("wavelength_to_frequency(810)", wavelength_to_frequency(810.0), 299792.458 / 810.0)

    # energy conservation: 1/pump = 1/signal + 1/idler
    idler = conjugate_wavelength(809.0, 405.0)
    check("conjugate solves the energy budget", 1.0 / 405.0, 1.0 / 809.0 + 1.0 / idler)
    check("conjugate(809 | pump 405)", idler, 811.00247524752475)

    # window acceptance is the integral of the coincidence-time spread
    sigma = math.hypot(0.4, 0.4)
    direct, _ = quad(
        lambda t: math.exp(-t * t / (2 * sigma * sigma)) / (sigma * math.sqrt(2 * math.pi)),
        -0.5, 0.5,
    )
    check("window_acceptance(1.0, 0.4, 0.4)", window_acceptance(1.0, 0.4, 0.4), direct, tol=1e-10)
    check("erf form at 3 ns", window_acceptance(3.0, 0.4, 0.4), float(erf(1.875)))

    # band integral of the 11 nm gaussian over a centered 75 pm channel
    shape = SpectralShape("gaussian", 810.44, 11.0)
    direct, _ = quad(shape.density, 810.44 - 0.0375, 810.44 + 0.0375)
    check("75 pm band at the peak", integrate_band(shape, 810.44 - 0.0375, 810.44 + 0.0375), direct, tol=1e-10)

    # dead-time corrected singles
    det = DetectorSpec(efficiency=0.5, jitter_sigma_ns=0.4, dead_time_ns=25.0, dark_rate_cps=100.0)
    raw = 1e6 * 0.24 + 100.0
    check("non-paralyzable singles", singles_rate(1e6, 0.24, det), raw / (1.0 + raw * 25e-9))

    # entropy and the key-rate chain
    check("h(0.05)", binary_entropy(0.05),
          -(0.05 * math.log2(0.05) + 0.95 * math.log2(0.95)))
    check("secure fraction at 5% error", secure_fraction(0.05), 1.0 - 2.1 * binary_entropy(0.05))
    # qber(0.99, 1e6, 1e5) = (1e6*0.005 + 5e4) / 1.1e6 = 0.05 exactly
    check("worked key rate", skr_channel(1e6, 1e5, 0.99), 0.5 * 1.1e6 * (1.0 - 2.1 * binary_entropy(0.05)))

    # where the ideal-reconciliation key vanishes: h(e) = 1/2
    ideal = KeyRateParams(sifting_factor=0.5, error_correction_inefficiency=1.0)
    crossing = brentq(lambda e: binary_entropy(e) - 0.5, 0.01, 0.49, xtol=1e-12)
    check("key-vanishing error rate", crossing, 0.11002786443835955, tol=1e-9)
    assert secure_fraction(crossing + 1e-6, ideal) == 0.0

    # grid capacity in an 11 nm one-sided span: pitch 375 pm, half band 37.5 pm
    by_hand = math.floor((11.0 - 0.0375) / 0.375 + 0.5)
    check("pairs in an 11 nm span", float(max_pairs_in_span(11.0, 75.0, 300.0)), float(by_hand))

    # brightness chain: generated rate through two 24% arms
    check("two-arm detected pair rate", 9.55e7 * 0.24 * 0.24, 5500800.0)

    bad = CHECKS.count(False)
    print(f"{len(CHECKS) - bad}/{len(CHECKS)} reference values agree")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
