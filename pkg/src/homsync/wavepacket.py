"""Pulse envelopes, width conversions and the spectral coherence-length relation.

Units: durations in ps, path lengths in mm, wavelengths in nm, spectral
widths in pm. Conversions happen only inside the functions below.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from homsync.errors import UnsupportedShapeError

SPEED_OF_LIGHT_MM_PER_PS = 0.299792458
GAUSSIAN_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
COHERENCE_PREFACTOR = 0.44


class ShapeFamily(str, enum.Enum):
    GAUSSIAN = "gaussian"
    SECH2 = "sech2"
    DELTA = "delta"


@dataclass(frozen=True)
class PulseShape:
    """Intensity envelope of a pulse: a shape family and its intensity FWHM."""

    family: ShapeFamily
    fwhm: float  # ps

    def __post_init__(self):
        object.__setattr__(self, "family", ShapeFamily(self.family))
        if not self.fwhm >= 0:
            raise ValueError(f"fwhm must be >= 0, got {self.fwhm}")
        if self.family is ShapeFamily.DELTA and self.fwhm != 0:
            raise ValueError("a delta pulse has zero width")

    @classmethod
    def gaussian(cls, fwhm: float) -> PulseShape:
        return cls(ShapeFamily.GAUSSIAN, fwhm)

    @classmethod
    def sech2(cls, fwhm: float) -> PulseShape:
        return cls(ShapeFamily.SECH2, fwhm)

    @classmethod
    def delta(cls) -> PulseShape:
        return cls(ShapeFamily.DELTA, 0.0)


@dataclass(frozen=True)
class Spectrum:
    center_wavelength: float  # nm
    fwhm_bandwidth: float  # pm

    def __post_init__(self):
        if not self.center_wavelength > 0:
            raise ValueError("center_wavelength must be > 0")
        if not self.fwhm_bandwidth > 0:
            raise ValueError("fwhm_bandwidth must be > 0")


def fwhm_to_sigma(fwhm: float, family: ShapeFamily = ShapeFamily.GAUSSIAN) -> float:
    if ShapeFamily(family) is not ShapeFamily.GAUSSIAN:
        raise UnsupportedShapeError(f"no sigma defined for {family!s}")
    if fwhm < 0:
        raise ValueError("fwhm must be >= 0")
    return fwhm / GAUSSIAN_FWHM_PER_SIGMA


def sigma_to_fwhm(sigma: float) -> float:
    return sigma * GAUSSIAN_FWHM_PER_SIGMA


def delay_length_to_time(path_length_mm: float) -> float:
    """Free-space delay-line length (mm) to time (ps)."""
    return path_length_mm / SPEED_OF_LIGHT_MM_PER_PS


def time_to_delay_length(t_ps: float) -> float:
    return t_ps * SPEED_OF_LIGHT_MM_PER_PS


def coherence_length(spectrum: Spectrum) -> float:
    """Coherence length in mm of a transform-limited Gaussian spectrum."""
    lam_mm = spectrum.center_wavelength * 1e-6
    dlam_mm = spectrum.fwhm_bandwidth * 1e-9
    if dlam_mm <= 0:
        raise ValueError("zero bandwidth has no finite coherence length")
    return COHERENCE_PREFACTOR * lam_mm**2 / dlam_mm


def coherence_time(spectrum: Spectrum) -> float:
    """Coherence time in ps, 0.44 * lambda0**2 / (dlambda * c)."""
    return delay_length_to_time(coherence_length(spectrum))


@lru_cache(maxsize=None)
def sech2_fwhm_per_tau() -> float:
    """FWHM of sech(t/tau0)**2 in units of tau0, found by root solving."""
    half = brentq(lambda x: 1.0 / math.cosh(x) ** 2 - 0.5, 0.0, 5.0, xtol=1e-15)
    return 2.0 * half


def sech2_tau(fwhm: float) -> float:
    return fwhm / sech2_fwhm_per_tau()


def envelope_amplitude(pulse: PulseShape, t):
    """Real field envelope psi(t) with unit-normalised |psi|**2.

    The Gaussian uses psi = (sigma*sqrt(2pi))**-1/2 * exp(-t**2 / (4 sigma**2)),
    so |psi|**2 is a normal density of standard deviation sigma.
    """
    t = np.asarray(t, dtype=float)
    if pulse.family is ShapeFamily.DELTA:
        raise UnsupportedShapeError("delta pulses have no pointwise envelope")
    if pulse.fwhm <= 0:
        raise ValueError("envelope needs fwhm > 0")
    if pulse.family is ShapeFamily.GAUSSIAN:
        sigma = fwhm_to_sigma(pulse.fwhm)
        return np.exp(-(t**2) / (4.0 * sigma**2)) / math.sqrt(sigma * math.sqrt(2.0 * math.pi))
    tau = sech2_tau(pulse.fwhm)
    return 1.0 / np.cosh(t / tau) / math.sqrt(2.0 * tau)


def intensity(pulse: PulseShape, t):
    return envelope_amplitude(pulse, t) ** 2


def measure_fwhm(x, y) -> float:
    """FWHM of a sampled single-peaked curve by linear interpolation of the half-max crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peak = int(np.argmax(y))
    half = y[peak] / 2.0
    left = np.nonzero(y[:peak] < half)[0]
    right = np.nonzero(y[peak:] < half)[0]
    if len(left) == 0 or len(right) == 0:
        raise ValueError("curve does not fall below half maximum on both sides")
    i = left[-1]
    j = peak + right[0]
    xl = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    xr = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(xr - xl)


def sample_intensity(pulse: PulseShape, rng: np.random.Generator, size) -> np.ndarray:
    """Draw arrival times (ps) distributed as the pulse intensity |psi(t)|**2."""
    if pulse.family is ShapeFamily.DELTA or pulse.fwhm == 0:
        return np.zeros(size)
    if pulse.family is ShapeFamily.GAUSSIAN:
        return rng.normal(0.0, fwhm_to_sigma(pulse.fwhm), size)
    # sech^2 intensity has CDF (1 + tanh(t/tau)) / 2
    u = rng.random(size) + 2.0**-54  # keep u strictly inside (0, 1)
    return sech2_tau(pulse.fwhm) * np.arctanh(2.0 * u - 1.0)
