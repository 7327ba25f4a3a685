"""Pulsed SPDC photon-pair source: filtered coherence, pair-number statistics, emission timing."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from homsync.errors import FilterTooWideError, UnsupportedStatisticsError
from homsync.wavepacket import (
    PulseShape,
    ShapeFamily,
    Spectrum,
    coherence_time,
    fwhm_to_sigma,
    sample_intensity,
)


class PairStatistics(str, enum.Enum):
    THERMAL = "thermal"  # single-mode SPDC, geometric photon number
    POISSON = "poisson"  # many-mode limit
    SINGLE = "single"  # ideal source: zero or exactly one photon


def mean_pair_number(p: float, statistics: PairStatistics) -> float:
    """Mean photon number mu for which P(n >= 1) equals ``p``."""
    statistics = PairStatistics(statistics)
    _check_probability(p)
    if statistics is PairStatistics.THERMAL:
        return p / (1.0 - p)
    if statistics is PairStatistics.POISSON:
        return -math.log1p(-p)
    return p


def pair_number_pmf(p: float, statistics: PairStatistics, n_max: int) -> np.ndarray:
    """P(n) for n = 0..n_max (not renormalised after truncation)."""
    statistics = PairStatistics(statistics)
    _check_probability(p)
    n = np.arange(n_max + 1)
    if statistics is PairStatistics.THERMAL:
        return (1.0 - p) * p**n
    if statistics is PairStatistics.POISSON:
        mu = mean_pair_number(p, statistics)
        return np.array([math.exp(-mu) * mu**k / math.factorial(k) for k in n])
    out = np.zeros(n_max + 1)
    out[0] = 1.0 - p
    if n_max >= 1:
        out[1] = p
    return out


def _check_probability(p: float) -> None:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"pair probability must be in [0, 1), got {p}")


@dataclass(frozen=True)
class PhotonSource:
    pump: PulseShape
    pump_spectrum: Spectrum  # after the pump bandpass filter
    signal_filter: Spectrum
    pair_probability: float = 0.1
    statistics: PairStatistics = PairStatistics.THERMAL

    def __post_init__(self):
        object.__setattr__(self, "statistics", PairStatistics(self.statistics))
        _check_probability(self.pair_probability)

    @property
    def idler_wavelength(self) -> float:
        """Idler center (nm) from energy conservation; idlers are not detected."""
        inv = 1.0 / self.pump_spectrum.center_wavelength - 1.0 / self.signal_filter.center_wavelength
        return 1.0 / inv


@dataclass(frozen=True)
class EmittedPhoton:
    emission_time: float  # ps relative to the trigger
    coherence_fwhm: float  # ps
    spectral_center: float  # nm

    def __post_init__(self):
        if not self.coherence_fwhm > 0:
            raise ValueError("coherence_fwhm must be > 0")


def pump_coherence(source: PhotonSource) -> float:
    return coherence_time(source.pump_spectrum)


def effective_pump(source: PhotonSource) -> PulseShape:
    """Pump envelope after its bandpass filter.

    A filter narrower than the pulse spectrum stretches it to a transform-limited
    Gaussian of the filter's coherence time; otherwise the pulse is unchanged.
    """
    tc = pump_coherence(source)
    if tc > source.pump.fwhm:
        return PulseShape.gaussian(tc)
    return source.pump


def filtered_coherence(source: PhotonSource) -> float:
    """Coherence time of the detected signal photons.

    The signal spectrum is the narrower of its own filter and the band allowed
    by the pump (which maps to the pump coherence time).
    """
    tc = max(coherence_time(source.signal_filter), pump_coherence(source))
    pulse = effective_pump(source).fwhm
    if tc < pulse:
        raise FilterTooWideError(
            f"signal coherence {tc:.3g} ps is shorter than the {pulse:.3g} ps pump pulse"
        )
    return tc


def sample_pair_count(source: PhotonSource, rng: np.random.Generator, size=None):
    p = source.pair_probability
    if source.statistics is PairStatistics.THERMAL:
        # numpy's geometric counts trials to first success (>= 1)
        return rng.geometric(1.0 - p, size) - 1
    if source.statistics is PairStatistics.POISSON:
        return rng.poisson(mean_pair_number(p, source.statistics), size)
    return (rng.random(size) < p).astype(np.int64)


def sample_emission_time(
    source: PhotonSource, trigger_jitter: float, rng: np.random.Generator, size=None
):
    """Emission time = trigger jitter draw + draw from the pump intensity envelope."""
    shape = () if size is None else size
    trig = rng.normal(0.0, fwhm_to_sigma(trigger_jitter), shape) if trigger_jitter > 0 else np.zeros(shape)
    t = trig + sample_intensity(effective_pump(source), rng, shape)
    return float(t) if size is None else t


def emit(source: PhotonSource, trigger_jitter: float, rng: np.random.Generator) -> list[EmittedPhoton]:
    """Signal photons of one pump pulse; all pairs share one temporal mode."""
    n = int(sample_pair_count(source, rng))
    if n == 0:
        return []
    t = sample_emission_time(source, trigger_jitter, rng)
    tc = filtered_coherence(source)
    return [EmittedPhoton(t, tc, source.signal_filter.center_wavelength) for _ in range(n)]


def multipair_visibility_cap(statistics: PairStatistics, pair_probability: float = 0.0) -> float:
    """Maximum HOM visibility of two identical, perfectly overlapping sources.

    Evaluated by photon-number enumeration; ``pair_probability=0`` gives the
    weak-pumping limit (1/3 for thermal sources).
    """
    from homsync.hom_engine import enumerate_multipair_visibility

    try:
        statistics = PairStatistics(statistics)
    except ValueError:
        raise UnsupportedStatisticsError(f"unknown pair statistics {statistics!r}") from None
    return enumerate_multipair_visibility(pair_probability, pair_probability, statistics, 1.0)


def source_from_wavelengths(
    pump_fwhm: float,
    pump_center: float,
    pump_filter: float,
    signal_center: float,
    signal_filter: float,
    pair_probability: float = 0.1,
    statistics: PairStatistics = PairStatistics.THERMAL,
    pump_family: ShapeFamily = ShapeFamily.GAUSSIAN,
) -> PhotonSource:
    return PhotonSource(
        pump=PulseShape(pump_family, pump_fwhm),
        pump_spectrum=Spectrum(pump_center, pump_filter),
        signal_filter=Spectrum(signal_center, signal_filter),
        pair_probability=pair_probability,
        statistics=statistics,
    )
