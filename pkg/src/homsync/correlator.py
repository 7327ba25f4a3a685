"""Intensity auto-/cross-correlation of pulse trains through an SFG coincidence gate.

The sum-frequency crystal is treated as an ideal instantaneous AND gate: a
blue photon is produced only when the two pulses overlap in time, so the
counted signal versus delay line position is the cross-correlation of the
two intensity envelopes, broadened by the relative trigger jitter.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import fftconvolve

from homsync.errors import FitDivergedError, InsufficientDataError, UnsupportedShapeError
from homsync.jitterchain import compose_quadrature
from homsync.wavepacket import (
    PulseShape,
    ShapeFamily,
    fwhm_to_sigma,
    intensity,
    measure_fwhm,
    sample_intensity,
)


class FitModel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    SECH2_AUTOCORR = "sech2_autocorr"


@dataclass
class CorrelationHistogram:
    bin_edges: np.ndarray  # ps
    counts: np.ndarray
    shots: int

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts)
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValueError("need len(bin_edges) == len(counts) + 1")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin_edges must be strictly increasing")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["delay_ps", "counts"])
            for x, c in zip(self.centers, self.counts):
                w.writerow([f"{x:.6f}", f"{c}"])


@dataclass(frozen=True)
class FitResult:
    fwhm: float
    fwhm_error: float
    model: FitModel
    goodness: float  # reduced chi-square
    center: float = 0.0
    amplitude: float = 0.0
    baseline: float = 0.0


def edges_from_delays(delays: Sequence[float]) -> np.ndarray:
    """Bin edges halfway between consecutive delay points."""
    d = np.asarray(delays, dtype=float)
    if d.ndim != 1 or len(d) < 2:
        raise ValueError("need at least two delay points")
    if np.any(np.diff(d) <= 0):
        raise ValueError("delays must be strictly increasing")
    mid = 0.5 * (d[1:] + d[:-1])
    return np.concatenate([[d[0] - (mid[0] - d[0])], mid, [d[-1] + (d[-1] - mid[-1])]])


@lru_cache(maxsize=None)
def sech2_autocorr_factor() -> float:
    """Intensity-autocorrelation FWHM of a sech^2 pulse over its own FWHM.

    Obtained by numerically self-convolving a sampled sech^2 profile.
    """
    pulse = PulseShape.sech2(1.0)
    dt = 1e-3
    t = np.arange(-30.0, 30.0 + dt / 2, dt)
    i = intensity(pulse, t)
    ac = fftconvolve(i, i[::-1], mode="same")
    return measure_fwhm(t, ac)


def analytic_autocorr_fwhm(pulse: PulseShape) -> float:
    if pulse.family is ShapeFamily.DELTA:
        return 0.0
    if pulse.family is ShapeFamily.GAUSSIAN:
        return pulse.fwhm * math.sqrt(2.0)
    if pulse.family is ShapeFamily.SECH2:
        return pulse.fwhm * sech2_autocorr_factor()
    raise UnsupportedShapeError(str(pulse.family))


def analytic_crosscorr_fwhm(pulse_a: PulseShape, pulse_b: PulseShape, sync_jitter_fwhm: float) -> float:
    """Gaussian-approximation cross-correlation width (exact for Gaussians only)."""
    return compose_quadrature([pulse_a.fwhm, pulse_b.fwhm, sync_jitter_fwhm])


def simulate_correlation(
    pulse_a: PulseShape,
    pulse_b: PulseShape,
    jitter: float,
    delays: Sequence[float],
    shots_per_delay: int,
    seed: int,
) -> CorrelationHistogram:
    """Scan the delay line and count SFG events at each position.

    Each shot draws the two pulses' photon arrival times and a trigger jitter;
    it registers a count at delay ``d`` when the relative offset falls inside
    the acceptance window around ``d`` (half way to the neighbouring points).
    Delay point ``i`` uses the ``i``-th child of ``SeedSequence(seed)``.
    """
    if shots_per_delay < 1:
        raise ValueError("shots_per_delay must be >= 1")
    edges = edges_from_delays(delays)
    n = len(edges) - 1
    sigma_j = fwhm_to_sigma(jitter)
    counts = np.zeros(n, dtype=np.int64)
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(n)):
        rng = np.random.default_rng(ss)
        offset = (
            sample_intensity(pulse_a, rng, shots_per_delay)
            - sample_intensity(pulse_b, rng, shots_per_delay)
            - rng.normal(0.0, sigma_j, shots_per_delay)
        )
        counts[i] = np.count_nonzero((offset >= edges[i]) & (offset < edges[i + 1]))
    return CorrelationHistogram(edges, counts, shots_per_delay * n)


def _gaussian_peak(x, amp, x0, fwhm, base):
    return amp * np.exp(-4.0 * math.log(2.0) * (x - x0) ** 2 / fwhm**2) + base


def sech2_autocorr_shape(u):
    """Normalised intensity autocorrelation of sech^2, 3(u coth u - 1)/sinh^2 u."""
    u = np.abs(np.asarray(u, dtype=float))
    small = u < 1e-3
    us = np.where(small, 1.0, np.minimum(u, 300.0))
    exact = 3.0 * (us / np.tanh(us) - 1.0) / np.sinh(us) ** 2
    return np.where(small, 1.0 - 0.4 * u**2, exact)


@lru_cache(maxsize=None)
def _sech2_autocorr_shape_fwhm() -> float:
    u = np.linspace(-6.0, 6.0, 120001)
    return measure_fwhm(u, sech2_autocorr_shape(u))


def _sech2_peak(x, amp, x0, fwhm, base):
    return amp * sech2_autocorr_shape((x - x0) * _sech2_autocorr_shape_fwhm() / fwhm) + base


_MODELS = {FitModel.GAUSSIAN: _gaussian_peak, FitModel.SECH2_AUTOCORR: _sech2_peak}


def fit_fwhm(hist: CorrelationHistogram, model: FitModel = FitModel.GAUSSIAN) -> FitResult:
    """Weighted least-squares peak fit with free amplitude, center, width and baseline."""
    model = FitModel(model)
    x = hist.centers
    y = np.asarray(hist.counts, dtype=float)
    if np.count_nonzero(y) < 5:
        raise InsufficientDataError("fit needs at least 5 nonempty bins")
    sigma = np.sqrt(np.maximum(y, 1.0))
    base0 = float(np.min(y))
    amp0 = float(np.max(y)) - base0
    x00 = float(x[np.argmax(y)])
    above = np.count_nonzero(y - base0 > amp0 / 2)
    span = float(x[-1] - x[0])
    width0 = float(np.clip(above * span / max(len(x) - 1, 1), span * 1e-3, span))
    f = _MODELS[model]
    try:
        popt, pcov = curve_fit(
            f,
            x,
            y,
            p0=[amp0, x00, width0, base0],
            sigma=sigma,
            absolute_sigma=True,
            bounds=([0.0, x[0], span * 1e-4, -np.inf], [np.inf, x[-1], 20.0 * span, np.inf]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitDivergedError(str(exc)) from exc
    perr = np.sqrt(np.diag(pcov))
    if not np.all(np.isfinite(popt)) or not np.isfinite(perr[2]):
        raise FitDivergedError("fit covariance is not finite")
    resid = (y - f(x, *popt)) / sigma
    dof = max(len(x) - 4, 1)
    return FitResult(
        fwhm=float(popt[2]),
        fwhm_error=float(perr[2]),
        model=model,
        goodness=float(resid @ resid / dof),
        center=float(popt[1]),
        amplitude=float(popt[0]),
        baseline=float(popt[3]),
    )


__all__ = [
    "CorrelationHistogram",
    "FitModel",
    "FitResult",
    "analytic_autocorr_fwhm",
    "analytic_crosscorr_fwhm",
    "fit_fwhm",
    "sech2_autocorr_factor",
    "simulate_correlation",
]
