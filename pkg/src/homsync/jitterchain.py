"""Timing-noise budget of the master/slave synchronization line.

Independent Gaussian jitter contributions add in quadrature. The fiber link
adds two effects: excess trigger jitter that grows with optical loss, and a
slow thermal drift of the optical path length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from homsync.errors import InconsistentWidthsError, ToleranceUnreachableError
from homsync.wavepacket import delay_length_to_time

NEVER = math.inf
SECONDS_PER_DAY = 86400.0
UNDERGROUND_FIBER_DRIFT = 1e-5


@dataclass(frozen=True)
class JitterStage:
    name: str
    fwhm_jitter: float  # ps
    distribution: str = "gaussian"

    def __post_init__(self):
        if not self.fwhm_jitter >= 0:
            raise ValueError(f"stage {self.name!r}: fwhm_jitter must be >= 0")
        if self.distribution != "gaussian":
            raise ValueError(f"unsupported jitter distribution {self.distribution!r}")


@dataclass(frozen=True)
class FiberLink:
    length: float  # km
    loss_coefficient: float = 0.0  # dB/km
    thermal_coefficient: float = UNDERGROUND_FIBER_DRIFT  # 1/K

    def __post_init__(self):
        if self.length < 0 or self.loss_coefficient < 0:
            raise ValueError("fiber length and loss must be >= 0")
        if not self.thermal_coefficient > 0:
            raise ValueError("thermal_coefficient must be > 0")

    @property
    def total_loss_db(self) -> float:
        return self.length * self.loss_coefficient


@dataclass(frozen=True)
class SyncChain:
    stages: tuple[JitterStage, ...] = ()
    link: Optional[FiberLink] = None

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))


@dataclass(frozen=True)
class LossJitterModel:
    """Excess trigger jitter vs. link loss, j(L) = scale * (10**(L/10) - 1).

    The detector SNR drops linearly with received power, so jitter grows with
    the inverse transmission. ``scale`` must be calibrated per photodetector.
    Pass ``curve`` to substitute any other monotone function of loss in dB.
    """

    scale: float = 1.0  # ps
    curve: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be finite and positive")

    def __call__(self, loss_db: float) -> float:
        if loss_db <= 0:
            return 0.0
        if self.curve is not None:
            return float(self.curve(loss_db))
        return self.scale * (10.0 ** (loss_db / 10.0) - 1.0)


@dataclass(frozen=True)
class DiurnalProfile:
    """Sinusoidal daily path-length swing, amplitude = length * fractional_amplitude."""

    period: float = SECONDS_PER_DAY  # s
    fractional_amplitude: float = UNDERGROUND_FIBER_DRIFT

    def __post_init__(self):
        if not (self.period > 0 and self.fractional_amplitude > 0):
            raise ValueError("profile needs positive period and amplitude")

    def amplitude(self, link: FiberLink) -> float:
        """Drift amplitude in ps for the given link."""
        return delay_length_to_time(link.length * 1e6 * self.fractional_amplitude)

    def max_rate(self, link: FiberLink) -> float:
        """Peak drift rate in ps/s, pi * amplitude / (period / 2)."""
        return math.pi * self.amplitude(link) / (self.period / 2.0)


def compose_quadrature(widths: Sequence[float]) -> float:
    widths = list(widths)
    if any(w < 0 for w in widths):
        raise ValueError("widths must be non-negative")
    return math.sqrt(math.fsum(w * w for w in widths))


def extract_component(total: float, known: Sequence[float]) -> float:
    """Width of the one unknown contribution hidden in a quadrature total."""
    rest = total * total - math.fsum(k * k for k in known)
    if rest < 0:
        # tiny negatives are rounding, not inconsistency
        if rest > -1e-12 * total * total:
            return 0.0
        raise InconsistentWidthsError(
            f"total {total} ps is narrower than the known components {list(known)}"
        )
    return math.sqrt(rest)


def loss_excess_jitter(link: FiberLink, model: LossJitterModel) -> float:
    return model(link.total_loss_db)


def thermal_drift(link: FiberLink, delta_T: float) -> float:
    """Delay change in ps for a temperature change delta_T (K)."""
    return delay_length_to_time(link.length * 1e6 * link.thermal_coefficient * delta_T)


def stabilization_interval(
    link: FiberLink, tolerance: float, drift_profile: DiurnalProfile = DiurnalProfile()
) -> float:
    """Longest time (s) between path-length corrections keeping drift below ``tolerance``.

    Uses the profile's peak drift rate, so the answer is conservative. Returns
    ``NEVER`` (inf) when the full peak-to-peak swing stays within tolerance.
    """
    if not tolerance > 0:
        raise ToleranceUnreachableError("tolerance must be positive; any drift exceeds it")
    amplitude = drift_profile.amplitude(link)
    if amplitude == 0 or tolerance >= 2.0 * amplitude:
        return NEVER
    return tolerance / drift_profile.max_rate(link)


def chain_total_jitter(chain: SyncChain, model: Optional[LossJitterModel] = None) -> float:
    widths = [s.fwhm_jitter for s in chain.stages]
    if chain.link is not None and model is not None:
        widths.append(loss_excess_jitter(chain.link, model))
    return compose_quadrature(widths)
