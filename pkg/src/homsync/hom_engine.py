"""Two-photon interference at a 50/50 beamsplitter.

Closed forms for Gaussian wavepackets separated by a delay tau:

    P(tau)   = 2 (1 - exp(-tau**2 / (4 sigma**2)))     non-bunching probability
    V(tau)   = exp(-tau**2 / (4 sigma**2))             pointwise visibility
    Vbar(r)  = 1 / sqrt(1 + r**2 / 2)                  averaged over Gaussian jitter

where sigma is the intensity standard deviation of the wavepacket and r the
ratio of jitter FWHM to coherence FWHM. Each closed form has a numerical
oracle next to it (``*_numeric``) that the tests compare against.

Multi-photon events are handled by exact Fock-space enumeration: every photon
from source A enters port a in temporal mode A, every photon from source B
enters port b in a mode with squared overlap M with mode A.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve

from homsync.errors import TruncationWarning
from homsync.jitterchain import compose_quadrature
from homsync.pairsource import PairStatistics, pair_number_pmf
from homsync.wavepacket import (
    GAUSSIAN_FWHM_PER_SIGMA,
    PulseShape,
    envelope_amplitude,
    fwhm_to_sigma,
    measure_fwhm,
    sigma_to_fwhm,
)

# rows: input ports (a, b); columns: output ports (c, d)
BEAMSPLITTER = np.array([[1j, 1.0], [1.0, 1j]]) / math.sqrt(2.0)
TRUNCATION_BOUND = 1e-3


@dataclass(frozen=True)
class JitterRatio:
    """Relative-delay jitter measured in units of the photon coherence time.

    ``r_j`` is jitter FWHM / coherence FWHM. Because both widths carry the same
    FWHM-to-sigma factor, the variance-form ratio ``sigma_delta`` (jitter std in
    units of the wavepacket sigma) is numerically the same number.
    """

    r_j: float

    def __post_init__(self):
        if not self.r_j >= 0:
            raise ValueError("r_j must be >= 0")

    @property
    def sigma_delta(self) -> float:
        return self.r_j

    @classmethod
    def from_widths(cls, jitter_fwhm: float, coherence_fwhm: float) -> JitterRatio:
        if coherence_fwhm <= 0:
            raise ValueError("coherence_fwhm must be > 0")
        return cls(jitter_fwhm / coherence_fwhm)

    @classmethod
    def from_sigmas(cls, jitter_sigma: float, wavepacket_sigma: float) -> JitterRatio:
        return cls(jitter_sigma / wavepacket_sigma)


@dataclass(frozen=True)
class DipPrediction:
    expected_visibility: float
    dip_fwhm: float  # ps
    visibility_cap: float
    jitter_visibility: float = 1.0


def beamsplitter_transform(input_mode: str) -> dict[str, complex]:
    """Output-mode amplitudes of one creation operator: a -> (i c + d)/sqrt2, b -> (c + i d)/sqrt2."""
    row = {"a": 0, "b": 1}[input_mode]
    return {"c": complex(BEAMSPLITTER[row, 0]), "d": complex(BEAMSPLITTER[row, 1])}


def two_photon_amplitudes() -> dict[str, complex]:
    """Coefficients of c+c+, d+d+ and c+d+ in the image of a+b+ (identical photons).

    The c+d+ term collects a->c, b->d and a->d, b->c, which cancel exactly.
    """
    u = BEAMSPLITTER
    return {
        "cc": complex(u[0, 0] * u[1, 0]),
        "dd": complex(u[0, 1] * u[1, 1]),
        "cd": complex(u[0, 0] * u[1, 1] + u[0, 1] * u[1, 0]),
    }


def nonbunching_probability(tau, sigma: float):
    """Non-bunching probability P(tau), normalised to run from 0 at tau = 0 to 2 at large tau."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return 2.0 * (1.0 - np.exp(-np.square(tau) / (4.0 * sigma**2)))


def nonbunching_probability_numeric(tau: float, sigma: float, points_per_sigma: int = 20) -> float:
    """Brute-force double integral of |psi(ta)psi(tb-tau) - psi(ta-tau)psi(tb)|**2."""
    pulse = PulseShape.gaussian(sigma_to_fwhm(sigma))
    lo, hi = min(0.0, tau) - 12.0 * sigma, max(0.0, tau) + 12.0 * sigma
    t = np.linspace(lo, hi, int((hi - lo) / sigma * points_per_sigma) + 1)
    psi0 = envelope_amplitude(pulse, t)
    psit = envelope_amplitude(pulse, t - tau)
    amp = np.outer(psi0, psit) - np.outer(psit, psi0)
    inner = integrate.trapezoid(amp**2, t, axis=1)
    return float(integrate.trapezoid(inner, t))


def visibility_at(tau, sigma: float):
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return np.exp(-np.square(tau) / (4.0 * sigma**2))


def mode_overlap(tau, sigma_a: float, sigma_b: float):
    """Squared overlap |<psi_a|psi_b(tau)>|**2 of two Gaussian wavepackets.

    Reduces to ``visibility_at(tau, sigma)`` for equal widths.
    """
    s2 = sigma_a**2 + sigma_b**2
    return 2.0 * sigma_a * sigma_b / s2 * np.exp(-np.square(tau) / (2.0 * s2))


def _ratio(r: Union[JitterRatio, float]) -> float:
    return r.r_j if isinstance(r, JitterRatio) else JitterRatio(float(r)).r_j


def average_visibility(r: Union[JitterRatio, float]) -> float:
    r_j = _ratio(r)
    return 1.0 / math.sqrt(1.0 + 0.5 * r_j**2)


def average_visibility_numeric(r: Union[JitterRatio, float]) -> float:
    """Quadrature of rho(Delta) V(Delta) over the delay ratio Delta = tau / sigma."""
    s = JitterRatio(_ratio(r)).sigma_delta
    if s == 0:
        return 1.0

    # integrate in units of the jitter width, Delta = s * y, so narrow densities stay resolved
    def integrand(y):
        return math.exp(-y * y / 2) / math.sqrt(2 * math.pi) * math.exp(-(s * y) ** 2 / 4.0)

    val, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
    return val


def total_timing_jitter(pump_a_coherence: float, pump_b_coherence: float, sync_jitter: float) -> float:
    """Relative emission-time jitter of the two photons: both pump pulses plus the trigger line."""
    return compose_quadrature([pump_a_coherence, pump_b_coherence, sync_jitter])


def dip_fwhm(coherence_fwhm: float, jitter_fwhm: float) -> float:
    """FWHM in delay of the jitter-averaged dip, sqrt(2 c**2 + j**2)."""
    if coherence_fwhm <= 0:
        raise ValueError("coherence_fwhm must be > 0")
    return math.sqrt(2.0 * coherence_fwhm**2 + jitter_fwhm**2)


def dip_fwhm_numeric(coherence_fwhm: float, jitter_fwhm: float, step: float = 0.02) -> float:
    """Dip width from a sampled V(tau) convolved with the sampled jitter density."""
    sigma = fwhm_to_sigma(coherence_fwhm)
    half = 10.0 * (sigma + fwhm_to_sigma(jitter_fwhm)) + 10 * step
    tau = np.arange(-half, half + step / 2, step)
    v = visibility_at(tau, sigma)
    if jitter_fwhm > 0:
        sj = fwhm_to_sigma(jitter_fwhm)
        kernel = np.exp(-(tau**2) / (2 * sj**2))
        v = fftconvolve(v, kernel / kernel.sum(), mode="same")
    return measure_fwhm(tau, v)


# --- multi-photon enumeration -------------------------------------------------

@lru_cache(maxsize=4096)
def _same_mode_split(n_a: int, n_b: int) -> np.ndarray:
    """P(m_c) for n_a and n_b photons in one shared temporal mode.

    Expands (i c + d)**n_a (c + i d)**n_b; coefficient k multiplies c**k d**(N-k).
    """
    ca = np.array([math.comb(n_a, j) * 1j**j for j in range(n_a + 1)])
    cb = np.array([math.comb(n_b, j) * 1j ** (n_b - j) for j in range(n_b + 1)])
    coeff = np.convolve(ca, cb)
    n = n_a + n_b
    weight = np.array([math.factorial(k) * math.factorial(n - k) for k in range(n + 1)], dtype=float)
    norm = 2.0**n * math.factorial(n_a) * math.factorial(n_b)
    return np.abs(coeff) ** 2 * weight / norm


def _binomial_half(n: int) -> np.ndarray:
    return np.array([math.comb(n, k) for k in range(n + 1)], dtype=float) / 2.0**n


@lru_cache(maxsize=8192)
def _output_marginal(n_a: int, n_b: int, overlap: float) -> np.ndarray:
    # B's photons split binomially into k in mode A and n_b - k orthogonal;
    # the branches stay orthogonal behind the beamsplitter.
    out = np.zeros(n_a + n_b + 1)
    for k in range(n_b + 1):
        w = math.comb(n_b, k) * overlap**k * (1.0 - overlap) ** (n_b - k)
        if w == 0.0:
            continue
        out += w * np.convolve(_same_mode_split(n_a, k), _binomial_half(n_b - k))
    return out


def output_distribution(n_a: int, n_b: int, overlap: float) -> dict[tuple[int, int], float]:
    """Photon-number distribution {(m_c, m_d): p} behind the beamsplitter.

    ``overlap`` is the squared mode overlap M = |<A|B>|**2 in [0, 1].
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must be in [0, 1]")
    n = n_a + n_b
    marginal = _output_marginal(n_a, n_b, float(overlap))
    return {(m, n - m): float(p) for m, p in enumerate(marginal)}


def click_probabilities(
    n_a: int, n_b: int, overlap: float, efficiency: tuple[float, float] = (1.0, 1.0)
) -> tuple[float, float, float]:
    """(c only, d only, both) click probabilities for threshold detectors."""
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must be in [0, 1]")
    eta_c, eta_d = efficiency
    p = _output_marginal(n_a, n_b, float(overlap))
    m_c = np.arange(len(p))
    pc = 1.0 - (1.0 - eta_c) ** m_c
    pd = 1.0 - (1.0 - eta_d) ** (len(p) - 1 - m_c)
    return (
        float(p @ (pc * (1.0 - pd))),
        float(p @ ((1.0 - pc) * pd)),
        float(p @ (pc * pd)),
    )


def coincidence_probability(
    n_a: int, n_b: int, overlap: float, efficiency: tuple[float, float] = (1.0, 1.0)
) -> float:
    return click_probabilities(n_a, n_b, overlap, efficiency)[2]


@lru_cache(maxsize=4096)
def click_polynomials(n_a: int, n_b: int, efficiency: tuple[float, float] = (1.0, 1.0)) -> np.ndarray:
    """Click probabilities as polynomials in the overlap M, shape (3, degree + 1).

    Each outcome probability is a sum of M**k (1 - M)**(n_b - k) terms, so a
    degree-n_b fit through n_b + 1 nodes is exact. Coefficients are in
    ``np.polyval`` order.
    """
    deg = max(n_b, 0)
    nodes = 0.5 - 0.5 * np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    vals = np.array([click_probabilities(n_a, n_b, m, efficiency) for m in nodes])
    if deg == 0:
        return vals.T.copy()
    return np.stack([np.polyfit(nodes, vals[:, k], deg) for k in range(3)])


def _limit_weights(statistics: PairStatistics) -> dict[tuple[int, int], float]:
    """Relative weights of the two-photon configurations as p -> 0 (equal p)."""
    ratio = {PairStatistics.THERMAL: 1.0, PairStatistics.POISSON: 0.5, PairStatistics.SINGLE: 0.0}
    r = ratio[PairStatistics(statistics)]
    return {(1, 1): 1.0, (2, 0): r, (0, 2): r}


def _tail_bound(p: float, statistics: PairStatistics, max_pairs: int) -> float:
    return max(0.0, 1.0 - float(pair_number_pmf(p, statistics, max_pairs).sum()))


def converged_max_pairs(p_a: float, p_b: float, statistics: PairStatistics, limit: int = 30) -> int:
    """Smallest cutoff whose dropped mass is negligible next to the O(p**2) coincidence signal.

    Cutting at two pairs is not enough: the dropped n >= 3 terms are O(p**3)
    while the signal is O(p**2), a relative error of order p.
    """
    scale = max(min(p_a, p_b), 1e-12) ** 2
    for n in range(2, limit + 1):
        if _tail_bound(p_a, statistics, n) + _tail_bound(p_b, statistics, n) <= 1e-7 * scale:
            return n
    return limit


def enumerate_multipair_visibility(
    p_a: float,
    p_b: float,
    statistics: PairStatistics,
    overlap: float,
    max_pairs: Optional[int] = None,
    efficiency: tuple[float, float] = (1.0, 1.0),
) -> float:
    """HOM visibility including multi-pair emission, by exhaustive enumeration.

    Compares the coincidence probability at mode overlap ``overlap`` with the
    fully distinguishable case, summing over photon numbers up to
    ``max_pairs`` per source (default: converged cutoff). Both pair
    probabilities zero means the weak-pumping limit, where only two-photon
    events matter.
    """
    statistics = PairStatistics(statistics)
    for p in (p_a, p_b):
        if not 0.0 <= p < 0.5:
            raise ValueError("pair probability must be in [0, 0.5)")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must be in [0, 1]")

    if p_a == 0.0 and p_b == 0.0:
        weights = _limit_weights(statistics)
    else:
        if max_pairs is None:
            max_pairs = converged_max_pairs(p_a, p_b, statistics)
        bound = _tail_bound(p_a, statistics, max_pairs) + _tail_bound(p_b, statistics, max_pairs)
        if bound > TRUNCATION_BOUND * (1 + 1e-9):
            warnings.warn(
                f"dropped photon-number mass {bound:.2e} exceeds {TRUNCATION_BOUND:g}",
                TruncationWarning,
                stacklevel=2,
            )
        wa = pair_number_pmf(p_a, statistics, max_pairs)
        wb = pair_number_pmf(p_b, statistics, max_pairs)
        weights = {(i, j): wa[i] * wb[j] for i in range(max_pairs + 1) for j in range(max_pairs + 1)}

    far = sum(w * coincidence_probability(i, j, 0.0, efficiency) for (i, j), w in weights.items())
    near = sum(w * coincidence_probability(i, j, overlap, efficiency) for (i, j), w in weights.items())
    if far <= 0:
        raise ValueError("no coincidences possible for these sources")
    return (far - near) / far


def predict_dip(
    coherence_fwhm: float,
    jitter_fwhm: float,
    p_a: float,
    p_b: float,
    statistics: PairStatistics,
    overlap: float = 1.0,
) -> DipPrediction:
    """Expected net visibility (multi-pair cap x overlap x jitter average) and dip width."""
    cap = enumerate_multipair_visibility(p_a, p_b, statistics, 1.0)
    with_overlap = enumerate_multipair_visibility(p_a, p_b, statistics, overlap)
    vj = average_visibility(JitterRatio.from_widths(jitter_fwhm, coherence_fwhm))
    return DipPrediction(
        expected_visibility=with_overlap * vj,
        dip_fwhm=dip_fwhm(coherence_fwhm, jitter_fwhm),
        visibility_cap=cap,
        jitter_visibility=vj,
    )


__all__ = [
    "BEAMSPLITTER",
    "GAUSSIAN_FWHM_PER_SIGMA",
    "DipPrediction",
    "JitterRatio",
    "average_visibility",
    "average_visibility_numeric",
    "beamsplitter_transform",
    "click_polynomials",
    "click_probabilities",
    "coincidence_probability",
    "dip_fwhm",
    "dip_fwhm_numeric",
    "enumerate_multipair_visibility",
    "mode_overlap",
    "nonbunching_probability",
    "nonbunching_probability_numeric",
    "output_distribution",
    "predict_dip",
    "total_timing_jitter",
    "two_photon_amplitudes",
    "visibility_at",
]
