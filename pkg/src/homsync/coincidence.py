"""Monte Carlo of the two-source HOM experiment with TDC coincidence counting.

Per delay-line position the engine simulates ``pulses_per_point`` pump
periods. For each period it draws the pair number of both sources, the photon
emission times (pump envelope plus, for the slave source, the sync-chain
jitter), and the detector click pattern from the exact click probabilities of
``hom_engine`` at the sampled wavepacket overlap. Dark counts arrive uniformly
in time. The TDC pairs every click on detector c with every click on
detector d; coincidences in a window centred on zero delay are the raw
counts, and the same window placed half a period away (where no photon pairs
can land) measures the dark-count background that is subtracted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from homsync.correlator import CorrelationHistogram, edges_from_delays
from homsync.errors import BinningMismatchError, FitDivergedError, InsufficientDataError
from homsync.hom_engine import (
    DipPrediction,
    click_polynomials,
    mode_overlap,
    predict_dip,
    total_timing_jitter,
)
from homsync.jitterchain import LossJitterModel, SyncChain, chain_total_jitter
from homsync.pairsource import (
    PhotonSource,
    effective_pump,
    filtered_coherence,
    sample_emission_time,
    sample_pair_count,
)
from homsync.wavepacket import fwhm_to_sigma


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_count_prob_per_gate: float = 0.0  # per pump period
    tdc_bin: float = 4.0  # ps

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be in [0, 1]")
        if not 0.0 <= self.dark_count_prob_per_gate <= 1.0:
            raise ValueError("dark_count_prob_per_gate must be in [0, 1]")
        if not self.tdc_bin > 0:
            raise ValueError("tdc_bin must be > 0")


@dataclass
class HomScenario:
    source_a: PhotonSource  # master: triggered without chain jitter
    source_b: PhotonSource  # slave: triggered through the sync chain
    delay_sweep: Sequence[float]  # ps, delay added to source B
    chain: SyncChain = field(default_factory=SyncChain)
    overlap: float = 1.0
    detectors: tuple[DetectorModel, DetectorModel] = (DetectorModel(), DetectorModel())
    pulses_per_point: int = 100_000
    seed: int = 0
    loss_model: Optional[LossJitterModel] = None
    repetition_rate: float = 76.0  # MHz
    coincidence_window: Optional[float] = None  # ps, full width; default covers the sweep
    fit_center: Optional[float] = 0.0  # known zero-delay position; None fits it

    def __post_init__(self):
        self.delay_sweep = np.asarray(self.delay_sweep, dtype=float)
        if self.delay_sweep.size == 0:
            raise ValueError("delay sweep is empty")
        if self.pulses_per_point < 1:
            raise ValueError("pulses_per_point must be >= 1")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must be in [0, 1]")
        reach = float(np.max(np.abs(self.delay_sweep)))
        if self.coincidence_window is None:
            self.coincidence_window = 2.0 * reach + 2000.0
        # photons from the two sources are up to |delay| apart at the detectors
        if 0.5 * self.coincidence_window <= reach:
            raise ValueError("coincidence window must exceed twice the largest delay")
        if self.coincidence_window >= 0.5 * self.period:
            raise ValueError("coincidence window must be shorter than half a period")

    @property
    def period(self) -> float:
        return 1e6 / self.repetition_rate

    @property
    def sync_jitter(self) -> float:
        return chain_total_jitter(self.chain, self.loss_model)

    @property
    def coherence(self) -> float:
        return 0.5 * (filtered_coherence(self.source_a) + filtered_coherence(self.source_b))

    @property
    def total_jitter(self) -> float:
        return total_timing_jitter(
            effective_pump(self.source_a).fwhm, effective_pump(self.source_b).fwhm, self.sync_jitter
        )

    def prediction(self) -> DipPrediction:
        return predict_dip(
            self.coherence,
            self.total_jitter,
            self.source_a.pair_probability,
            self.source_b.pair_probability,
            self.source_a.statistics,
            self.overlap,
        )


@dataclass
class NetHistogram:
    """Accidental-subtracted counts; signed, with propagated Poisson errors."""

    bin_edges: np.ndarray
    counts: np.ndarray
    errors: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


@dataclass(frozen=True)
class DipFit:
    visibility: float
    visibility_error: float
    fwhm: float
    fwhm_error: float
    baseline: float
    center: float


@dataclass
class DipResult:
    raw: CorrelationHistogram
    accidentals: CorrelationHistogram
    net: NetHistogram
    net_visibility: float
    net_visibility_error: float
    dip_fwhm: float
    dip_fwhm_error: float
    tdc: CorrelationHistogram
    prediction: Optional[DipPrediction] = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["delay_ps", "raw", "accidental", "net", "net_error"])
            for x, r, a, n, e in zip(
                self.raw.centers, self.raw.counts, self.accidentals.counts, self.net.counts, self.net.errors
            ):
                w.writerow([f"{x:.6f}", int(r), int(a), f"{n:.6f}", f"{e:.6f}"])

    def summary(self) -> dict[str, float]:
        out = {
            "visibility": self.net_visibility,
            "visibility_error": self.net_visibility_error,
            "fwhm_ps": self.dip_fwhm,
            "fwhm_error_ps": self.dip_fwhm_error,
            "raw_total": int(np.sum(self.raw.counts)),
            "accidental_total": int(np.sum(self.accidentals.counts)),
        }
        if self.prediction is not None:
            out["expected_visibility"] = self.prediction.expected_visibility
            out["expected_fwhm_ps"] = self.prediction.dip_fwhm
            out["visibility_cap"] = self.prediction.visibility_cap
        return out


def subtract_accidentals(raw: CorrelationHistogram, accidentals: CorrelationHistogram) -> NetHistogram:
    if raw.bin_edges.shape != accidentals.bin_edges.shape or not np.allclose(
        raw.bin_edges, accidentals.bin_edges
    ):
        raise BinningMismatchError("raw and accidental histograms use different bins")
    r = np.asarray(raw.counts, dtype=float)
    a = np.asarray(accidentals.counts, dtype=float)
    return NetHistogram(raw.bin_edges.copy(), r - a, np.sqrt(r + a))


def _inverted_gaussian(x, base, vis, x0, fwhm):
    return base * (1.0 - vis * np.exp(-4.0 * math.log(2.0) * (x - x0) ** 2 / fwhm**2))


def visibility_from_dip(
    net: NetHistogram,
    iterations: int = 3,
    min_fwhm: Optional[float] = None,
    center: Optional[float] = None,
) -> DipFit:
    """Fit base * (1 - V exp(-4 ln2 (x - x0)**2 / w**2)); V and w with covariance errors.

    Weights are Poisson variances of the current model (net model + twice the
    accidentals), starting from a flat baseline and refined over
    ``iterations`` passes; weighting by observed counts would bias low-count
    dips deeper. ``min_fwhm`` bounds the width from below (default: two sweep
    steps). A known ``center`` is held fixed; otherwise it is fitted within
    the middle half of the sweep.
    """
    x = net.centers
    y = np.asarray(net.counts, dtype=float)
    if len(x) < 5:
        raise InsufficientDataError("dip fit needs at least 5 delay points")
    errors = np.asarray(net.errors, dtype=float)
    accidentals = np.maximum(0.5 * (errors**2 - y), 0.0)
    span = float(x[-1] - x[0])
    step = float(np.min(np.diff(x)))
    n_edge = max(len(y) // 5, 1)
    base0 = float(np.mean(np.concatenate([y[:n_edge], y[-n_edge:]])))
    if base0 <= 0:
        base0 = max(float(np.max(y)), 1.0)
    sigma = np.sqrt(np.maximum(base0 + 2.0 * accidentals, 1.0))
    # narrower than two steps or wider than the sweep is unresolvable
    w_lo = max(2.0 * step, min_fwhm or 0.0)
    mid = 0.5 * float(x[0] + x[-1])

    if center is None:
        model = _inverted_gaussian
        lower = [0.0, -2.0, mid - span / 4.0, w_lo]
        upper = [np.inf, 2.0, mid + span / 4.0, span]
        starts = [[base0, v, mid, w] for v in (0.3, -0.3) for w in (span / 6.0, span / 3.0, span / 1.5)]
    else:
        def model(xx, base, vis, fwhm):
            return _inverted_gaussian(xx, base, vis, center, fwhm)

        lower = [0.0, -2.0, w_lo]
        upper = [np.inf, 2.0, span]
        starts = [[base0, v, w] for v in (0.3, -0.3) for w in (span / 6.0, span / 3.0, span / 1.5)]
    for p0 in starts:
        p0[-1] = min(max(p0[-1], 1.01 * w_lo), span)

    best = None
    for _ in range(iterations):
        best = None
        for p0 in starts:
            try:
                popt, pcov = curve_fit(
                    model, x, y, p0=p0, sigma=sigma,
                    absolute_sigma=True, bounds=(lower, upper), maxfev=20000,
                )
            except (RuntimeError, ValueError):
                continue
            chi2 = float(np.sum(((y - model(x, *popt)) / sigma) ** 2))
            if best is None or chi2 < best[0]:
                best = (chi2, popt, pcov)
        if best is None:
            raise FitDivergedError("dip fit did not converge")
        starts = [list(best[1])]
        sigma = np.sqrt(np.maximum(model(x, *best[1]) + 2.0 * accidentals, 1.0))
    _, popt, pcov = best
    if popt[0] <= 0:
        raise FitDivergedError("nonpositive baseline")
    err = np.sqrt(np.abs(np.diag(pcov)))
    if not np.isfinite(err[1]):
        raise FitDivergedError("visibility error is not finite")
    return DipFit(
        visibility=float(popt[1]),
        visibility_error=float(err[1]),
        fwhm=float(popt[-1]),
        fwhm_error=float(err[-1]) if np.isfinite(err[-1]) else math.inf,
        baseline=float(popt[0]),
        center=float(popt[2]) if center is None else float(center),
    )


def _sample_clicks(polys: np.ndarray, overlap: np.ndarray, rng: np.random.Generator):
    """Draw (click_c, click_d) for pulses sharing one (n_a, n_b) configuration."""
    probs = np.stack([np.polyval(p, overlap) for p in polys])  # c only, d only, both
    probs = np.clip(probs, 0.0, 1.0)
    u = rng.random(overlap.shape)
    c_only = u < probs[0]
    d_only = (u >= probs[0]) & (u < probs[0] + probs[1])
    both = (u >= probs[0] + probs[1]) & (u < probs[0] + probs[1] + probs[2])
    return c_only | both, d_only | both


def _count_pairs(tc: np.ndarray, td: np.ndarray, lo: float, hi: float) -> int:
    """Number of (c, d) click pairs with lo <= t_d - t_c < hi."""
    if tc.size == 0 or td.size == 0:
        return 0
    return int(np.sum(np.searchsorted(td, tc + hi) - np.searchsorted(td, tc + lo)))


def _pair_differences(tc: np.ndarray, td: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if tc.size == 0 or td.size == 0:
        return np.empty(0)
    start = np.searchsorted(td, tc + lo)
    stop = np.searchsorted(td, tc + hi)
    n = stop - start
    owner = np.repeat(np.arange(tc.size), n)
    offsets = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    return td[np.repeat(start, n) + offsets] - tc[owner]


def _simulate_point(sc: HomScenario, delay: float, rng: np.random.Generator, windows, tdc_edges):
    n = sc.pulses_per_point
    period = sc.period
    n_a = sample_pair_count(sc.source_a, rng, n)
    n_b = sample_pair_count(sc.source_b, rng, n)
    active = np.nonzero(n_a + n_b > 0)[0]
    na, nb = n_a[active], n_b[active]
    t_a = sample_emission_time(sc.source_a, 0.0, rng, active.size)
    t_b = sample_emission_time(sc.source_b, sc.sync_jitter, rng, active.size) + delay
    sig_a = fwhm_to_sigma(filtered_coherence(sc.source_a))
    sig_b = fwhm_to_sigma(filtered_coherence(sc.source_b))
    overlap = sc.overlap * mode_overlap(t_b - t_a, sig_a, sig_b)

    eff = (sc.detectors[0].efficiency, sc.detectors[1].efficiency)
    click_c = np.zeros(active.size, dtype=bool)
    click_d = np.zeros(active.size, dtype=bool)
    keys = na.astype(np.int64) * 4096 + nb
    for key in np.unique(keys):
        sel = np.nonzero(keys == key)[0]
        polys = click_polynomials(int(key // 4096), int(key % 4096), eff)
        click_c[sel], click_d[sel] = _sample_clicks(polys, overlap[sel], rng)

    # which source's photon fires the detector, weighted by photon numbers
    from_a = rng.random((2, active.size)) * (na + nb) < na
    base = active * period
    times_c = base[click_c] + np.where(from_a[0], t_a, t_b)[click_c]
    times_d = base[click_d] + np.where(from_a[1], t_a, t_b)[click_d]

    dark = []
    for det in sc.detectors:
        k = np.nonzero(rng.random(n) < det.dark_count_prob_per_gate)[0]
        dark.append(k * period + rng.uniform(-0.5 * period, 0.5 * period, k.size))
    tc = np.sort(np.concatenate([times_c, dark[0]]))
    td = np.sort(np.concatenate([times_d, dark[1]]))

    (raw_lo, raw_hi), (acc_lo, acc_hi) = windows
    raw = _count_pairs(tc, td, raw_lo, raw_hi)
    acc = _count_pairs(tc, td, acc_lo, acc_hi)
    diffs = _pair_differences(tc, td, tdc_edges[0], tdc_edges[-1])
    tdc_counts = np.histogram(diffs, bins=tdc_edges)[0]
    return raw, acc, tdc_counts


def _windows(sc: HomScenario):
    """Raw and off-pulse windows as TDC-bin-aligned [lo, hi) delay intervals."""
    tdc_bin = sc.detectors[0].tdc_bin
    k = max(int(round(0.5 * sc.coincidence_window / tdc_bin)), 1)
    off = int(round(0.5 * sc.period / tdc_bin))
    return ((-k * tdc_bin, k * tdc_bin), ((off - k) * tdc_bin, (off + k) * tdc_bin))


def run_hom(scenario: HomScenario) -> DipResult:
    """Simulate the full delay sweep; delay point i uses child i of SeedSequence(seed)."""
    sc = scenario
    delays = sc.delay_sweep
    edges = edges_from_delays(delays) if delays.size > 1 else np.array([delays[0] - 0.5, delays[0] + 0.5])
    windows = _windows(sc)
    tdc_bin = sc.detectors[0].tdc_bin
    n_tdc = int(math.ceil(0.75 * sc.period / tdc_bin))
    tdc_edges = np.arange(-n_tdc, n_tdc + 1) * tdc_bin

    raw = np.zeros(delays.size, dtype=np.int64)
    acc = np.zeros(delays.size, dtype=np.int64)
    tdc = np.zeros(tdc_edges.size - 1, dtype=np.int64)
    for i, ss in enumerate(np.random.SeedSequence(sc.seed).spawn(delays.size)):
        r, a, t = _simulate_point(sc, float(delays[i]), np.random.default_rng(ss), windows, tdc_edges)
        raw[i], acc[i] = r, a
        tdc += t

    shots = sc.pulses_per_point * delays.size
    raw_h = CorrelationHistogram(edges, raw, shots)
    acc_h = CorrelationHistogram(edges, acc, shots)
    net = subtract_accidentals(raw_h, acc_h)
    if np.sum(raw) == 0:
        raise InsufficientDataError("no coincidences recorded; raise pulses_per_point")
    # jitter only broadens the dip, so half the coherence-limited width is a safe floor
    fit = visibility_from_dip(net, min_fwhm=0.5 * math.sqrt(2.0) * sc.coherence, center=sc.fit_center)
    return DipResult(
        raw=raw_h,
        accidentals=acc_h,
        net=net,
        net_visibility=fit.visibility,
        net_visibility_error=fit.visibility_error,
        dip_fwhm=fit.fwhm,
        dip_fwhm_error=fit.fwhm_error,
        tdc=CorrelationHistogram(tdc_edges, tdc, shots),
        prediction=sc.prediction(),
    )
