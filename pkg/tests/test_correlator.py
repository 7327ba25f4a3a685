import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import fftconvolve

from homsync.correlator import (
    CorrelationHistogram,
    FitModel,
    analytic_autocorr_fwhm,
    analytic_crosscorr_fwhm,
    edges_from_delays,
    fit_fwhm,
    sech2_autocorr_factor,
    simulate_correlation,
)
from homsync.errors import InsufficientDataError
from homsync.wavepacket import PulseShape, fwhm_to_sigma, intensity, measure_fwhm


def exact_correlation_fwhm(pulse_a, pulse_b, jitter, dt=0.005, half=200.0):
    """FWHM of intensity_a * intensity_b(-t) * jitter density, by direct numerical convolution."""
    t = np.arange(-half, half + dt / 2, dt)
    curve = fftconvolve(intensity(pulse_a, t), intensity(pulse_b, -t), mode="same")
    if jitter > 0:
        s = fwhm_to_sigma(jitter)
        curve = fftconvolve(curve, np.exp(-(t**2) / (2 * s * s)), mode="same")
    return measure_fwhm(t, curve)


def gaussian_hist(fwhm, amp, base, delays, noise_rng=None):
    x = np.asarray(delays, dtype=float)
    y = amp * np.exp(-4 * math.log(2) * x**2 / fwhm**2) + base
    if noise_rng is not None:
        y = noise_rng.poisson(y)
    return CorrelationHistogram(edges_from_delays(x), y, 1)


class TestAnalytic:
    def test_autocorr_examples(self):
        assert analytic_autocorr_fwhm(PulseShape.gaussian(20.7)) == pytest.approx(29.27, abs=0.01)
        assert analytic_autocorr_fwhm(PulseShape.sech2(5.0)) == pytest.approx(7.71, abs=0.01)
        assert analytic_autocorr_fwhm(PulseShape.delta()) == 0.0

    def test_autocorr_factors_match_self_convolution(self):
        assert exact_correlation_fwhm(PulseShape.gaussian(1.0), PulseShape.gaussian(1.0), 0.0, dt=5e-4, half=10) == pytest.approx(
            math.sqrt(2), rel=1e-5
        )
        assert sech2_autocorr_factor() == pytest.approx(1.5427, abs=2e-4)

    def test_crosscorr_examples(self):
        assert analytic_crosscorr_fwhm(PulseShape.gaussian(20.7), PulseShape.sech2(5.0), 27.27) == pytest.approx(34.6, abs=0.05)
        assert analytic_crosscorr_fwhm(PulseShape.gaussian(9.0), PulseShape.delta(), 0.0) == 9.0

    def test_quadrature_shape_error_is_small(self):
        # quadrature treats the sech2 pulse as Gaussian; the exact convolution differs by < 2 %
        pa, pb = PulseShape.gaussian(20.7), PulseShape.sech2(5.0)
        exact = exact_correlation_fwhm(pa, pb, 18.0)
        assert abs(exact / analytic_crosscorr_fwhm(pa, pb, 18.0) - 1) < 0.02


class TestSimulate:
    delays = np.arange(-60.0, 60.5, 1.0)

    def test_same_seed_bit_identical(self):
        args = (PulseShape.gaussian(20.7), PulseShape.sech2(5.0), 18.0, self.delays, 2000, 7)
        a, b = simulate_correlation(*args), simulate_correlation(*args)
        assert np.array_equal(a.counts, b.counts) and np.array_equal(a.bin_edges, b.bin_edges)

    def test_symmetric_autocorrelation(self):
        p = PulseShape.gaussian(15.0)
        h = simulate_correlation(p, p, 0.0, self.delays, 20000, 11)
        c = h.counts.astype(float)
        diff = c - c[::-1]
        sigma = np.sqrt(c + c[::-1])
        keep = sigma > 0
        assert np.all(np.abs(diff[keep]) <= 4 * sigma[keep])

    def test_delta_pulses_reproduce_jitter(self):
        h = simulate_correlation(PulseShape.delta(), PulseShape.delta(), 20.0, self.delays, 20000, 5)
        fit = fit_fwhm(h)
        assert abs(fit.fwhm - 20.0) < 3 * fit.fwhm_error

    def test_gaussian_autocorrelation(self):
        p = PulseShape.gaussian(20.7)
        fit = fit_fwhm(simulate_correlation(p, p, 0.0, self.delays, 20000, 2))
        assert abs(fit.fwhm - 20.7 * math.sqrt(2)) < 3 * fit.fwhm_error

    def test_sech2_autocorrelation(self):
        p = PulseShape.sech2(5.0)
        fit = fit_fwhm(simulate_correlation(p, p, 0.0, np.arange(-20, 20.01, 0.25), 20000, 4), FitModel.SECH2_AUTOCORR)
        assert abs(fit.fwhm - analytic_autocorr_fwhm(p)) < 3 * fit.fwhm_error

    def test_mixed_shapes_match_exact_convolution(self):
        pa, pb = PulseShape.gaussian(20.7), PulseShape.sech2(5.0)
        fit = fit_fwhm(simulate_correlation(pa, pb, 18.0, np.arange(-80.0, 80.5, 1.0), 50000, 1))
        # the Gaussian fit to a slightly non-Gaussian curve carries a small model error on top
        assert abs(fit.fwhm - exact_correlation_fwhm(pa, pb, 18.0)) < 3 * fit.fwhm_error + 0.1

    @settings(max_examples=8)
    @given(st.floats(1, 50), st.floats(1, 50), st.floats(0, 50), st.integers(0, 2**32 - 1))
    def test_gaussian_sweep_matches_quadrature(self, wa, wb, j, seed):
        pa, pb = PulseShape.gaussian(wa), PulseShape.gaussian(wb)
        expected = analytic_crosscorr_fwhm(pa, pb, j)
        step = expected / 15
        delays = np.arange(-3 * expected, 3 * expected + step / 2, step)
        fit = fit_fwhm(simulate_correlation(pa, pb, j, delays, 20000, seed))
        assert abs(fit.fwhm - expected) < 3 * fit.fwhm_error

    def test_csv_columns(self, tmp_path):
        h = simulate_correlation(PulseShape.gaussian(5), PulseShape.gaussian(5), 0, [-1.0, 0.0, 1.0], 10, 0)
        h.to_csv(tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "delay_ps,counts" and len(lines) == 4


class TestFit:
    delays = np.arange(-100.0, 100.5, 1.0)

    def test_noiseless_round_trip(self):
        fit = fit_fwhm(gaussian_hist(27.6, 1000.0, 50.0, self.delays))
        assert fit.fwhm == pytest.approx(27.6, rel=1e-3)
        assert fit.baseline == pytest.approx(50.0, rel=1e-3)

    def test_noisy_round_trip_covers_truth(self):
        fit = fit_fwhm(gaussian_hist(27.6, 400.0, 20.0, self.delays, np.random.default_rng(9)))
        assert abs(fit.fwhm - 27.6) < 3 * fit.fwhm_error

    def test_error_coverage(self):
        rng = np.random.default_rng(123)
        inside = 0
        for _ in range(100):
            fit = fit_fwhm(gaussian_hist(27.6, 200.0, 10.0, self.delays, rng))
            inside += abs(fit.fwhm - 27.6) < fit.fwhm_error
        assert 55 <= inside <= 82  # 68 % nominal, binomial 3-sigma band

    def test_all_zero(self):
        with pytest.raises(InsufficientDataError):
            fit_fwhm(CorrelationHistogram(edges_from_delays(self.delays), np.zeros(len(self.delays)), 1))
