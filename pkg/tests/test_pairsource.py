import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homsync.errors import FilterTooWideError, UnsupportedStatisticsError
from homsync.pairsource import (
    PairStatistics,
    PhotonSource,
    emit,
    filtered_coherence,
    mean_pair_number,
    multipair_visibility_cap,
    pair_number_pmf,
    pump_coherence,
    sample_emission_time,
    sample_pair_count,
    source_from_wavelengths,
)
from homsync.wavepacket import PulseShape, Spectrum, sigma_to_fwhm


def source(p=0.1, stats="thermal", pump=PulseShape.gaussian(20.7), pump_filter=30.0, signal_filter=30.0):
    return PhotonSource(pump, Spectrum(775.0, pump_filter), Spectrum(1548.0, signal_filter), p, stats)


class TestCoherence:
    def test_signal_and_pump(self):
        s = source()
        assert filtered_coherence(s) == pytest.approx(117.2, abs=0.1)
        assert pump_coherence(s) == pytest.approx(29.4, abs=0.05)

    def test_doubling_filter_halves_coherence(self):
        assert filtered_coherence(source(signal_filter=60.0)) == pytest.approx(filtered_coherence(source()) / 2, rel=1e-12)

    def test_filter_too_wide(self):
        # 1.1 nm on the pump leaves the 20.7 ps pulse intact; 3 nm on the signal gives ~1.2 ps
        with pytest.raises(FilterTooWideError):
            filtered_coherence(source(pump_filter=1100.0, signal_filter=3000.0))

    @given(st.floats(1, 5000), st.floats(1, 5000), st.floats(0.5, 200))
    def test_never_shorter_than_pump(self, fp, fs, width):
        s = source(pump=PulseShape.gaussian(width), pump_filter=fp, signal_filter=fs)
        try:
            tc = filtered_coherence(s)
        except FilterTooWideError:
            return
        assert tc >= min(width, s.pump.fwhm) or tc >= pump_coherence(s)

    def test_idler_energy_conservation(self):
        assert source().idler_wavelength == pytest.approx(1.0 / (1 / 775.0 - 1 / 1548.0))


class TestStatistics:
    def test_zero_probability(self):
        assert np.all(sample_pair_count(source(0.0), np.random.default_rng(0), 1000) == 0)

    def test_thermal_ten_percent(self):
        n = sample_pair_count(source(0.1), np.random.default_rng(1), 100_000)
        assert np.mean(n >= 1) == pytest.approx(0.100, abs=0.003)

    def test_thermal_ratio(self):
        mu = mean_pair_number(0.1, "thermal")
        pmf = pair_number_pmf(0.1, "thermal", 3)
        assert pmf[2] / pmf[1] == pytest.approx(mu / (1 + mu), rel=1e-12)
        assert pmf[2] / pmf[1] == pytest.approx(0.1, rel=1e-12)

    @pytest.mark.parametrize("stats", list(PairStatistics))
    def test_pmf_sums_to_one(self, stats):
        assert pair_number_pmf(0.2, stats, 80).sum() == pytest.approx(1.0, abs=1e-12)
        assert 1 - pair_number_pmf(0.2, stats, 80)[0] == pytest.approx(0.2, rel=1e-12)

    @settings(max_examples=20)
    @given(st.floats(0.001, 0.499), st.sampled_from(list(PairStatistics)), st.integers(0, 2**32 - 1))
    def test_empirical_probability(self, p, stats, seed):
        n = sample_pair_count(source(p, stats), np.random.default_rng(seed), 100_000)
        err = math.sqrt(p * (1 - p) / 100_000)
        assert abs(np.mean(n >= 1) - p) < 4 * err

    @pytest.mark.parametrize("stats", ["thermal", "poisson"])
    def test_empirical_distribution(self, stats):
        n = sample_pair_count(source(0.3, stats), np.random.default_rng(2), 200_000)
        emp = np.bincount(n, minlength=4)[:4] / n.size
        assert emp == pytest.approx(pair_number_pmf(0.3, stats, 3), abs=0.004)


class TestEmission:
    def test_delta_pump_without_jitter(self):
        # any real pump filter stretches a delta pulse to its coherence time; make that negligible
        s = PhotonSource(PulseShape.delta(), Spectrum(775, 1e9), Spectrum(1548, 30.0))
        assert np.all(np.abs(sample_emission_time(s, 0.0, np.random.default_rng(0), 100)) < 1e-6)

    def test_pump_width(self):
        t = sample_emission_time(source(), 0.0, np.random.default_rng(3), 100_000)
        assert sigma_to_fwhm(np.std(t)) == pytest.approx(29.4, abs=1.0)

    def test_pump_plus_trigger(self):
        t = sample_emission_time(source(), 27.0, np.random.default_rng(4), 100_000)
        assert sigma_to_fwhm(np.std(t)) == pytest.approx(math.hypot(29.4, 27.0), abs=1.0)

    def test_unbiased(self):
        t = sample_emission_time(source(), 27.0, np.random.default_rng(5), 100_000)
        assert abs(np.mean(t)) < 4 * np.std(t) / math.sqrt(t.size)

    def test_emit_shares_mode(self):
        rng = np.random.default_rng(6)
        photons = [emit(source(0.4), 10.0, rng) for _ in range(200)]
        multi = [ph for ph in photons if len(ph) > 1]
        assert multi and all(len({x.emission_time for x in ph}) == 1 for ph in multi)


class TestCap:
    def test_limits(self):
        assert multipair_visibility_cap("thermal") == pytest.approx(1 / 3, abs=1e-4)
        assert multipair_visibility_cap("single") == pytest.approx(1.0)
        assert multipair_visibility_cap("poisson") == pytest.approx(0.5)

    def test_finite_p_thermal(self):
        assert 0.32 <= multipair_visibility_cap("thermal", 0.1) <= 1 / 3

    def test_unknown(self):
        with pytest.raises(UnsupportedStatisticsError):
            multipair_visibility_cap("squeezed")

    def test_builder(self):
        s = source_from_wavelengths(20.7, 775, 30, 1548, 30)
        assert s == source()
