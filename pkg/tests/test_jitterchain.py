import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from homsync.errors import InconsistentWidthsError, ToleranceUnreachableError
from homsync.jitterchain import (
    NEVER,
    DiurnalProfile,
    FiberLink,
    JitterStage,
    LossJitterModel,
    SyncChain,
    chain_total_jitter,
    compose_quadrature,
    extract_component,
    loss_excess_jitter,
    stabilization_interval,
    thermal_drift,
)

# squares of widths below ~1e-150 underflow; physical widths are never that small
widths = st.one_of(st.just(0.0), st.floats(1e-6, 1e3))


class TestQuadrature:
    def test_examples(self):
        assert compose_quadrature([18, 21]) == pytest.approx(27.66, abs=0.005)
        assert compose_quadrature([3, 4]) == 5.0
        assert compose_quadrature([7.5]) == 7.5
        assert compose_quadrature([]) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            compose_quadrature([1, -1])

    @given(st.lists(widths, max_size=6))
    def test_commutative(self, ws):
        assert compose_quadrature(ws) == pytest.approx(compose_quadrature(list(reversed(ws))), rel=1e-12)

    @given(st.lists(widths, max_size=4), st.lists(widths, max_size=4))
    def test_associative(self, a, b):
        nested = compose_quadrature([compose_quadrature(a), compose_quadrature(b)])
        assert nested == pytest.approx(compose_quadrature(a + b), rel=1e-12)

    @given(widths, widths, widths)
    def test_extract_round_trip(self, a, b, c):
        total = compose_quadrature([a, b, c])
        # c is only recoverable to the precision of total**2
        assert extract_component(total, [a, b]) == pytest.approx(c, rel=1e-9, abs=1e-6 * total)


class TestExtract:
    def test_media_converter_total(self):
        assert extract_component(34.6, [20.7, 5.0]) == pytest.approx(27.27, abs=0.01)

    def test_direct_trigger(self):
        # sqrt(27.6^2 - 20.7^2 - 5^2)
        assert extract_component(27.6, [20.7, 5.0]) == pytest.approx(math.sqrt(761.76 - 428.49 - 25.0), rel=1e-12)

    def test_inconsistent(self):
        with pytest.raises(InconsistentWidthsError):
            extract_component(5, [3, 4.1])


class TestLoss:
    def test_zero_loss(self):
        assert loss_excess_jitter(FiberLink(0.0, 0.2), LossJitterModel(3.0)) == 0.0

    def test_ten_db(self):
        assert LossJitterModel(1.0)(10.0) == pytest.approx(9.0)
        assert loss_excess_jitter(FiberLink(50.0, 0.2), LossJitterModel(1.0)) == pytest.approx(9.0)

    def test_custom_curve(self):
        m = LossJitterModel(curve=lambda L: 2.0 * L)
        assert m(3.0) == 6.0 and m(0.0) == 0.0

    @given(st.floats(0.01, 100), st.floats(0, 40), st.floats(0, 40))
    def test_monotone(self, a, l1, l2):
        lo, hi = sorted((l1, l2))
        m = LossJitterModel(a)
        assert m(hi) >= m(lo)

    @given(st.floats(0.01, 100))
    def test_zero_for_every_scale(self, a):
        assert LossJitterModel(a)(0.0) == 0.0


class TestThermal:
    def test_examples(self):
        assert thermal_drift(FiberLink(1.0), 1.0) == pytest.approx(33.4, abs=0.05)
        assert thermal_drift(FiberLink(2.2), 1.0) == pytest.approx(73.4, abs=0.05)
        assert thermal_drift(FiberLink(0.0), 5.0) == 0.0

    @given(st.floats(0, 100), st.floats(-20, 20), st.floats(0.1, 5))
    def test_linear(self, length, dT, k):
        base = thermal_drift(FiberLink(length), dT)
        assert thermal_drift(FiberLink(length * k), dT) == pytest.approx(k * base, rel=1e-12, abs=1e-12)
        assert thermal_drift(FiberLink(length), dT * k) == pytest.approx(k * base, rel=1e-12, abs=1e-12)


class TestStabilization:
    link = FiberLink(36.0)

    def test_femtosecond_order_one_second(self):
        t = stabilization_interval(self.link, 0.133)
        assert 0.3 < t < 3.0

    def test_picosecond_order_six_minutes(self):
        t = stabilization_interval(self.link, 29.4)
        assert 100 < t < 1000

    def test_interval_is_tolerance_over_peak_rate(self):
        prof = DiurnalProfile()
        amp = prof.amplitude(self.link)
        assert amp == pytest.approx(thermal_drift(self.link, 1.0), rel=1e-12)
        assert stabilization_interval(self.link, 10.0, prof) == pytest.approx(10.0 * 43200 / (math.pi * amp))

    def test_unbounded(self):
        assert stabilization_interval(self.link, math.inf) == NEVER
        assert stabilization_interval(FiberLink(0.0), 1.0) == NEVER

    def test_nonpositive_tolerance(self):
        with pytest.raises(ToleranceUnreachableError):
            stabilization_interval(self.link, 0.0)


class TestChain:
    def test_two_stages(self):
        chain = SyncChain((JitterStage("pd", 18), JitterStage("mc", 21)))
        assert chain_total_jitter(chain) == pytest.approx(27.66, abs=0.005)

    def test_empty(self):
        assert chain_total_jitter(SyncChain()) == 0.0

    def test_lossy_link(self):
        link = FiberLink(length=10 * math.log10(11) / 0.2, loss_coefficient=0.2)  # 10 ps excess at a = 1
        chain = SyncChain((JitterStage("pd", 18), JitterStage("mc", 21)), link)
        assert chain_total_jitter(chain, LossJitterModel(1.0)) == pytest.approx(math.sqrt(18**2 + 21**2 + 100))
        assert chain_total_jitter(chain, LossJitterModel(1.0)) == pytest.approx(29.41, abs=0.01)

    def test_negative_stage_rejected(self):
        with pytest.raises(ValueError):
            JitterStage("x", -1.0)
