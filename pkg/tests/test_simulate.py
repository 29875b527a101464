import dataclasses
import math

import numpy as np
import pytest

from scwave.ensemble import EnsembleSpec, SmoothingProfile
from scwave.sampler import sample_code
from scwave.simulate import (
    ChannelModel,
    DecoderSetup,
    SetupError,
    run_sweep,
    run_sweep_on_graph,
    transmit,
    wilson_interval,
    windowed_decode,
    windowed_de_residual,
    windowed_threshold,
)
from scwave.density import bp_threshold

UNIFORM3 = EnsembleSpec(3, 6, SmoothingProfile.uniform(3), 30, 300)


@pytest.fixture(scope="module")
def graph():
    return sample_code(UNIFORM3, 17)


class TestSetups:
    def test_setup_a_scaling(self):
        for w in (3, 4, 5, 6, 8):
            s = DecoderSetup.setup_a(w)
            assert (s.window, s.iterations) == (5 * w, 1)

    def test_setup_b_table(self):
        assert DecoderSetup.setup_b(3) == DecoderSetup(15, 5, "B")
        assert DecoderSetup.setup_b(8) == DecoderSetup(40, 2, "B")

    def test_setup_b_effective_iterations(self):
        s = DecoderSetup.setup_b(3)
        assert s.window * s.iterations == 75  # the ~80-per-bit target

    def test_setup_b_undefined_widths(self):
        for w in (4, 5, 6):
            with pytest.raises(SetupError):
                DecoderSetup.setup_b(w)

    def test_window_narrower_than_coupling_rejected(self, graph):
        with pytest.raises(SetupError):
            windowed_decode(graph, np.zeros(graph.n, dtype=bool), DecoderSetup(2, 1))


class TestChannels:
    def test_bec_extremes(self, graph, rng):
        assert not transmit(graph, ChannelModel.bec(0.0), rng).any()
        assert transmit(graph, ChannelModel.bec(1.0), rng).all()

    def test_bec_erasure_fraction(self):
        rng = np.random.default_rng(5)
        big = sample_code(EnsembleSpec(3, 6, SmoothingProfile.uniform(3), 100, 1000), 1)
        word = transmit(big, ChannelModel.bec(0.46), rng)
        n = big.n
        sigma = math.sqrt(0.46 * 0.54 / n)
        assert abs(word.mean() - 0.46) < 3 * sigma

    def test_bec_validation(self):
        with pytest.raises(ValueError):
            ChannelModel.bec(1.5)

    def test_awgn_llr_statistics(self, graph):
        rng = np.random.default_rng(6)
        ch = ChannelModel.biawgn_ebn0(2.0, rate=0.5)
        llr = transmit(graph, ch, rng)
        # all-zero + BPSK: LLR ~ N(2/sigma^2, 4/sigma^2)
        mean = 2.0 / ch.sigma**2
        sd = 2.0 / ch.sigma
        assert abs(llr.mean() - mean) < 4 * sd / math.sqrt(graph.n)

    def test_ebn0_conversion(self):
        ch = ChannelModel.biawgn_ebn0(0.0, rate=0.5)
        assert ch.sigma == pytest.approx(1.0)


class TestBecDecode:
    def test_erasure_free(self, graph):
        res = windowed_decode(graph, np.zeros(graph.n, dtype=bool), DecoderSetup.setup_b(3))
        assert res.fully_resolved and res.syndrome_ok
        assert res.erasures == 0 and res.bit_errors == 0

    def test_full_erasure_mostly_unresolved(self, graph):
        res = windowed_decode(graph, np.ones(graph.n, dtype=bool), DecoderSetup.setup_b(3))
        # only bits pinned by short boundary checks can resolve
        assert res.erasures >= 0.95 * graph.n
        assert res.frame_error

    def test_below_threshold_decodes(self, graph):
        rng = np.random.default_rng(7)
        word = transmit(graph, ChannelModel.bec(0.40), rng)
        res = windowed_decode(graph, word, DecoderSetup.setup_b(3))
        assert res.fully_resolved
        assert res.syndrome_ok

    def test_resolution_monotone_in_iterations(self, graph):
        rng = np.random.default_rng(8)
        word = transmit(graph, ChannelModel.bec(0.47), rng)
        erasures = [
            windowed_decode(graph, word, DecoderSetup(15, i)).erasures
            for i in (1, 2, 5)
        ]
        assert erasures[0] >= erasures[1] >= erasures[2]

    def test_window_size_never_hurts(self, graph):
        totals = {}
        for window in (9, 15, 21):
            setup = DecoderSetup(window, 2)
            count = 0
            for f in range(30):
                rng = np.random.default_rng((11, f))
                word = transmit(graph, ChannelModel.bec(0.42), rng)
                count += windowed_decode(graph, word, setup).erasures
            totals[window] = count
        assert totals[21] <= totals[15] <= totals[9]


class TestAwgnDecode:
    def test_high_snr_clean(self, graph):
        rng = np.random.default_rng(12)
        word = transmit(graph, ChannelModel.biawgn_ebn0(6.0, 0.5), rng)
        res = windowed_decode(graph, word, DecoderSetup.setup_b(3))
        assert res.fully_resolved
        assert res.bit_errors == 0

    def test_low_snr_fails(self, graph):
        rng = np.random.default_rng(13)
        word = transmit(graph, ChannelModel.biawgn_ebn0(-3.0, 0.5), rng)
        res = windowed_decode(graph, word, DecoderSetup.setup_b(3))
        assert res.bit_errors > 0

    def test_mid_snr_beats_channel(self, graph):
        rng = np.random.default_rng(14)
        ch = ChannelModel.biawgn_ebn0(3.0, 0.5)
        word = transmit(graph, ch, rng)
        raw_errors = int((word <= 0).sum())
        res = windowed_decode(graph, word, DecoderSetup.setup_b(3))
        assert res.bit_errors < raw_errors


class TestWilson:
    def test_zero_errors(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0 and 0.0 < hi < 0.05

    def test_contains_point_estimate(self):
        lo, hi = wilson_interval(13, 200)
        assert lo < 13 / 200 < hi

    def test_width_scales_like_sqrt_n(self):
        w1 = np.diff(wilson_interval(50, 500))[0]
        w2 = np.diff(wilson_interval(200, 2000))[0]
        assert w1 / w2 == pytest.approx(2.0, rel=0.15)


class TestRunSweep:
    def test_report_identities(self):
        reports = run_sweep(
            UNIFORM3,
            [ChannelModel.bec(0.35), ChannelModel.bec(0.45)],
            DecoderSetup.setup_b(3),
            frames=60,
            seed=4,
        )
        for rep in reports:
            assert rep.frames == 60
            assert 0 <= rep.fer <= 1
            assert rep.ber <= rep.fer
            assert rep.ber * rep.frames * rep.n_bits == pytest.approx(
                rep.bit_errors + 0.5 * rep.erasures
            )
            assert sum(rep.per_sp_errors) == rep.bit_errors + rep.erasures
            assert rep.syndrome_failures == 0
            lo, hi = rep.fer_ci
            assert lo <= rep.fer <= hi

    def test_deterministic_across_worker_counts(self, graph):
        channels = [ChannelModel.bec(0.43)]
        setup = DecoderSetup.setup_b(3)
        a = run_sweep_on_graph(graph, channels, setup, frames=50, seed=3, workers=1)
        b = run_sweep_on_graph(graph, channels, setup, frames=50, seed=3, workers=2)
        assert [dataclasses.asdict(r) for r in a] == [dataclasses.asdict(r) for r in b]

    def test_adaptive_stop(self, graph):
        channels = [ChannelModel.bec(0.49)]
        reports = run_sweep_on_graph(
            graph, channels, DecoderSetup.setup_a(3), frames=5000, seed=3,
            min_frame_errors=10, workers=1,
        )
        assert reports[0].frame_errors >= 10
        assert reports[0].frames < 5000

    def test_frames_validation(self):
        with pytest.raises(ValueError):
            run_sweep(UNIFORM3, [ChannelModel.bec(0.4)], DecoderSetup.setup_a(3), 0, 1)


class TestWindowedModel:
    def test_residual_monotone_in_epsilon(self):
        setup = DecoderSetup.setup_b(3)
        spec = EnsembleSpec(3, 6, SmoothingProfile.uniform(3), 50, 500)
        r1 = windowed_de_residual(spec, 0.41, setup).max()
        r2 = windowed_de_residual(spec, 0.47, setup).max()
        assert r1 < r2

    def test_threshold_below_full_bp(self):
        spec = EnsembleSpec(3, 6, SmoothingProfile.uniform(3), 50, 500)
        wt = windowed_threshold(spec, DecoderSetup.setup_b(3), tol=2e-3)
        bt = bp_threshold(spec, tol=1e-3)
        assert wt < bt
        assert 0.40 < wt < 0.48

    def test_more_iterations_raise_threshold(self):
        spec = EnsembleSpec(3, 6, SmoothingProfile.uniform(3), 50, 500)
        low = windowed_threshold(spec, DecoderSetup(15, 1), tol=5e-3)
        high = windowed_threshold(spec, DecoderSetup(15, 5), tol=5e-3)
        assert high > low
