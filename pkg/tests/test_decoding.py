"""Decoder equivalences, metric identities, counters, and quantization."""

import numpy as np
import pytest

from nestedpsc import (
    FrozenSchedule,
    SclBatchDecoder,
    SequentialDecoder,
    build_randomized_psc,
    channel_llrs,
    density_evolution_minsum,
    expand_info,
    expected_metric_bias,
    hamming_distance,
    polar_transform,
    quantize,
    quantize_batch,
    quantize_with_schedule,
    sample_codewords,
    sc_decode,
    scl_decode,
    sequential_decode,
)


def _noisy_llrs(code, count, p, seed):
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    _, x = sample_codewords(code, count, seed=seed)
    noise = (rng.random((count, code.n)) < p).astype(np.uint8)
    return x, x ^ noise, channel_llrs(x ^ noise, p)


class TestChannelLlrs:
    def test_values_and_shape(self):
        y = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        llr = channel_llrs(y, 0.1)
        mag = np.log(0.9 / 0.1)
        assert llr == pytest.approx(np.array([[mag, -mag], [-mag, mag]]))

    def test_rejects_degenerate_crossover(self):
        with pytest.raises(ValueError):
            channel_llrs(np.zeros(2, dtype=np.uint8), 0.0)
        with pytest.raises(ValueError):
            channel_llrs(np.zeros(2, dtype=np.uint8), 0.5)


class TestSchedule:
    def test_from_code_matches_constraints(self, code128):
        sched = FrozenSchedule.from_code(code128)
        assert np.all(np.diff(sched.pivots) > 0)
        assert len(sched.pivots) == 128 - code128.k
        u, _ = sample_codewords(code128, 8, seed=0)
        assert sched.verify(u).all()
        bad = u.copy()
        bad[:, sched.pivots[0]] ^= 1
        assert not sched.verify(bad).any()

    def test_direct_construction_validates(self):
        coeffs = np.zeros((1, 8), dtype=np.uint8)
        coeffs[0, 5] = 1
        with pytest.raises(ValueError):
            FrozenSchedule(8, np.array([3]), coeffs, np.zeros(1, dtype=np.uint8))


class TestDecoderEquivalence:
    def test_sc_equals_single_path_list(self, code128):
        sched = FrozenSchedule.from_code(code128)
        x, _, llrs = _noisy_llrs(code128, 64, 0.08, seed=21)
        for row in llrs:
            a = sc_decode(sched, row)
            b = scl_decode(sched, row, list_size=1)
            assert np.array_equal(a.u_hat, b.u_hat)
            assert np.array_equal(a.x_hat, b.x_hat)
            assert a.metric == pytest.approx(b.metric, abs=1e-4)

    def test_noiseless_recovery(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, x = sample_codewords(code128, 16, seed=1)
        for row in x:
            for decode in (
                lambda l: sc_decode(sched, l),
                lambda l: scl_decode(sched, l, 8),
                lambda l: sequential_decode(sched, l, 8, 256),
            ):
                out = decode(channel_llrs(row, 0.05))
                assert np.array_equal(out.x_hat, row)
                assert out.metric == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("n,k,p", [(8, 2, 0.2), (16, 6, 0.15)])
    def test_full_list_is_maximum_likelihood(self, n, k, p):
        # With L = 2^k no path is ever pruned, so the decoder must return
        # a codeword at minimum Hamming distance from the hard decisions.
        m = n.bit_length() - 1
        prof = density_evolution_minsum(0.2, m)
        code = build_randomized_psc(n, k, prof, seed=7)
        sched = FrozenSchedule.from_code(code)
        _, book = sample_codewords(code, 4 ** k, seed=3)
        book = np.unique(book, axis=0)
        assert len(book) == 2 ** k
        x, y, llrs = _noisy_llrs(code, 400, p, seed=9)
        mag = np.log((1 - p) / p)
        for yi, li in zip(y, llrs):
            out = scl_decode(sched, li, list_size=2 ** k)
            best = int((book != yi).sum(axis=1).min())
            assert hamming_distance(out.x_hat, yi) == best
            assert round(out.metric / mag) == best

    def test_metric_counts_hard_decision_mismatches(self, code128):
        p = 0.1
        mag = np.log((1 - p) / p)
        sched = FrozenSchedule.from_code(code128)
        _, y, llrs = _noisy_llrs(code128, 32, p, seed=5)
        for yi, li in zip(y, llrs):
            out = scl_decode(sched, li, 8)
            assert round(out.metric / mag) == hamming_distance(out.x_hat, yi)

    def test_list_rank_bounds(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 16, 0.12, seed=6)
        for row in llrs:
            out = scl_decode(sched, row, 8)
            assert 0 <= out.list_rank < 8

    def test_non_power_of_two_list_size(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 4, 0.1, seed=8)
        for row in llrs:
            out = scl_decode(sched, row, 3)
            assert sched.verify(out.u_hat)

    def test_larger_list_never_hurts_metric(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 48, 0.12, seed=10)
        worse = 0
        for row in llrs:
            m1 = scl_decode(sched, row, 1).metric
            m8 = scl_decode(sched, row, 8).metric
            worse += m8 > m1 + 1e-4
        assert worse == 0


class TestBatchDecoder:
    def test_matches_single_shot(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 24, 0.1, seed=12)
        res = SclBatchDecoder(sched, 4).decode(llrs)
        for i, row in enumerate(llrs):
            single = scl_decode(sched, row, 4)
            assert np.array_equal(res.best_x()[i], single.x_hat)
            assert res.metrics[i].min() == pytest.approx(single.metric, abs=1e-4)

    def test_counters_scale_with_batch(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 8, 0.1, seed=13)
        one = SclBatchDecoder(sched, 4).decode(llrs)
        two = SclBatchDecoder(sched, 4).decode(np.vstack([llrs, llrs]))
        assert two.sum_count == 2 * one.sum_count
        assert two.comp_count == 2 * one.comp_count

    def test_larger_list_costs_more(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 8, 0.1, seed=13)
        small = SclBatchDecoder(sched, 2).decode(llrs)
        large = SclBatchDecoder(sched, 16).decode(llrs)
        assert large.sum_count > small.sum_count
        assert large.comp_count > small.comp_count

    def test_rejects_bad_list_size(self, code128):
        sched = FrozenSchedule.from_code(code128)
        with pytest.raises(ValueError):
            SclBatchDecoder(sched, 0)


class TestSequential:
    def test_agrees_with_sc_on_clean_words(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, x = sample_codewords(code128, 8, seed=14)
        for row in x:
            llr = channel_llrs(row, 0.05)
            assert np.array_equal(sequential_decode(sched, llr).x_hat, row)

    def test_not_worse_than_sc_on_noisy_batch(self, code128):
        sched = FrozenSchedule.from_code(code128)
        x, _, llrs = _noisy_llrs(code128, 200, 0.12, seed=15)
        bias = expected_metric_bias(
            density_evolution_minsum(0.2, 7).p_err, 0.12
        )
        sc_err = seq_err = 0
        for xi, li in zip(x, llrs):
            sc_err += not np.array_equal(sc_decode(sched, li).x_hat, xi)
            out = sequential_decode(sched, li, 8, 512, bias)
            seq_err += not np.array_equal(out.x_hat, xi)
        assert seq_err <= sc_err + 1

    def test_default_bias_used_when_missing(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 4, 0.1, seed=16)
        for row in llrs:
            out = sequential_decode(sched, row, 4, 128)
            assert sched.verify(out.u_hat)

    def test_single_slot_queue_degenerates_gracefully(self, code128):
        sched = FrozenSchedule.from_code(code128)
        _, _, llrs = _noisy_llrs(code128, 8, 0.2, seed=17)
        for row in llrs:
            out = sequential_decode(sched, row, 1, 1)
            assert sched.verify(out.u_hat)

    def test_rejects_bad_queue(self, code128):
        sched = FrozenSchedule.from_code(code128)
        with pytest.raises(ValueError):
            SequentialDecoder(sched, 8, 0)


class TestQuantize:
    def test_output_is_quantizer_codeword(self, pair128, rng):
        x = rng.integers(0, 2, size=128, dtype=np.uint8)
        res = quantize(x, pair128, 0.25)
        assert pair128.quantizer.matrix.satisfied(res.u_q)
        assert np.array_equal(polar_transform(res.u_q), res.x_q)
        assert res.distortion == hamming_distance(x, res.x_q)
        assert (res.u_q[pair128.f1_set()] == 0).all()

    def test_batch_matches_singles(self, pair128, rng):
        x = rng.integers(0, 2, size=(6, 128), dtype=np.uint8)
        xq, uq, dist, _, _ = quantize_batch(x, pair128, 0.25)
        for i in range(6):
            single = quantize(x[i], pair128, 0.25)
            assert np.array_equal(xq[i], single.x_q)
            assert dist[i] == single.distortion

    def test_codeword_quantizes_to_itself(self, pair128):
        _, x = sample_codewords(pair128.quantizer, 8, seed=19)
        _, _, dist, _, _ = quantize_batch(x, pair128, 0.25)
        assert (dist == 0).all()

    def test_all_frozen_schedule_hits_half_distortion(self, rng):
        # Freezing every input leaves the all-zero word as the only
        # output, so distortion is the input weight.
        n = 64
        coeffs = np.zeros((n, n), dtype=np.uint8)
        sched = FrozenSchedule(
            n, np.arange(n), coeffs, np.zeros(n, dtype=np.uint8)
        )
        x = rng.integers(0, 2, size=(10, n), dtype=np.uint8)
        xq, _, dist, _, _ = quantize_with_schedule(x, sched, 0.25)
        assert not xq.any()
        assert np.array_equal(dist, x.sum(axis=1))

    def test_unconstrained_schedule_is_lossless(self, rng):
        n = 64
        sched = FrozenSchedule(
            n,
            np.zeros(0, dtype=np.int64),
            np.zeros((0, n), dtype=np.uint8),
            np.zeros(0, dtype=np.uint8),
        )
        x = rng.integers(0, 2, size=(10, n), dtype=np.uint8)
        xq, _, dist, _, _ = quantize_with_schedule(x, sched, 0.25)
        assert np.array_equal(xq, x)
        assert not dist.any()

    def test_larger_list_never_increases_distortion(self, pair128, rng):
        x = rng.integers(0, 2, size=(32, 128), dtype=np.uint8)
        _, _, d1, _, _ = quantize_batch(x, pair128, 0.25, list_size=1)
        _, _, d8, _, _ = quantize_batch(x, pair128, 0.25, list_size=8)
        assert (d8 <= d1).all()
