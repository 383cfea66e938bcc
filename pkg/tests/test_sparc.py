"""Sparse superposition code tests: encoder statistics, codebook file
round-trips, and the K-best decoder against exhaustive-search oracles."""

import numpy as np
import pytest

from cipsac.crc import CRC11, crc_encode
from cipsac.exceptions import (CodebookFormatError, ConfigError,
                               DimensionError)
from cipsac.config import preset_config
from cipsac.sparc import (Candidate, Codebook, bits_to_indices, choose_layer_order,
                          crc_select, decode_packet, indices_to_bits,
                          kbest_decode, load_codebook, looped_kbest,
                          make_random_codebook, save_codebook, sparc_encode,
                          update_codebook_csi)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def exhaustive_ml(y, csi):
    """Brute-force minimizer of ||y - sum_v C_H[v, d_v]||^2."""
    v, d, _ = csi.entries.shape
    best, best_idx = None, None
    for combo in np.ndindex(*([d] * v)):
        u = sum(csi.entries[i, combo[i]] for i in range(v))
        dist = np.linalg.norm(y - u) ** 2
        if best is None or dist < best:
            best, best_idx = dist, combo
    return best_idx, best


class TestCodebook:
    def test_determinism(self):
        a = make_random_codebook(3, 16, 8, seed=9)
        b = make_random_codebook(3, 16, 8, seed=9)
        assert np.array_equal(a.entries, b.entries)

    def test_entry_variance(self):
        cb = make_random_codebook(3, 256, 32, seed=1)
        var = np.mean(np.abs(cb.entries) ** 2)
        assert abs(var - 1.0 / 3.0) <= 0.02 / 3.0

    def test_encode_power(self):
        cb = make_random_codebook(3, 256, 32, seed=2)
        rng = np.random.default_rng(3)
        bits = rng.integers(0, 2, size=(10000, 24)).astype(np.uint8)
        energy = np.array([np.sum(np.abs(sparc_encode(b, cb)) ** 2)
                           for b in bits])
        assert 0.95 * 32 <= energy.mean() <= 1.05 * 32

    def test_bad_alphabet_rejected(self):
        with pytest.raises(ConfigError):
            make_random_codebook(3, 12, 8, seed=0)

    def test_file_round_trip(self, tmp_path):
        cb = make_random_codebook(2, 8, 6, seed=4)
        path = tmp_path / "cb.bin"
        save_codebook(cb, path)
        back = load_codebook(path)
        assert np.array_equal(back.entries, cb.entries)
        assert back.provenance.startswith("loaded(")

    def test_truncated_file(self, tmp_path):
        cb = make_random_codebook(2, 8, 6, seed=4)
        path = tmp_path / "cb.bin"
        save_codebook(cb, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(CodebookFormatError):
            load_codebook(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "cb.bin"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 32)
        with pytest.raises(CodebookFormatError) as err:
            load_codebook(path)
        assert err.value.offset == 0

    def test_config_mismatch(self, tmp_path):
        cb = make_random_codebook(2, 8, 6, seed=4)
        path = tmp_path / "cb.bin"
        save_codebook(cb, path)
        with pytest.raises(ConfigError):
            load_codebook(path, config=preset_config("static-siso"))


class TestEncode:
    def test_single_layer(self):
        cb = make_random_codebook(1, 4, 5, seed=5)
        x = sparc_encode(np.array([1, 0], dtype=np.uint8), cb)
        assert np.array_equal(x, cb.entries[0, 2])

    def test_zero_bits_select_index_zero(self):
        cb = make_random_codebook(3, 4, 5, seed=6)
        x = sparc_encode(np.zeros(6, dtype=np.uint8), cb)
        assert np.allclose(x, cb.entries[:, 0].sum(axis=0))

    def test_direct_sum_oracle(self):
        cb = make_random_codebook(3, 256, 32, seed=7)
        rng = np.random.default_rng(8)
        for _ in range(20):
            bits = rng.integers(0, 2, 24).astype(np.uint8)
            idx = bits_to_indices(bits, 3, 8)
            direct = (cb.entries[0, idx[0]] + cb.entries[1, idx[1]]
                      + cb.entries[2, idx[2]])
            assert np.allclose(sparc_encode(bits, cb), direct)
            assert np.array_equal(indices_to_bits(idx, 8), bits)

    def test_big_endian_mapping(self):
        assert list(bits_to_indices(np.array([1, 0, 0, 1, 1, 1]), 2, 3)) == [4, 7]

    def test_length_mismatch(self):
        cb = make_random_codebook(2, 4, 5, seed=9)
        with pytest.raises(DimensionError):
            sparc_encode(np.zeros(5, dtype=np.uint8), cb)


class TestCsiUpdate:
    def test_identity_csi(self):
        cb = make_random_codebook(2, 4, 6, seed=10)
        csi = update_codebook_csi(cb, np.ones((1, 6)))
        assert np.allclose(csi.entries, cb.entries)

    def test_null_channel(self):
        cb = make_random_codebook(2, 4, 6, seed=11)
        csi = update_codebook_csi(cb, np.zeros((2, 6)))
        assert not csi.entries.any()

    def test_channel_consistency_oracle(self):
        # noiseless received vector equals the sum of weighted sub-codewords
        cb = make_random_codebook(3, 8, 6, seed=12)
        rng = np.random.default_rng(13)
        h = crandn(rng, 2, 6)
        bits = rng.integers(0, 2, 9).astype(np.uint8)
        idx = bits_to_indices(bits, 3, 3)
        x = sparc_encode(bits, cb)
        y = (h * x[None, :]).reshape(-1)
        csi = update_codebook_csi(cb, h)
        rebuilt = sum(csi.entries[v, idx[v]] for v in range(3))
        assert np.allclose(y, rebuilt, atol=1e-12)

    def test_antenna_major_layout(self):
        cb = make_random_codebook(1, 2, 3, seed=14)
        h = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], dtype=complex)
        csi = update_codebook_csi(cb, h)
        expect = np.concatenate([h[0] * cb.entries[0, 1], h[1] * cb.entries[0, 1]])
        assert np.allclose(csi.entries[0, 1], expect)


class TestLayerOrder:
    def test_single_layer(self):
        cb = make_random_codebook(1, 4, 6, seed=15)
        csi = update_codebook_csi(cb, np.ones((1, 6)))
        assert list(choose_layer_order(csi, np.zeros(6, dtype=complex))) == [0]

    def test_constructed_gap(self):
        # layer 1's best index dominates by a wide margin -> decoded first
        rng = np.random.default_rng(16)
        entries = crandn(rng, 3, 4, 8) * 0.1
        entries[1, 2] = 10.0 * np.ones(8)
        csi = update_codebook_csi(Codebook(entries=entries), np.ones((1, 8)))
        y = 10.0 * np.ones(8, dtype=complex)
        order = choose_layer_order(csi, y)
        assert order[0] == 1

    def test_tie_break_identity(self):
        rng = np.random.default_rng(17)
        layer = crandn(rng, 1, 4, 8)
        entries = np.repeat(layer, 3, axis=0)
        csi = update_codebook_csi(Codebook(entries=entries), np.ones((1, 8)))
        order = choose_layer_order(csi, crandn(rng, 8))
        assert list(order) == [0, 1, 2]


class TestKbest:
    def test_single_layer_noiseless(self):
        cb = make_random_codebook(1, 8, 6, seed=18)
        rng = np.random.default_rng(19)
        h = crandn(rng, 1, 6)
        x = cb.entries[0, 5]
        y = (h[0] * x)
        csi = update_codebook_csi(cb, h)
        cands = kbest_decode(y, csi, 1, [0])
        assert cands[0].indices == (5,)

    def test_exhaustive_ml_oracle(self):
        rng = np.random.default_rng(20)
        for d in (4, 8):
            cb = make_random_codebook(2, d, 8, seed=21)
            for _ in range(50):
                h = crandn(rng, 1, 8)
                y = crandn(rng, 8)
                csi = update_codebook_csi(cb, h)
                order = choose_layer_order(csi, y)
                cands = kbest_decode(y, csi, d * d, order)
                best = cands[0]
                inv = np.argsort(order)
                natural = tuple(int(best.indices[inv[v]]) for v in range(2))
                ml_idx, ml_dist = exhaustive_ml(y, csi)
                assert natural == ml_idx
                assert best.score + np.linalg.norm(y) ** 2 == pytest.approx(
                    ml_dist, rel=1e-8, abs=1e-10)

    def test_score_distance_identity(self):
        rng = np.random.default_rng(22)
        cb = make_random_codebook(3, 8, 8, seed=23)
        h = crandn(rng, 2, 8)
        y = crandn(rng, 16)
        csi = update_codebook_csi(cb, h)
        order = choose_layer_order(csi, y)
        for cand in kbest_decode(y, csi, 6, order):
            dist = np.linalg.norm(y - cand.cumulative) ** 2
            assert cand.score + np.linalg.norm(y) ** 2 == pytest.approx(
                dist, rel=1e-8)

    def test_scores_ascending(self):
        rng = np.random.default_rng(24)
        cb = make_random_codebook(2, 16, 8, seed=25)
        csi = update_codebook_csi(cb, crandn(rng, 1, 8))
        cands = kbest_decode(crandn(rng, 8), csi, 10, [0, 1])
        scores = [c.score for c in cands]
        assert scores == sorted(scores)

    def test_common_scaling_invariance(self):
        rng = np.random.default_rng(26)
        cb = make_random_codebook(2, 8, 8, seed=27)
        h = crandn(rng, 1, 8)
        y = crandn(rng, 8)
        csi = update_codebook_csi(cb, h)
        order = choose_layer_order(csi, y)
        top = kbest_decode(y, csi, 4, order)[0].indices
        scale = 0.3 - 1.7j
        csi_s = update_codebook_csi(cb, scale * h)
        order_s = choose_layer_order(csi_s, scale * y)
        top_s = kbest_decode(scale * y, csi_s, 4, order_s)[0].indices
        assert list(order) == list(order_s)
        assert top == top_s


class TestLoopedKbest:
    def test_zero_sweeps_noop(self):
        rng = np.random.default_rng(28)
        cb = make_random_codebook(2, 8, 8, seed=29)
        csi = update_codebook_csi(cb, crandn(rng, 1, 8))
        y = crandn(rng, 8)
        order = choose_layer_order(csi, y)
        cands = kbest_decode(y, csi, 4, order)
        out = looped_kbest(cands, y, csi, order, 0)
        assert [c.indices for c in out] == [c.indices for c in cands]

    def test_fixed_point_of_exhaustive_list(self):
        rng = np.random.default_rng(30)
        cb = make_random_codebook(2, 4, 8, seed=31)
        for _ in range(10):
            csi = update_codebook_csi(cb, crandn(rng, 1, 8))
            y = crandn(rng, 8)
            order = choose_layer_order(csi, y)
            cands = kbest_decode(y, csi, 16, order)   # K = D^V: optimal list
            best = cands[0]
            for sweeps in (1, 3):
                out = looped_kbest(cands, y, csi, order, sweeps)
                assert out[0].indices == best.indices
                assert out[0].score == pytest.approx(best.score, rel=1e-9)

    def test_monotone_and_improvement_rate(self):
        # on instances where narrow plain K-best misses the ML point,
        # refinement sweeps must strictly improve a healthy share of them
        rng = np.random.default_rng(32)
        cb = make_random_codebook(3, 8, 8, seed=33)
        missed = improved = 0
        for _ in range(120):
            h = crandn(rng, 1, 8)
            y = crandn(rng, 8)
            csi = update_codebook_csi(cb, h)
            order = choose_layer_order(csi, y)
            cands = kbest_decode(y, csi, 2, order)
            ml_idx, ml_dist = exhaustive_ml(y, csi)
            inv = np.argsort(order)
            natural = tuple(int(cands[0].indices[inv[v]]) for v in range(3))
            out = looped_kbest(cands, y, csi, order, 3)
            assert out[0].score <= cands[0].score + 1e-9
            if natural != ml_idx:
                missed += 1
                if out[0].score < cands[0].score - 1e-12:
                    improved += 1
        assert missed > 10
        assert improved / missed >= 0.5

    def test_distinct_candidates(self):
        rng = np.random.default_rng(34)
        cb = make_random_codebook(3, 8, 8, seed=35)
        csi = update_codebook_csi(cb, crandn(rng, 1, 8))
        y = crandn(rng, 8)
        order = choose_layer_order(csi, y)
        out = looped_kbest(kbest_decode(y, csi, 6, order), y, csi, order, 4)
        assert len({c.indices for c in out}) == len(out)


class TestCrcSelect:
    def _setup(self, seed):
        cb = make_random_codebook(3, 256, 32, seed=seed)
        rng = np.random.default_rng(seed + 1)
        bits = rng.integers(0, 2, 13).astype(np.uint8)
        coded = crc_encode(bits, CRC11)
        h = crandn(rng, 1, 32)
        y = (h[0] * sparc_encode(coded, cb))
        csi = update_codebook_csi(cb, h)
        order = choose_layer_order(csi, y)
        return cb, coded, y, csi, order

    def test_exact_recovery(self):
        cb, coded, y, csi, order = self._setup(36)
        cands = kbest_decode(y, csi, 16, order)
        flag, bits = crc_select(cands, order, CRC11, cb.bits_per_layer)
        assert flag == 1
        assert np.array_equal(bits, coded)

    def test_all_corrupted(self):
        cb, coded, y, csi, order = self._setup(37)
        cands = kbest_decode(y, csi, 16, order)
        # corrupt every candidate's first decoded index
        broken = [Candidate((c.indices[0] ^ 1,) + c.indices[1:], c.cumulative,
                            c.score) for c in cands]
        flag, bits = crc_select(broken, order, CRC11, cb.bits_per_layer)
        assert flag == 0
        assert bits.shape == (24,)


class TestDecodePacket:
    def test_noiseless(self):
        rng = np.random.default_rng(38)
        cb = make_random_codebook(3, 256, 32, seed=39)
        bits = rng.integers(0, 2, 13).astype(np.uint8)
        coded = crc_encode(bits, CRC11)
        h = crandn(rng, 2, 32)
        y = h * sparc_encode(coded, cb)[None, :]
        flag, out = decode_packet(y, h, cb, 16, 3, CRC11)
        assert flag == 1 and np.array_equal(out, coded)

    def test_null_csi_fails(self):
        rng = np.random.default_rng(40)
        cb = make_random_codebook(3, 256, 32, seed=41)
        fails = 0
        for _ in range(20):
            bits = rng.integers(0, 2, 13).astype(np.uint8)
            coded = crc_encode(bits, CRC11)
            h = crandn(rng, 1, 32)
            y = h * sparc_encode(coded, cb)[None, :]
            flag, out = decode_packet(y, np.zeros_like(h), cb, 16, 3, CRC11)
            if flag == 0 or not np.array_equal(out, coded):
                fails += 1
        assert fails >= 19

    def test_per_below_1e2_at_9db_perfect_csi(self):
        # paper-scale configuration, flat 3-tap channel, data SNR 9 dB
        rng = np.random.default_rng(42)
        cb = make_random_codebook(3, 256, 32, seed=43)
        sigma_sq = 10 ** -0.9
        n_trials, errors = 3000, 0
        taps = np.arange(1, 4)
        grid = np.exp(-2j * np.pi * np.outer(taps, np.arange(32)) / 32)
        for _ in range(n_trials):
            bits = rng.integers(0, 2, 13).astype(np.uint8)
            coded = crc_encode(bits, CRC11)
            alphas = crandn(rng, 3) / np.sqrt(6)
            h = (alphas @ grid)[None, :]
            noise = crandn(rng, 32) * np.sqrt(sigma_sq / 2)
            y = h * sparc_encode(coded, cb)[None, :] + noise
            _, out = decode_packet(y, h, cb, 16, 3, CRC11)
            if not np.array_equal(out, coded):
                errors += 1
        assert errors / n_trials < 1e-2

    def test_coded_beats_uncoded_qpsk_at_equal_ebn0(self):
        # Eb/N0 for the coded system at 9 dB data SNR: N/N_b energy per bit
        rng = np.random.default_rng(44)
        cb = make_random_codebook(3, 256, 32, seed=45)
        ebn0 = (10 ** 0.9) * 32 / 13
        taps = np.arange(1, 4)
        grid = np.exp(-2j * np.pi * np.outer(taps, np.arange(32)) / 32)
        n_trials = 400
        coded_err = qpsk_err = 0
        for _ in range(n_trials):
            alphas = crandn(rng, 3) / np.sqrt(6)
            h = alphas @ grid
            # coded packet at sigma^2 = 10^-0.9
            bits = rng.integers(0, 2, 13).astype(np.uint8)
            coded = crc_encode(bits, CRC11)
            y = h * sparc_encode(coded, cb) + crandn(rng, 32) * np.sqrt(10 ** -0.9 / 2)
            _, out = decode_packet(y[None, :], h[None, :], cb, 16, 3, CRC11)
            coded_err += not np.array_equal(out, coded)
            # uncoded QPSK packet (2N bits) at the same Eb/N0
            sigma_q = 1.0 / (2.0 * ebn0)   # Es = 1, 2 bits per symbol
            qbits = rng.integers(0, 2, (32, 2))
            sym = ((1 - 2 * qbits[:, 0]) + 1j * (1 - 2 * qbits[:, 1])) / np.sqrt(2)
            yq = h * sym + crandn(rng, 32) * np.sqrt(sigma_q / 2)
            eq = yq * h.conj()
            dec = np.stack([(eq.real < 0).astype(int), (eq.imag < 0).astype(int)],
                           axis=1)
            qpsk_err += not np.array_equal(dec, qbits)
        assert coded_err / n_trials < qpsk_err / n_trials
