"""Channel model tests: target sampling statistics, phase conventions, the
SNR definition, and reconstruction against a per-entry oracle."""

import numpy as np
import pytest

from cipsac.channel import (AOA_RANGE, TargetParameters, apply_channel,
                            per_symbol_noise_var, reconstruct_channel,
                            sample_targets)
from cipsac.config import preset_config
from cipsac.exceptions import ConfigError
from cipsac.sensing import SensingEstimate


def test_static_delays_occupy_first_taps():
    cfg = preset_config("static-siso")
    rng = np.random.default_rng(0)
    targets = sample_targets(cfg, "static-siso", rng)
    assert [t.delay_tap for t in targets] == [1, 2, 3]
    assert all(t.doppler_bin == 0 for t in targets)


def test_gain_second_moment():
    cfg = preset_config("mobile-siso")
    rng = np.random.default_rng(1)
    draws = 40000  # 1.2e5 gains in total
    acc = 0.0
    for _ in range(draws):
        acc += sum(abs(t.gain) ** 2 for t in sample_targets(cfg, "mobile-siso", rng))
    mean = acc / (draws * cfg.n_targets)
    assert abs(mean - 1.0 / cfg.n_targets) <= 0.02 / cfg.n_targets


def test_aoa_support_and_distinct_delays():
    cfg = preset_config("mobile-simo")
    rng = np.random.default_rng(2)
    for _ in range(200):
        targets = sample_targets(cfg, "mobile-simo", rng)
        delays = [t.delay_tap for t in targets]
        assert len(set(delays)) == len(delays)
        for t in targets:
            assert AOA_RANGE[0] <= t.aoa_rad <= AOA_RANGE[1]
            assert 0 <= t.delay_tap < cfg.n_guard
            assert -cfg.doppler_grid // 2 <= t.doppler_bin < cfg.doppler_grid // 2


def test_too_many_targets_rejected():
    cfg = preset_config("mobile-siso")
    with pytest.raises(ConfigError):
        cfg.with_overrides(n_targets=cfg.n_guard + 1)


def test_identity_channel():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(8, 4)) + 1j * rng.normal(size=(8, 4))
    tgt = [TargetParameters(1.0 + 0j, 0, 0, np.pi / 2)]
    y = apply_channel(x, tgt, np.zeros(4), 1, 8, rng)
    assert np.allclose(y[0], x, atol=1e-12)


def test_phase_conventions():
    # one delay tap shifts subcarrier n by exp(-2j pi n / N)
    rng = np.random.default_rng(4)
    x = np.ones((8, 1), dtype=complex)
    tgt = [TargetParameters(1.0 + 0j, 1, 0, np.pi / 2)]
    y = apply_channel(x, tgt, np.zeros(1), 1, 8, rng)
    expect = np.exp(-2j * np.pi * np.arange(8) / 8)
    assert np.allclose(y[0, :, 0], expect, atol=1e-12)
    # one Doppler bin advances symbol m by exp(+2j pi m / M)
    x = np.ones((4, 8), dtype=complex)
    tgt = [TargetParameters(1.0 + 0j, 0, 1, np.pi / 2)]
    y = apply_channel(x, tgt, np.zeros(8), 1, 8, rng)
    expect = np.exp(2j * np.pi * np.arange(8) / 8)
    assert np.allclose(y[0, 0, :], expect, atol=1e-12)
    # antenna r turns by exp(+1j pi r cos(theta))
    x = np.ones((4, 1), dtype=complex)
    theta = 1.1
    tgt = [TargetParameters(1.0 + 0j, 0, 0, theta)]
    y = apply_channel(x, tgt, np.zeros(1), 4, 8, rng)
    expect = np.exp(1j * np.pi * np.arange(4) * np.cos(theta))
    assert np.allclose(y[:, 0, 0], expect, atol=1e-12)


def test_linearity():
    rng = np.random.default_rng(5)
    tgts = [TargetParameters(0.7 - 0.2j, 2, -3, 1.0),
            TargetParameters(-0.1 + 0.9j, 5, 4, 2.0)]
    x1 = rng.normal(size=(16, 8)) + 1j * rng.normal(size=(16, 8))
    x2 = rng.normal(size=(16, 8)) + 1j * rng.normal(size=(16, 8))
    z = np.zeros(8)
    y12 = apply_channel(x1 + x2, tgts, z, 2, 16, rng)
    y1 = apply_channel(x1, tgts, z, 2, 16, rng)
    y2 = apply_channel(x2, tgts, z, 2, 16, rng)
    assert np.allclose(y12, y1 + y2, atol=1e-10)


def test_empirical_snr_matches_definition():
    # E||S||^2 / E||W||^2 = 1/sigma^2 for unit-power frames
    cfg = preset_config("mobile-siso").with_overrides(
        n_subcarriers=8, n_guard=4, doppler_grid=8, n_pilot=2, n_data=6)
    sigma_sq = 0.5
    rng = np.random.default_rng(6)
    sig = noise = 0.0
    for _ in range(10000):
        targets = sample_targets(cfg, "mobile-siso", rng)
        x = np.ones((cfg.n_subcarriers, cfg.frame_symbols), dtype=complex)
        clean = apply_channel(x, targets, np.zeros(cfg.frame_symbols), 1,
                              cfg.doppler_grid, rng)
        noisy = apply_channel(x, targets, np.full(cfg.frame_symbols, sigma_sq),
                              1, cfg.doppler_grid, rng)
        sig += np.sum(np.abs(clean) ** 2)
        noise += np.sum(np.abs(noisy - clean) ** 2)
    snr = sig / noise
    assert abs(snr - 1.0 / sigma_sq) <= 0.03 / sigma_sq


def test_reconstruct_flat_channel():
    est = [SensingEstimate(1.0 + 0j, 0, 0, np.pi / 2)]
    h = reconstruct_channel(est, 2, 4, 3, m_offset=2, m_grid=8)
    assert np.allclose(h, 1.0, atol=1e-12)


def test_reconstruct_matches_per_entry_oracle():
    rng = np.random.default_rng(7)
    ests = [SensingEstimate(0.3 + 0.4j, 2, -5, 0.9),
            SensingEstimate(-0.6 + 0.1j, 6, 3, 2.1)]
    n_rx, n_sc, n_sym, m_off, m_grid = 3, 8, 5, 4, 16
    h = reconstruct_channel(ests, n_rx, n_sc, n_sym, m_off, m_grid)
    for r in range(n_rx):
        for n in range(n_sc):
            for m in range(n_sym):
                acc = 0.0 + 0.0j
                for e in ests:
                    acc += e.gain \
                        * np.exp(-2j * np.pi * e.delay_tap * n / n_sc) \
                        * np.exp(2j * np.pi * e.doppler_bin * (m + m_off) / m_grid) \
                        * np.exp(1j * np.pi * r * np.cos(e.aoa_rad))
                assert abs(h[r, n, m] - acc) < 1e-12


def test_zero_noise_reconstruction_consistency():
    # channel applied with sigma=0 equals reconstruction from the truth
    cfg = preset_config("mobile-simo")
    rng = np.random.default_rng(8)
    targets = sample_targets(cfg, "mobile-simo", rng)
    x = np.ones((cfg.n_subcarriers, cfg.frame_symbols), dtype=complex)
    y = apply_channel(x, targets, np.zeros(cfg.frame_symbols), cfg.n_antennas,
                      cfg.doppler_grid, rng)
    h = reconstruct_channel(targets, cfg.n_antennas, cfg.n_subcarriers,
                            cfg.frame_symbols, 0, cfg.doppler_grid)
    assert np.max(np.abs(y - h * x[None, :, :])) <= 1e-10
