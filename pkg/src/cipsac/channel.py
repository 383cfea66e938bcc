"""Multi-target time-varying SIMO-OFDM channel in the frequency domain.

A target with gain alpha, delay tap n, Doppler bin m and angle theta turns
subcarrier/symbol/antenna cell (n', m', r) of the transmitted grid by

    alpha * exp(-2j*pi*n*n'/N) * exp(+2j*pi*m*m'/M) * exp(+1j*pi*r*cos(theta))

where the symbol index m' runs over one global time base 0 .. M_p+M_d-1
spanning pilots and data, so sensing over the concatenated frame stays
phase-coherent.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import SCENARIOS, SystemConfig
from .exceptions import ConfigError, DimensionError

AOA_RANGE = (math.pi / 6.0, 5.0 * math.pi / 6.0)


def complex_normal(rng, shape=(), var=1.0):
    """i.i.d. CN(0, var) samples."""
    scale = math.sqrt(var / 2.0)
    return rng.normal(0.0, scale, shape) + 1j * rng.normal(0.0, scale, shape)


@dataclass(frozen=True)
class TargetParameters:
    """Ground-truth parameters of one target."""

    gain: complex          # alpha, complex radar cross-section
    delay_tap: int         # n, integer delay in [0, N_G-1]
    doppler_bin: int       # m, integer Doppler in [-M/2, M/2-1]
    aoa_rad: float         # theta, angle of arrival in radians


def sample_targets(config: SystemConfig, scenario: str, rng) -> list:
    """Draw the per-scenario target set.

    Gains are CN(0, 1/L). Static SISO places the delays on the first L taps
    (n = 1..L) with zero Doppler; the mobile scenarios draw distinct delay
    taps and uniform Doppler bins; AoA is uniform on [pi/6, 5pi/6] (unused
    by the channel when the receiver has a single antenna).
    """
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    c = config
    if c.n_targets > c.n_guard:
        raise ConfigError(f"cannot place {c.n_targets} distinct taps in {c.n_guard}")
    gains = complex_normal(rng, c.n_targets, var=1.0 / c.n_targets)
    thetas = rng.uniform(AOA_RANGE[0], AOA_RANGE[1], c.n_targets)
    if scenario == "static-siso":
        if c.n_targets >= c.n_guard:
            raise ConfigError(
                f"static preset needs delay taps 1..L inside [0, {c.n_guard - 1}]"
            )
        delays = np.arange(1, c.n_targets + 1)
        dopplers = np.zeros(c.n_targets, dtype=int)
    else:
        delays = rng.choice(c.n_guard, size=c.n_targets, replace=False)
        half = c.doppler_grid // 2
        dopplers = rng.integers(-half, half, size=c.n_targets)
    return [
        TargetParameters(complex(gains[i]), int(delays[i]), int(dopplers[i]),
                         float(thetas[i]))
        for i in range(c.n_targets)
    ]


def _phase_grids(source, n_sc, m_tot, m_grid, n_rx, m_offset=0):
    """Per-target rank-1 phase factors; returns (n_rx,), (n_sc,), (m_tot,)."""
    ant = np.ones(n_rx, dtype=np.complex128)
    if n_rx > 1 and source.aoa_rad is not None:
        ant = np.exp(1j * np.pi * np.arange(n_rx) * math.cos(source.aoa_rad))
    sub = np.exp(-2j * np.pi * source.delay_tap * np.arange(n_sc) / n_sc)
    sym = np.exp(
        2j * np.pi * source.doppler_bin * (np.arange(m_tot) + m_offset) / m_grid
    )
    return ant, sub, sym


def apply_channel(x, targets: Sequence[TargetParameters], sigma_sq, n_rx: int,
                  m_grid: int, rng) -> np.ndarray:
    """Propagate the N x M_tot frame through the target channel plus AWGN.

    ``sigma_sq`` holds one noise variance per symbol column (pilot columns
    typically sigma_p^2, data columns sigma_d^2).
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2:
        raise DimensionError(f"X must be 2-D, got shape {x.shape}")
    n_sc, m_tot = x.shape
    sigma_sq = np.broadcast_to(np.asarray(sigma_sq, dtype=np.float64), (m_tot,))
    y = np.zeros((n_rx, n_sc, m_tot), dtype=np.complex128)
    for tgt in targets:
        ant, sub, sym = _phase_grids(tgt, n_sc, m_tot, m_grid, n_rx)
        y += tgt.gain * ant[:, None, None] * (x * sub[:, None] * sym[None, :])
    noise = complex_normal(rng, y.shape)
    y += noise * np.sqrt(sigma_sq)[None, None, :]
    return y


def reconstruct_channel(estimates, n_rx: int, n_sc: int, n_symbols: int,
                        m_offset: int, m_grid: int) -> np.ndarray:
    """Channel tensor implied by a list of sensed parameter sets.

    Symbol indices are offset by ``m_offset`` (the pilot length) so the data
    symbols continue the pilot's Doppler time base.
    """
    h = np.zeros((n_rx, n_sc, n_symbols), dtype=np.complex128)
    for est in estimates:
        ant, sub, sym = _phase_grids(est, n_sc, n_symbols, m_grid, n_rx,
                                     m_offset=m_offset)
        h += est.gain * ant[:, None, None] * (sub[:, None] * sym[None, :])[None, :, :]
    return h


def per_symbol_noise_var(config: SystemConfig) -> np.ndarray:
    """sigma^2 per frame column: pilot columns first, then data columns."""
    return np.concatenate([
        np.full(config.n_pilot, config.sigma_p_sq),
        np.full(config.n_data, config.sigma_d_sq),
    ])
