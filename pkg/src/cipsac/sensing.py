"""Parameter sensing: AoA via MUSIC, per-angle spatial filtering, data
substitution/equalization, 2D-FFT delay-Doppler search, and MMSE gain
estimation.

Wrongly decoded data symbols are replaced by zeros before the 2D-FFT;
this is the peak-to-side-lobe-optimal substitution and is applied directly
to the equalized grid (identical to substituting a zero codeword first and
dividing, without the spurious division). The module also hosts a
Monte Carlo peak-to-side-lobe-ratio (PSR) estimator that scores the zero
substitution against a random Gaussian one with common random numbers.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import AOA_RANGE, complex_normal
from .config import SystemConfig
from .exceptions import ConfigError, DimensionError, InvalidInputError
from .numerics import fft2, hermitian_eig, mmse_solve


@dataclass(frozen=True)
class SensingEstimate:
    """Estimated parameters of one target; mirrors TargetParameters.
    ``aoa_rad`` is None when the receiver has a single antenna."""

    gain: complex
    delay_tap: int
    doppler_bin: int
    aoa_rad: Optional[float]


@dataclass(frozen=True)
class AoaGrid:
    """Uniform search grid over the angle-of-arrival support, in degrees."""

    step_deg: float = 1.0
    lo_deg: float = math.degrees(AOA_RANGE[0])
    hi_deg: float = math.degrees(AOA_RANGE[1])

    def angles_rad(self) -> np.ndarray:
        if self.step_deg <= 0.0:
            raise ConfigError(f"grid step must be > 0, got {self.step_deg}")
        n = int(round((self.hi_deg - self.lo_deg) / self.step_deg))
        return np.radians(self.lo_deg + self.step_deg * np.arange(n + 1))


def steering_vector(theta: float, n_antennas: int) -> np.ndarray:
    return np.exp(1j * np.pi * np.arange(n_antennas) * math.cos(theta))


def estimate_aoa_music(y, n_targets: int, grid: AoaGrid = AoaGrid()) -> list:
    """Angles of the L strongest spectrum peaks, ascending, in radians.

    The spatial covariance is taken over all subcarrier/symbol snapshots;
    its N_r - L weakest eigenvectors span the noise subspace. Peaks are
    local maxima of the inverse projection onto that subspace; if fewer
    than L local maxima exist the largest remaining grid values fill in.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3:
        raise DimensionError(f"Y must be N_r x N x M, got shape {y.shape}")
    n_rx = y.shape[0]
    if n_rx <= n_targets:
        raise ConfigError(
            f"MUSIC needs n_antennas > n_targets, got {n_rx} <= {n_targets}")
    snaps = y.reshape(n_rx, -1)
    cov = snaps @ snaps.conj().T / snaps.shape[1]
    _, q = hermitian_eig(cov)
    noise_basis = q[:, : n_rx - n_targets]
    angles = grid.angles_rad()
    steer = np.exp(
        1j * np.pi * np.arange(n_rx)[:, None] * np.cos(angles)[None, :])
    proj = noise_basis.conj().T @ steer
    denom = np.einsum("kg,kg->g", proj.conj(), proj).real
    spectrum = 1.0 / np.maximum(denom, 1e-300)

    interior = np.zeros(angles.size, dtype=bool)
    if angles.size >= 3:
        interior[1:-1] = (spectrum[1:-1] > spectrum[:-2]) & (spectrum[1:-1] > spectrum[2:])
    if angles.size >= 2:
        interior[0] = spectrum[0] > spectrum[1]
        interior[-1] = spectrum[-1] > spectrum[-2]
    peak_idx = np.flatnonzero(interior)
    peak_idx = peak_idx[np.lexsort((peak_idx, -spectrum[peak_idx]))][:n_targets]
    if peak_idx.size < n_targets:
        rest = np.setdiff1d(np.arange(angles.size), peak_idx)
        rest = rest[np.lexsort((rest, -spectrum[rest]))]
        peak_idx = np.concatenate([peak_idx, rest[: n_targets - peak_idx.size]])
    return sorted(float(angles[i]) for i in peak_idx)


def spatial_filter(y, theta: float) -> np.ndarray:
    """Matched-filter the antenna axis against the steering vector."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3:
        raise DimensionError(f"Y must be N_r x N x M, got shape {y.shape}")
    weights = steering_vector(theta, y.shape[0]).conj()
    return np.einsum("r,rnm->nm", weights, y)


def substitute_and_equalize(z_tilde, x_pilot, x_data_hat, flags,
                            m_grid: int) -> np.ndarray:
    """Equalize known columns and zero unusable ones, padded to the grid.

    Pilot columns divide by the pilot signal, data columns that passed the
    CRC divide by the re-encoded codeword, failed data columns become zero,
    and columns beyond the frame stay zero so the Doppler axis spans the
    full grid.
    """
    z_tilde = np.asarray(z_tilde, dtype=np.complex128)
    x_pilot = np.asarray(x_pilot, dtype=np.complex128)
    x_data_hat = np.asarray(x_data_hat, dtype=np.complex128)
    flags = np.asarray(flags).astype(bool)
    n_sc, m_tot = z_tilde.shape
    n_pilot = x_pilot.shape[1]
    n_data = x_data_hat.shape[1] if x_data_hat.size else 0
    if flags.shape != (n_data,):
        raise DimensionError(f"flags shape {flags.shape} != (n_data={n_data},)")
    if m_tot != n_pilot + n_data:
        raise DimensionError(
            f"frame has {m_tot} columns, pilots+data give {n_pilot + n_data}")
    if m_tot > m_grid:
        raise DimensionError(f"frame columns {m_tot} exceed grid {m_grid}")
    out = np.zeros((n_sc, m_grid), dtype=np.complex128)
    if np.any(x_pilot == 0.0):
        raise InvalidInputError("pilot signal contains zero entries")
    out[:, :n_pilot] = z_tilde[:, :n_pilot] / x_pilot
    kept = np.flatnonzero(flags)
    if kept.size:
        div = x_data_hat[:, kept]
        if np.any(div == 0.0):
            raise InvalidInputError("re-encoded data contains zero entries")
        out[:, n_pilot + kept] = z_tilde[:, n_pilot + kept] / div
    return out


def _delay_doppler_magnitude(z, n_guard: int, m_grid: int):
    zhat = fft2(z)
    if zhat.shape[1] != m_grid:
        raise DimensionError(
            f"Z has {zhat.shape[1]} columns, expected the Doppler grid {m_grid}")
    if not 1 <= n_guard <= zhat.shape[0]:
        raise DimensionError(f"n_guard {n_guard} outside [1, {zhat.shape[0]}]")
    return np.abs(zhat[:n_guard, :])


def _bin_to_doppler(v: int, m_grid: int) -> int:
    return v if v < m_grid // 2 else v - m_grid


def estimate_delay_doppler(z, n_guard: int, m_grid: int):
    """Argmax of the 2D-FFT magnitude over the guarded delay range.

    Doppler FFT bins at or above M/2 wrap to negative values. Exact
    magnitude ties resolve to the smallest delay tap and then the first
    FFT bin in scan order (0, 1, ..., M-1, i.e. non-negative Doppler
    first), which maps the all-ties degenerate case to zero Doppler.
    """
    mag = _delay_doppler_magnitude(z, n_guard, m_grid)
    flat = int(np.argmax(mag))
    n_hat, v = divmod(flat, m_grid)
    return n_hat, _bin_to_doppler(v, m_grid)


def top_delay_doppler_peaks(z, n_guard: int, m_grid: int, count: int) -> list:
    """Strongest cell of each of the ``count`` strongest delay rows.

    Single-antenna receivers have no per-angle branches, so the single
    delay-Doppler surface must yield one peak per target. Targets are
    sampled with distinct delay taps and a target's subcarrier phase ramp
    maps to exactly one delay row, so each target owns a row; picking rows
    (rather than raw cells, which can tie along the Doppler axis of one
    strong row) separates them. Ties follow the argmax scan-order rules.
    """
    mag = _delay_doppler_magnitude(z, n_guard, m_grid)
    best_bin = np.argmax(mag, axis=1)
    row_peak = mag[np.arange(mag.shape[0]), best_bin]
    rows = np.lexsort((np.arange(mag.shape[0]), -row_peak))[:count]
    return [(int(n), _bin_to_doppler(int(best_bin[n]), m_grid)) for n in rows]


def estimate_rcs(y, x_frame_hat, branches, flags, sigma_p_sq: float,
                 sigma_d_sq: float, n_pilot: int, m_grid: int) -> np.ndarray:
    """Joint MMSE estimate of the per-target complex gains.

    ``branches`` holds one (delay_tap, doppler_bin, aoa_rad-or-None) per
    target. Data columns whose CRC failed are dropped entirely; pilot and
    kept data rows carry their own noise variances in the MMSE weighting.
    """
    y = np.asarray(y, dtype=np.complex128)
    x_frame_hat = np.asarray(x_frame_hat, dtype=np.complex128)
    n_rx, n_sc, m_tot = y.shape
    flags = np.asarray(flags).astype(bool)
    kept = np.concatenate([
        np.arange(n_pilot),
        n_pilot + np.flatnonzero(flags),
    ])
    y_kept = y[:, :, kept].reshape(-1)
    cols = []
    sub_idx = np.arange(n_sc)
    for delay, doppler, theta in branches:
        sub = np.exp(-2j * np.pi * delay * sub_idx / n_sc)
        sym = np.exp(2j * np.pi * doppler * kept / m_grid)
        ant = (steering_vector(theta, n_rx) if theta is not None and n_rx > 1
               else np.ones(n_rx, dtype=np.complex128))
        grid = x_frame_hat[:, kept] * sub[:, None] * sym[None, :]
        cols.append((ant[:, None, None] * grid[None, :, :]).reshape(-1))
    s = np.stack(cols, axis=1)
    var_per_col = np.where(kept < n_pilot, sigma_p_sq, sigma_d_sq)
    r_diag = np.broadcast_to(var_per_col[None, None, :],
                             (n_rx, n_sc, kept.size)).reshape(-1)
    return mmse_solve(s, r_diag, y_kept)


def sense(y_pilot, y_data, x_pilot, x_data_hat, flags,
          config: SystemConfig, grid: AoaGrid = AoaGrid()) -> list:
    """Full sensing pass over the concatenated pilot+data frame.

    Multi-antenna receivers run MUSIC and one delay-Doppler branch per
    estimated angle; single-antenna receivers skip MUSIC and take the L
    strongest peaks of the single surface. Gains come last from the joint
    MMSE fit. Deterministic for identical inputs.
    """
    c = config
    y_pilot = np.asarray(y_pilot, dtype=np.complex128)
    y_data = np.asarray(y_data, dtype=np.complex128)
    y = np.concatenate([y_pilot, y_data], axis=2)
    if y.shape[0] != c.n_antennas or y.shape[1] != c.n_subcarriers:
        raise DimensionError(f"received tensor shape {y.shape} does not match config")
    branches = []
    if c.n_antennas > 1:
        thetas = estimate_aoa_music(y, c.n_targets, grid)
        for theta in thetas:
            z_t = spatial_filter(y, theta)
            z = substitute_and_equalize(z_t, x_pilot, x_data_hat, flags,
                                        c.doppler_grid)
            n_hat, m_hat = estimate_delay_doppler(z, c.n_guard, c.doppler_grid)
            branches.append((n_hat, m_hat, theta))
    else:
        z = substitute_and_equalize(y[0], x_pilot, x_data_hat, flags,
                                    c.doppler_grid)
        peaks = top_delay_doppler_peaks(z, c.n_guard, c.doppler_grid, c.n_targets)
        branches = [(n, m, None) for n, m in peaks]
    x_frame = np.concatenate([x_pilot, x_data_hat], axis=1)
    gains = estimate_rcs(y, x_frame, branches, flags, c.sigma_p_sq,
                         c.sigma_d_sq, c.n_pilot, c.doppler_grid)
    return [SensingEstimate(complex(gains[i]), branches[i][0], branches[i][1],
                            branches[i][2])
            for i in range(len(branches))]


def psr_estimate(policy: str, n_sc: int = 16, m_grid: int = 16,
                 n_guard: Optional[int] = None, sigma_sq: float = 0.1,
                 n_pilot: int = 1, corrupt_index: Optional[int] = None,
                 trials: int = 1000, seed: int = 0,
                 data: str = "gaussian", gain: Optional[complex] = None):
    """Monte Carlo peak-to-side-lobe ratio of one substitution policy.

    Single target at the (0, 0) grid cell with gain CN(0, 1) (or ``gain``
    if given); ``corrupt_index`` marks the one data symbol whose decode
    failed and is replaced per ``policy`` ("zero" or "gaussian") in the
    matched-filter reference. Trials are driven by per-trial child seeds
    drawn before the substitution value, so both policies can share
    channel, data, and noise realizations for a paired comparison.

    Returns ``(mean_psr, std_psr)`` over the trials.
    """
    if policy not in ("zero", "gaussian"):
        raise ConfigError(f"unknown policy {policy!r}")
    if data not in ("gaussian", "ones"):
        raise ConfigError(f"unknown data mode {data!r}")
    if n_guard is None:
        n_guard = max(1, n_sc // 4)
    if corrupt_index is not None and not n_pilot <= corrupt_index < m_grid:
        raise ConfigError(
            f"corrupt_index {corrupt_index} outside data range [{n_pilot}, {m_grid})")
    children = np.random.SeedSequence(seed).spawn(trials)
    samples = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng(children[t])
        a = complex_normal(rng) if gain is None else gain
        x = np.ones((n_sc, m_grid), dtype=np.complex128)
        if data == "gaussian":
            x[:, n_pilot:] = complex_normal(rng, (n_sc, m_grid - n_pilot))
        w = complex_normal(rng, (n_sc, m_grid), var=sigma_sq) if sigma_sq > 0 \
            else np.zeros((n_sc, m_grid), dtype=np.complex128)
        y = a * x + w
        ref = x.copy()
        if corrupt_index is not None:
            ref[:, corrupt_index] = (0.0 if policy == "zero"
                                     else complex_normal(rng, n_sc))
        r = fft2(y * ref.conj())
        mag2 = np.abs(r[:n_guard, :]) ** 2
        samples[t] = 2.0 * mag2[0, 0] - mag2.sum()
    return float(samples.mean()), float(samples.std(ddof=1) if trials > 1 else 0.0)
