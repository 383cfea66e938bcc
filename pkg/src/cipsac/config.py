"""System configuration: grid, code, and noise parameters plus the three
scenario presets used throughout the experiments."""

from dataclasses import dataclass, replace
from typing import Optional

from .crc import CRC11, CrcPolynomial
from .exceptions import ConfigError

SCENARIOS = ("static-siso", "mobile-siso", "mobile-simo")


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


def snr_db_to_noise_var(snr_db: float) -> float:
    """Noise variance for unit-power signal entries, sigma^2 = 10^(-SNR/10)."""
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All grid, code, and noise parameters of one link-level setup.

    ``doppler_grid`` is the number of OFDM symbols that spans one full cycle
    of the finest Doppler bin (the paper-level M); the frame itself carries
    ``n_pilot + n_data <= doppler_grid`` symbols, with the remainder
    implicitly zero-padded during sensing.
    """

    n_subcarriers: int = 32          # N
    n_guard: int = 8                 # N_G, detectable delay taps
    doppler_grid: int = 32           # M
    n_pilot: int = 4                 # M_p
    n_data: int = 28                 # M_d
    n_antennas: int = 1              # N_r
    n_targets: int = 3               # L
    sigma_p_sq: float = 1.0
    sigma_d_sq: float = 1.0
    beam_width: int = 16             # K kept per layer of the tree search
    n_iterations: int = 4            # N_i, sensing/decoding loop cap
    n_refine_sweeps: int = 4         # N_i_d, looped K-best sweeps
    n_layers: int = 4                # V
    layer_size: int = 256            # D
    n_info_bits: int = 21            # N_b
    crc_poly: CrcPolynomial = CRC11
    bandwidth_hz: Optional[float] = None
    t_ofdm_s: Optional[float] = None

    @property
    def n_crc(self) -> int:
        return self.crc_poly.degree

    @property
    def n_coded_bits(self) -> int:
        return self.n_info_bits + self.n_crc

    @property
    def bits_per_layer(self) -> int:
        return self.layer_size.bit_length() - 1

    @property
    def frame_symbols(self) -> int:
        return self.n_pilot + self.n_data

    @property
    def delay_resolution_s(self) -> Optional[float]:
        return None if self.bandwidth_hz is None else 1.0 / self.bandwidth_hz

    @property
    def doppler_resolution_hz(self) -> Optional[float]:
        if self.t_ofdm_s is None:
            return None
        return 1.0 / (self.doppler_grid * self.t_ofdm_s)

    def validate(self) -> "SystemConfig":
        c = self
        if not _is_pow2(c.n_subcarriers):
            raise ConfigError(f"n_subcarriers must be a power of two, got {c.n_subcarriers}")
        if not _is_pow2(c.doppler_grid):
            raise ConfigError(f"doppler_grid must be a power of two, got {c.doppler_grid}")
        if not 1 <= c.n_guard <= c.n_subcarriers:
            raise ConfigError(f"n_guard must lie in [1, N], got {c.n_guard}")
        if c.n_pilot < 1 or c.n_data < 0:
            raise ConfigError("need n_pilot >= 1 and n_data >= 0")
        if c.frame_symbols > c.doppler_grid:
            raise ConfigError(
                f"frame of {c.frame_symbols} symbols exceeds the Doppler grid "
                f"{c.doppler_grid}; only single-span frames are supported"
            )
        if c.n_antennas < 1:
            raise ConfigError("n_antennas must be >= 1")
        if c.n_antennas > 1 and c.n_targets >= c.n_antennas:
            raise ConfigError(
                f"need n_targets < n_antennas for a nonempty noise subspace, "
                f"got L={c.n_targets}, N_r={c.n_antennas}"
            )
        if c.n_targets < 1 or c.n_targets > c.n_guard:
            raise ConfigError(f"n_targets must lie in [1, n_guard], got {c.n_targets}")
        if c.sigma_p_sq <= 0.0 or c.sigma_d_sq <= 0.0:
            raise ConfigError("noise variances must be > 0")
        if not _is_pow2(c.layer_size):
            raise ConfigError(f"layer_size must be a power of two, got {c.layer_size}")
        if c.n_layers < 1 or c.beam_width < 1:
            raise ConfigError("n_layers and beam_width must be >= 1")
        if c.n_refine_sweeps < 0 or c.n_iterations < 0:
            raise ConfigError("iteration counts must be >= 0")
        if c.n_info_bits < 1:
            raise ConfigError("n_info_bits must be >= 1")
        if c.n_layers * c.bits_per_layer != c.n_coded_bits:
            raise ConfigError(
                f"V*log2(D) = {c.n_layers * c.bits_per_layer} must equal "
                f"N_b + N_crc = {c.n_coded_bits}"
            )
        return c

    def with_overrides(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs).validate()


def preset_config(scenario: str) -> SystemConfig:
    """Baseline configuration of each experiment scenario.

    Default noise levels follow the experiment sections: pilot SNR 5 dB for
    static SISO, 7 dB for mobile SISO, 0 dB for mobile SIMO; data SNR 9 dB
    for the SISO setups and 0 dB for SIMO. Sweeps override them.
    """
    if scenario == "static-siso":
        cfg = SystemConfig(
            n_subcarriers=32, n_guard=8, doppler_grid=8,
            n_pilot=1, n_data=6, n_antennas=1, n_targets=3,
            sigma_p_sq=snr_db_to_noise_var(5.0),
            sigma_d_sq=snr_db_to_noise_var(9.0),
            beam_width=16, n_iterations=4, n_refine_sweeps=3,
            n_layers=3, layer_size=256, n_info_bits=13, crc_poly=CRC11,
        )
    elif scenario == "mobile-siso":
        cfg = SystemConfig(
            n_subcarriers=32, n_guard=8, doppler_grid=32,
            n_pilot=4, n_data=28, n_antennas=1, n_targets=3,
            sigma_p_sq=snr_db_to_noise_var(7.0),
            sigma_d_sq=snr_db_to_noise_var(9.0),
            beam_width=16, n_iterations=4, n_refine_sweeps=4,
            n_layers=4, layer_size=256, n_info_bits=21, crc_poly=CRC11,
        )
    elif scenario == "mobile-simo":
        cfg = SystemConfig(
            n_subcarriers=32, n_guard=8, doppler_grid=32,
            n_pilot=4, n_data=28, n_antennas=8, n_targets=3,
            sigma_p_sq=snr_db_to_noise_var(0.0),
            sigma_d_sq=snr_db_to_noise_var(0.0),
            beam_width=16, n_iterations=4, n_refine_sweeps=4,
            n_layers=4, layer_size=256, n_info_bits=21, crc_poly=CRC11,
        )
    else:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    return cfg.validate()
