"""Iterative parameter sensing and channel decoding loop.

Each iteration decodes the not-yet-passed packets against the latest
channel reconstruction, re-encodes the passes into pilot-grade columns,
and re-runs sensing over the full frame. CRC flags are sticky: a packet
that passed once is never touched again.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .channel import complex_normal, reconstruct_channel
from .config import SystemConfig
from .sensing import AoaGrid, sense
from .sparc import Codebook, decode_packet, sparc_encode


@dataclass
class DecodeState:
    """Per-packet CRC flags, decoded bits, and re-encoded symbol estimates."""

    flags: np.ndarray                 # (M_d,) 0/1
    decoded: List[Optional[np.ndarray]]
    x_data_hat: np.ndarray            # N x M_d
    iteration: int


@dataclass
class IterationRecord:
    decoded_count: int
    flags: np.ndarray
    decoded: List[Optional[np.ndarray]]
    estimates: list


@dataclass
class IterationTrace:
    """Initial (pilot-only) sensing snapshot plus one record per iteration."""

    initial_estimates: list
    iterations: List[IterationRecord] = field(default_factory=list)

    def estimates_after(self, n_iter: int) -> list:
        """Sensing output as of iteration ``n_iter`` (0 = before decoding)."""
        if n_iter <= 0 or not self.iterations:
            return self.initial_estimates
        return self.iterations[min(n_iter, len(self.iterations)) - 1].estimates

    def state_after(self, n_iter: int):
        """(flags, decoded) as of iteration ``n_iter``."""
        if n_iter <= 0 or not self.iterations:
            n_data = len(self.iterations[0].decoded) if self.iterations else 0
            return np.zeros(n_data, dtype=np.int64), [None] * n_data
        rec = self.iterations[min(n_iter, len(self.iterations)) - 1]
        return rec.flags, rec.decoded


def ipscd_run(y_pilot, y_data, x_pilot, config: SystemConfig,
              codebook: Codebook, rng, grid: AoaGrid = AoaGrid()):
    """Run the sensing/decoding loop; returns (state, estimates, trace).

    The pre-loop data estimate is an immaterial CN(0,1) placeholder (all
    flags are zero, so sensing zeroes those columns); failed packets get a
    fresh placeholder each iteration. The loop exits early once every
    packet has passed the CRC, after the post-decode sensing pass.
    """
    c = config
    flags = np.zeros(c.n_data, dtype=np.int64)
    decoded: List[Optional[np.ndarray]] = [None] * c.n_data
    x_hat = complex_normal(rng, (c.n_subcarriers, c.n_data))

    estimates = sense(y_pilot, y_data, x_pilot, x_hat, flags, c, grid)
    trace = IterationTrace(initial_estimates=estimates)
    h_data = reconstruct_channel(estimates, c.n_antennas, c.n_subcarriers,
                                 c.n_data, c.n_pilot, c.doppler_grid)

    iteration = 0
    for i in range(1, c.n_iterations + 1):
        iteration = i
        for b in range(c.n_data):
            if flags[b]:
                continue
            t_b, c_hat = decode_packet(y_data[:, :, b], h_data[:, :, b],
                                       codebook, c.beam_width,
                                       c.n_refine_sweeps, c.crc_poly)
            if t_b:
                flags[b] = 1
                decoded[b] = c_hat
                x_hat[:, b] = sparc_encode(c_hat, codebook)
            else:
                x_hat[:, b] = complex_normal(rng, c.n_subcarriers)
        estimates = sense(y_pilot, y_data, x_pilot, x_hat, flags, c, grid)
        h_data = reconstruct_channel(estimates, c.n_antennas, c.n_subcarriers,
                                     c.n_data, c.n_pilot, c.doppler_grid)
        trace.iterations.append(IterationRecord(
            decoded_count=int(flags.sum()),
            flags=flags.copy(),
            decoded=list(decoded),
            estimates=estimates,
        ))
        if flags.all():
            break

    state = DecodeState(flags=flags, decoded=decoded, x_data_hat=x_hat,
                        iteration=iteration)
    return state, estimates, trace
