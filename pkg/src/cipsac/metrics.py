"""Communication and sensing performance metrics."""

from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import SystemConfig
from .exceptions import DimensionError


def packet_error_rate(truth: Sequence, decoded: Sequence) -> float:
    """Fraction of packets whose decoded bits differ from the truth.

    ``None`` entries (never-decoded packets) count as errors.
    """
    if len(truth) != len(decoded):
        raise DimensionError(
            f"truth has {len(truth)} packets, decoded has {len(decoded)}")
    errors = 0
    for t, d in zip(truth, decoded):
        if d is None or len(t) != len(d) or np.any(np.asarray(t) != np.asarray(d)):
            errors += 1
    return errors / len(truth) if truth else 0.0


def pair_estimates(truth, estimates, config: SystemConfig):
    """Match estimates to targets by minimum total squared key error.

    The key is the normalized AoA for multi-antenna setups (the per-target
    sensing branches split on the angle) and the normalized delay for
    single-antenna ones. Returns the estimate index paired to each target.
    """
    if len(truth) != len(estimates):
        raise DimensionError(
            f"{len(truth)} targets vs {len(estimates)} estimates")
    use_aoa = config.n_antennas > 1
    cost = np.zeros((len(truth), len(estimates)))
    for i, tgt in enumerate(truth):
        for j, est in enumerate(estimates):
            if use_aoa and est.aoa_rad is not None:
                cost[i, j] = ((tgt.aoa_rad - est.aoa_rad) / np.pi) ** 2
            else:
                cost[i, j] = ((tgt.delay_tap - est.delay_tap) / config.n_guard) ** 2
    _, cols = linear_sum_assignment(cost)
    return cols


def sensing_mse(truth, estimates, config: SystemConfig):
    """Normalized (delay, Doppler, AoA, total) squared-error sums.

    Each component sums over the L matched pairs and is normalized by the
    square of its parameter range (N_G, M, and pi); the total is the plain
    sum of the three. The AoA term is zero for single-antenna setups, where
    no angle is estimated or needed.
    """
    cols = pair_estimates(truth, estimates, config)
    mse_tau = mse_mu = mse_theta = 0.0
    for i, tgt in enumerate(truth):
        est = estimates[cols[i]]
        mse_tau += ((tgt.delay_tap - est.delay_tap) / config.n_guard) ** 2
        mse_mu += ((tgt.doppler_bin - est.doppler_bin) / config.doppler_grid) ** 2
        if est.aoa_rad is not None and config.n_antennas > 1:
            mse_theta += ((tgt.aoa_rad - est.aoa_rad) / np.pi) ** 2
    return mse_tau, mse_mu, mse_theta, mse_tau + mse_mu + mse_theta


def outage_rate(flags, decoded: Sequence, truth: Sequence) -> float:
    """Among packets that passed the CRC, the fraction decoded wrongly.

    Zero when no packet passed (callers needing the conditioning count
    should tally ``flags`` themselves).
    """
    flags = np.asarray(flags)
    if not (len(flags) == len(decoded) == len(truth)):
        raise DimensionError("flags, decoded, and truth lengths differ")
    passed = wrong = 0
    for f, d, t in zip(flags, decoded, truth):
        if not f:
            continue
        passed += 1
        if d is None or np.any(np.asarray(d) != np.asarray(t)):
            wrong += 1
    return wrong / passed if passed else 0.0
