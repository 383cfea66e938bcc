#!/usr/bin/env python3
"""Regenerate the golden CSV fixtures consumed by the plotting package.

Produces four files in the target directory (default ../plots/golden):

    per_vs_snr.csv       -- harness sweep over data SNR at two iteration counts
    mse_vs_iter.csv      -- harness sweep over the iteration cap
    psr.csv              -- paired substitution-policy comparison
    sensing_heatmap.csv  -- per-branch delay-Doppler magnitudes of the
                            three-target demo scene (long format:
                            branch,theta_deg,delay_bin,doppler_bin,magnitude)

Everything is seeded, so reruns reproduce the files byte for byte.
"""

import argparse
import pathlib
import sys

import numpy as np

from cipsac.channel import TargetParameters, apply_channel
from cipsac.config import preset_config
from cipsac.harness import ExperimentSpec, PsrSpec, run_experiment, run_psr
from cipsac.numerics import fft2
from cipsac.sensing import (estimate_aoa_music, spatial_filter,
                            substitute_and_equalize)

TINY = dict(n_subcarriers=16, n_guard=4, doppler_grid=16, n_pilot=2, n_data=4,
            n_layers=3, layer_size=256, n_info_bits=13)


def write_heatmap_csv(path):
    """Delay-Doppler surfaces of the fixed three-target demo scene, one
    block per estimated angle branch."""
    amp = 1.0 / np.sqrt(3.0)
    scene = [TargetParameters(amp, 4, 10, np.radians(70.0)),
             TargetParameters(amp * np.exp(2j * np.pi / 3), 5, 11,
                              np.radians(90.0)),
             TargetParameters(amp * np.exp(4j * np.pi / 3), 3, 1,
                              np.radians(110.0))]
    cfg = preset_config("mobile-simo").with_overrides(
        n_pilot=32, n_data=0, sigma_p_sq=1.0, sigma_d_sq=1.0)
    rng = np.random.default_rng(10_000)
    x_p = np.ones((32, 32), dtype=complex)
    y = apply_channel(x_p, scene, np.full(32, 1.0), 8, 32, rng)
    thetas = estimate_aoa_music(y, 3)
    lines = ["branch,theta_deg,delay_bin,doppler_bin,magnitude"]
    for branch, theta in enumerate(thetas):
        z_t = spatial_filter(y, theta)
        z = substitute_and_equalize(z_t, x_p, np.zeros((32, 0)), np.zeros(0), 32)
        mag = np.abs(fft2(z))[: cfg.n_guard, :]
        for n in range(cfg.n_guard):
            for v in range(cfg.doppler_grid):
                m = v if v < cfg.doppler_grid // 2 else v - cfg.doppler_grid
                lines.append(f"{branch},{np.degrees(theta):.9g},{n},{m},"
                             f"{mag[n, v]:.9g}")
    path.write_text("\n".join(lines) + "\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir",
                        default=str(pathlib.Path(__file__).resolve()
                                    .parent.parent / "plots" / "golden"))
    args = parser.parse_args(argv)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    spec = ExperimentSpec(scenario="mobile-siso", overrides=TINY,
                          snr_p_db=(8.0,), snr_d_db=(6.0, 9.0, 12.0),
                          n_iter=(1, 3), trials=40, seed=202)
    run_experiment(spec).write(out / "per_vs_snr.csv")

    spec = ExperimentSpec(scenario="mobile-siso", overrides=TINY,
                          snr_p_db=(6.0,), snr_d_db=(9.0,),
                          n_iter=(0, 1, 2, 3, 4), trials=40, seed=203)
    run_experiment(spec).write(out / "mse_vs_iter.csv")

    run_psr(PsrSpec(trials=2000, seed=204)).write(out / "psr.csv")

    write_heatmap_csv(out / "sensing_heatmap.csv")
    print(f"wrote golden CSVs to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
