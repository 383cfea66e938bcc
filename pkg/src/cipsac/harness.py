"""Experiment driver: sweep expansion, deterministic per-trial seeding,
parallel Monte Carlo execution, and CSV emission.

Every trial derives its generator from ``SeedSequence(master_seed,
spawn_key=(point_index, trial_index))``, so the schedule of a worker pool
cannot change any result; rows are reduced in (point, trial) order. With
``measure_time`` left off (the default) the emitted CSV is byte-identical
for identical specs regardless of the worker count.
"""

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import yaml

from .channel import apply_channel, per_symbol_noise_var, sample_targets
from .config import SystemConfig, preset_config, snr_db_to_noise_var
from .crc import crc_encode
from .exceptions import ConfigError, IllConditionedError
from .ipscd import ipscd_run
from .metrics import packet_error_rate, sensing_mse
from .sensing import psr_estimate
from .sparc import Codebook, load_codebook, make_random_codebook, sparc_encode

CSV_HEADER = ("scenario,seed,snr_p_db,snr_d_db,n_iter,trials,per,mse_tau,"
              "mse_mu,mse_theta,mse_total,outage_rate,failed_trials,wall_time_s")

PSR_CSV_HEADER = "policy,mean_psr,std_psr,trials"


def noise_var_to_snr_db(var: float) -> float:
    return -10.0 * math.log10(var)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a scenario preset, overrides, sweep axes, trial count."""

    scenario: str = "mobile-siso"
    overrides: dict = field(default_factory=dict)
    snr_p_db: tuple = ()          # empty = preset default
    snr_d_db: tuple = ()
    n_iter: tuple = ()
    n_data: tuple = ()
    block_len: tuple = ()         # subcarrier-count axis
    trials: int = 100
    seed: int = 0
    threads: int = 1
    codebook_seed: Optional[int] = None
    codebook_path: Optional[str] = None
    measure_time: bool = False

    def validate(self) -> "ExperimentSpec":
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        for cfg, _ in self.sweep_points():
            cfg.validate()
        return self

    def axes(self):
        base = preset_config(self.scenario)
        if self.overrides:
            base = base.with_overrides(**self.overrides)
        snr_p = tuple(self.snr_p_db) or (noise_var_to_snr_db(base.sigma_p_sq),)
        snr_d = tuple(self.snr_d_db) or (noise_var_to_snr_db(base.sigma_d_sq),)
        iters = tuple(self.n_iter) or (base.n_iterations,)
        n_data = tuple(self.n_data) or (base.n_data,)
        block = tuple(self.block_len) or (base.n_subcarriers,)
        return base, snr_p, snr_d, iters, n_data, block

    def sweep_points(self):
        """(config, point-metadata) per sweep point, in emission order."""
        base, snr_p, snr_d, iters, n_data, block = self.axes()
        points = []
        for p_db, d_db, it, md, n_sc in itertools.product(
                snr_p, snr_d, iters, n_data, block):
            cfg = base.with_overrides(
                sigma_p_sq=snr_db_to_noise_var(p_db),
                sigma_d_sq=snr_db_to_noise_var(d_db),
                n_iterations=it, n_data=md, n_subcarriers=n_sc)
            points.append((cfg, {"snr_p_db": p_db, "snr_d_db": d_db,
                                 "n_iter": it}))
        return points


@dataclass
class TrialResult:
    per: float = 0.0
    mse_tau: float = 0.0
    mse_mu: float = 0.0
    mse_theta: float = 0.0
    mse_total: float = 0.0
    n_passed: int = 0
    n_wrong_passed: int = 0
    failed: bool = False


@dataclass
class MetricRow:
    scenario: str
    seed: int
    snr_p_db: float
    snr_d_db: float
    n_iter: int
    trials: int
    per: float
    mse_tau: float
    mse_mu: float
    mse_theta: float
    mse_total: float
    outage_rate: float
    failed_trials: int
    wall_time_s: float

    def to_csv(self) -> str:
        fields = [self.scenario, str(self.seed), _fmt(self.snr_p_db),
                  _fmt(self.snr_d_db), str(self.n_iter), str(self.trials),
                  _fmt(self.per), _fmt(self.mse_tau), _fmt(self.mse_mu),
                  _fmt(self.mse_theta), _fmt(self.mse_total),
                  _fmt(self.outage_rate), str(self.failed_trials),
                  _fmt(self.wall_time_s)]
        return ",".join(fields)


@dataclass
class ResultsTable:
    rows: Sequence[MetricRow]

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [r.to_csv() for r in self.rows]) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def trial_rng(master_seed: int, point_idx: int, trial_idx: int):
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(point_idx, trial_idx)))


def run_trial(config: SystemConfig, scenario: str, codebook: Codebook,
              master_seed: int, point_idx: int, trial_idx: int) -> TrialResult:
    """One end-to-end frame: draw targets and messages, transmit, run the
    iterative receiver, and score it."""
    c = config
    rng = trial_rng(master_seed, point_idx, trial_idx)
    targets = sample_targets(c, scenario, rng)
    messages = rng.integers(0, 2, size=(c.n_data, c.n_info_bits)).astype(np.uint8)
    coded = crc_encode(messages, c.crc_poly) if c.n_data else \
        np.zeros((0, c.n_coded_bits), dtype=np.uint8)
    x_pilot = np.ones((c.n_subcarriers, c.n_pilot), dtype=np.complex128)
    x_data = np.zeros((c.n_subcarriers, c.n_data), dtype=np.complex128)
    for b in range(c.n_data):
        x_data[:, b] = sparc_encode(coded[b], codebook)
    frame = np.concatenate([x_pilot, x_data], axis=1)
    y = apply_channel(frame, targets, per_symbol_noise_var(c), c.n_antennas,
                      c.doppler_grid, rng)
    y_pilot, y_data = y[:, :, :c.n_pilot], y[:, :, c.n_pilot:]
    try:
        state, estimates, _ = ipscd_run(y_pilot, y_data, x_pilot, c, codebook, rng)
    except IllConditionedError:
        return TrialResult(failed=True)
    truth_info = [messages[b] for b in range(c.n_data)]
    decoded_info = [None if d is None else d[: c.n_info_bits]
                    for d in state.decoded]
    per = packet_error_rate(truth_info, decoded_info)
    mse = sensing_mse(targets, estimates, c)
    n_passed = int(state.flags.sum())
    wrong = 0
    for b in range(c.n_data):
        if state.flags[b]:
            d = state.decoded[b]
            if d is None or np.any(d != coded[b]):
                wrong += 1
    return TrialResult(per=per, mse_tau=mse[0], mse_mu=mse[1], mse_theta=mse[2],
                       mse_total=mse[3], n_passed=n_passed,
                       n_wrong_passed=wrong)


def _codebook_for(config: SystemConfig, spec: ExperimentSpec) -> Codebook:
    if spec.codebook_path is not None:
        return load_codebook(spec.codebook_path, config=config)
    seed = spec.codebook_seed if spec.codebook_seed is not None else spec.seed
    return make_random_codebook(config.n_layers, config.layer_size,
                                config.n_subcarriers, seed)


def _trial_batch(args):
    config, scenario, codebook, master_seed, point_idx, trial_indices = args
    return [run_trial(config, scenario, codebook, master_seed, point_idx, t)
            for t in trial_indices]


def run_experiment(spec: ExperimentSpec) -> ResultsTable:
    """Run every sweep point for ``spec.trials`` trials and aggregate.

    All point configurations are validated before any trial runs. Trials
    are distributed over a process pool when ``spec.threads > 1``; the
    aggregation order is fixed, so the output does not depend on the pool.
    """
    spec.validate()
    points = spec.sweep_points()
    rows = []
    for point_idx, (cfg, meta) in enumerate(points):
        codebook = _codebook_for(cfg, spec)
        start = time.perf_counter()
        if spec.threads > 1:
            chunk = max(1, spec.trials // (spec.threads * 4))
            batches = [
                (cfg, spec.scenario, codebook, spec.seed, point_idx,
                 list(range(lo, min(lo + chunk, spec.trials))))
                for lo in range(0, spec.trials, chunk)
            ]
            results = []
            with ProcessPoolExecutor(max_workers=spec.threads) as pool:
                for batch in pool.map(_trial_batch, batches):
                    results.extend(batch)
        else:
            results = [run_trial(cfg, spec.scenario, codebook, spec.seed,
                                 point_idx, t) for t in range(spec.trials)]
        elapsed = time.perf_counter() - start if spec.measure_time else 0.0
        ok = [r for r in results if not r.failed]
        n_ok = len(ok)
        passed = sum(r.n_passed for r in ok)
        wrong = sum(r.n_wrong_passed for r in ok)
        rows.append(MetricRow(
            scenario=spec.scenario, seed=spec.seed,
            snr_p_db=meta["snr_p_db"], snr_d_db=meta["snr_d_db"],
            n_iter=meta["n_iter"], trials=spec.trials,
            per=sum(r.per for r in ok) / n_ok if n_ok else 0.0,
            mse_tau=sum(r.mse_tau for r in ok) / n_ok if n_ok else 0.0,
            mse_mu=sum(r.mse_mu for r in ok) / n_ok if n_ok else 0.0,
            mse_theta=sum(r.mse_theta for r in ok) / n_ok if n_ok else 0.0,
            mse_total=sum(r.mse_total for r in ok) / n_ok if n_ok else 0.0,
            outage_rate=wrong / passed if passed else 0.0,
            failed_trials=spec.trials - n_ok,
            wall_time_s=elapsed,
        ))
    return ResultsTable(rows=rows)


@dataclass(frozen=True)
class PsrSpec:
    """Parameters of a paired PSR comparison run."""

    policies: tuple = ("zero", "gaussian")
    n_sc: int = 16
    m_grid: int = 16
    n_guard: Optional[int] = None
    sigma_sq: float = 0.1
    n_pilot: int = 1
    corrupt_index: Optional[int] = 8
    trials: int = 1000
    seed: int = 0
    data: str = "gaussian"
    gain: Optional[complex] = None


@dataclass
class PsrRow:
    policy: str
    mean_psr: float
    std_psr: float
    trials: int

    def to_csv(self) -> str:
        return ",".join([self.policy, _fmt(self.mean_psr), _fmt(self.std_psr),
                         str(self.trials)])


@dataclass
class PsrTable:
    rows: Sequence[PsrRow]

    def to_csv(self) -> str:
        return "\n".join([PSR_CSV_HEADER] + [r.to_csv() for r in self.rows]) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def run_psr(spec: PsrSpec) -> PsrTable:
    """Both substitution policies on common per-trial random draws."""
    rows = []
    for policy in spec.policies:
        mean, std = psr_estimate(
            policy, n_sc=spec.n_sc, m_grid=spec.m_grid, n_guard=spec.n_guard,
            sigma_sq=spec.sigma_sq, n_pilot=spec.n_pilot,
            corrupt_index=spec.corrupt_index, trials=spec.trials,
            seed=spec.seed, data=spec.data, gain=spec.gain)
        rows.append(PsrRow(policy=policy, mean_psr=mean, std_psr=std,
                           trials=spec.trials))
    return PsrTable(rows=rows)


def inspect_codebook(path) -> dict:
    cb = load_codebook(path)
    return {
        "n_layers": cb.n_layers,
        "layer_size": cb.layer_size,
        "codeword_len": cb.codeword_len,
        "per_entry_variance": float(np.mean(np.abs(cb.entries) ** 2)),
        "provenance": cb.provenance,
    }


def load_experiment_file(path) -> ExperimentSpec:
    """Build an ExperimentSpec from a YAML file (scenario preset plus
    SystemConfig overrides, sweep axes, and run settings)."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"experiment file {path} must hold a mapping")
    known = {"scenario", "trials", "seed", "threads", "timing",
             "config", "sweep", "codebook"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")

    def as_tuple(value):
        if value is None:
            return ()
        if isinstance(value, (list, tuple)):
            return tuple(value)
        return (value,)

    sweep = raw.get("sweep") or {}
    sweep_known = {"snr_p_db", "snr_d_db", "n_iter", "n_data", "block_len"}
    unknown = set(sweep) - sweep_known
    if unknown:
        raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
    codebook = raw.get("codebook") or {}
    unknown = set(codebook) - {"seed", "path"}
    if unknown:
        raise ConfigError(f"unknown codebook keys: {sorted(unknown)}")
    spec = ExperimentSpec(
        scenario=raw.get("scenario", "mobile-siso"),
        overrides=dict(raw.get("config") or {}),
        snr_p_db=as_tuple(sweep.get("snr_p_db")),
        snr_d_db=as_tuple(sweep.get("snr_d_db")),
        n_iter=as_tuple(sweep.get("n_iter")),
        n_data=as_tuple(sweep.get("n_data")),
        block_len=as_tuple(sweep.get("block_len")),
        trials=int(raw.get("trials", 100)),
        seed=int(raw.get("seed", 0)),
        threads=int(raw.get("threads", 1)),
        codebook_seed=codebook.get("seed"),
        codebook_path=codebook.get("path"),
        measure_time=bool(raw.get("timing", False)),
    )
    return spec.validate()
