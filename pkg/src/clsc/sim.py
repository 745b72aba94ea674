"""Monte Carlo engine for the two-layer link.

Trials are independent and reproducible from ``(master_seed, trial_index)``
(see :mod:`clsc.streams`). Sweeps cut trials into fixed-size chunks, so the
counts are identical whether one worker or many run them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import backend
from .analysis import db_to_linear
from .channel import SuperposConfig, awgn, compose_tx
from .demod import bandpass, correlate_bpsk, demod_lora, design_bandpass, reconstruct_and_cancel
from .streams import trial_generator
from .waveform import LoraConfig, gen_high_segment, gen_symbol, segment_center_hz

CHUNK_TRIALS = 2048
MIN_ERRORS = 10
WORKERS_ENV = "CLSC_WORKERS"


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo operating point.

    `ideal_cancel` subtracts the transmitted low-SF symbol instead of the
    detected one (genie-aided cancellation); it exists to separate the
    correlator's own error rate from error propagation out of the LoRa layer.
    """

    superpos: SuperposConfig
    gamma_db: float
    trials: int
    master_seed: int = 0
    beta: int = 16
    bandwidth_hz: float = 125e3
    bypass_bpf: bool = True
    bpf_width_hz: float | None = None
    ideal_cancel: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.beta < 1:
            raise ValueError(f"oversampling factor must be >= 1, got {self.beta}")
        if math.isnan(self.gamma_db) or self.gamma_db == -math.inf:
            raise ValueError(f"invalid SNR {self.gamma_db!r} dB")

    @property
    def gamma(self) -> float:
        return db_to_linear(self.gamma_db)

    @property
    def kappa_db(self) -> float:
        k = self.superpos.kappa
        return math.inf if k == math.inf else 10.0 * math.log10(k)

    @property
    def cfg_low(self) -> LoraConfig:
        return LoraConfig(self.superpos.sf_low, self.bandwidth_hz, self.beta)

    @property
    def cfg_high(self) -> LoraConfig:
        return LoraConfig(self.superpos.sf_high, self.bandwidth_hz, self.beta)

    @property
    def noise_power(self) -> float:
        return 0.0 if self.gamma == math.inf else 1.0 / self.gamma

    def bpf_params(self) -> tuple[float, float, float]:
        """(centre, width, sample rate) of the optional band-pass stage."""
        sp = self.superpos
        width = self.bpf_width_hz
        if width is None:
            width = 2 * self.bandwidth_hz * (1 << sp.sf_low) / (1 << sp.sf_high)
        center = segment_center_hz(self.cfg_high, self.cfg_low, sp.n_s)
        return center, width, self.cfg_low.sample_rate


@dataclass(frozen=True)
class ErrorRatePoint:
    gamma_db: float
    kappa_db: float
    trials: int
    symbol_errors: int
    bit_errors: int
    ser: float = field(init=False)
    ber: float = field(init=False)
    stderr_ser: float = field(init=False)
    stderr_ber: float = field(init=False)

    def __post_init__(self):
        for name in ("symbol_errors", "bit_errors"):
            if not 0 <= getattr(self, name) <= self.trials:
                raise ValueError(f"{name} outside [0, trials]")
        ser = self.symbol_errors / self.trials
        ber = self.bit_errors / self.trials
        object.__setattr__(self, "ser", ser)
        object.__setattr__(self, "ber", ber)
        object.__setattr__(self, "stderr_ser", math.sqrt(ser * (1 - ser) / self.trials))
        object.__setattr__(self, "stderr_ber", math.sqrt(ber * (1 - ber) / self.trials))

    @property
    def low_confidence_ser(self) -> bool:
        return self.symbol_errors < MIN_ERRORS

    @property
    def low_confidence_ber(self) -> bool:
        return self.bit_errors < MIN_ERRORS


@lru_cache(maxsize=16)
def _segment(sf_low: int, sf_high: int, n_s: int, beta: int, bandwidth_hz: float) -> np.ndarray:
    seg = gen_high_segment(LoraConfig(sf_high, bandwidth_hz, beta), LoraConfig(sf_low, bandwidth_hz, beta), n_s)
    seg.samples.setflags(write=False)
    return seg.samples


def _scenario_segment(sc: Scenario) -> np.ndarray:
    sp = sc.superpos
    return _segment(sp.sf_low, sp.sf_high, sp.n_s, sc.beta, sc.bandwidth_hz)


def run_trial(scenario: Scenario, trial_index: int) -> tuple[bool, bool]:
    """One end-to-end pass through the reference (module-level) pipeline.

    Returns ``(symbol_ok, bit_ok)``.
    """
    sc = scenario
    cfg_low = sc.cfg_low
    rng = trial_generator(sc.master_seed, trial_index, cfg_low.total_samples)
    s = int(rng.random() * cfg_low.n)
    bit = int(rng.random() * 2)

    segment = gen_high_segment(sc.cfg_high, cfg_low, sc.superpos.n_s)
    tx = compose_tx(gen_symbol(cfg_low, s), segment, bit, sc.superpos)
    rx = awgn(tx, sc.gamma, rng)

    lora = demod_lora(rx, cfg_low)
    residual = reconstruct_and_cancel(rx, s if sc.ideal_cancel else lora.s_hat, cfg_low)
    if not sc.bypass_bpf:
        residual = bandpass(residual, *sc.bpf_params())
    decision = correlate_bpsk(residual, segment)
    return lora.s_hat == s, decision.bit_hat == bit


def trial_outcomes(scenario: Scenario, first_trial: int, n_trials: int, kernel=None):
    """Drawn and decided (symbol, bit) arrays for a contiguous block of trials."""
    sc = scenario
    taps = None
    if not sc.bypass_bpf:
        taps = design_bandpass(*sc.bpf_params())
        kernel = backend.get_kernel("python")
    kernel = kernel or backend.get_kernel()
    return kernel.run_chunk(sc.master_seed, first_trial, n_trials, sc.superpos.sf_low, sc.beta,
                            _scenario_segment(sc), sc.superpos.high_amplitude, sc.noise_power, taps,
                            sc.ideal_cancel)


def _count_chunk(args) -> tuple[int, int, int]:
    index, scenario, first, n, kernel_name = args
    s, bit, s_hat, bit_hat = trial_outcomes(scenario, first, n, backend.get_kernel(kernel_name))
    return index, int(np.count_nonzero(s != s_hat)), int(np.count_nonzero(bit != bit_hat))


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return workers
    if hasattr(os, "sched_getaffinity"):
        return max(1, len(os.sched_getaffinity(0)))
    return os.cpu_count() or 1


def sweep(scenarios: Sequence[Scenario], workers: int | None = None,
          kernel_name: str | None = None) -> list[ErrorRatePoint]:
    """One error-rate point per scenario, in input order."""
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("no scenarios to run")
    workers = workers or default_workers()
    tasks = []
    for i, sc in enumerate(scenarios):
        for first in range(0, sc.trials, CHUNK_TRIALS):
            tasks.append((i, sc, first, min(CHUNK_TRIALS, sc.trials - first), kernel_name))

    if workers == 1 or len(tasks) == 1:
        results = [_count_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_count_chunk, tasks))

    sym = [0] * len(scenarios)
    bits = [0] * len(scenarios)
    for i, se, be in results:
        sym[i] += se
        bits[i] += be
    return [ErrorRatePoint(sc.gamma_db, sc.kappa_db, sc.trials, sym[i], bits[i])
            for i, sc in enumerate(scenarios)]
