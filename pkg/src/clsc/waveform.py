"""LoRa chirp synthesis and the dechirp / DFT front end.

All chirp phases are evaluated in exact integer arithmetic (cycles modulo one
symbol) before conversion to radians, so long high-SF symbols keep full
double precision at every sample.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

SF_MIN = 2
SF_MAX = 12


@dataclass(frozen=True)
class LoraConfig:
    """Spreading factor, bandwidth and receiver oversampling factor."""

    sf: int
    bandwidth_hz: float = 125e3
    oversample: int = 1

    def __post_init__(self):
        if not isinstance(self.sf, (int, np.integer)) or not SF_MIN <= self.sf <= SF_MAX:
            raise ValueError(f"spreading factor must be an integer in [{SF_MIN}, {SF_MAX}], got {self.sf!r}")
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_hz!r}")
        if not isinstance(self.oversample, (int, np.integer)) or self.oversample < 1:
            raise ValueError(f"oversampling factor must be an integer >= 1, got {self.oversample!r}")

    @property
    def n(self) -> int:
        """Samples per symbol at the critical rate (2**sf)."""
        return 1 << int(self.sf)

    @property
    def total_samples(self) -> int:
        return int(self.oversample) * self.n

    @property
    def sample_rate(self) -> float:
        return self.oversample * self.bandwidth_hz

    @property
    def symbol_time(self) -> float:
        return self.n / self.bandwidth_hz

    def critical(self) -> "LoraConfig":
        """Same configuration at one sample per chip."""
        return self if self.oversample == 1 else replace(self, oversample=1)


@dataclass
class IqBuffer:
    """Complex baseband samples tagged with their oversampling factor."""

    samples: np.ndarray
    oversample: int = 1

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("IqBuffer needs a non-empty 1-D sample array")
        if self.oversample < 1:
            raise ValueError(f"oversample tag must be >= 1, got {self.oversample}")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)


@dataclass
class DecisionMetric:
    """The complex DFT outputs Y[k] of the legacy demodulator."""

    bins: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.bins)


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def chirp_cycles(n: int, beta: int, s: int, m: np.ndarray) -> np.ndarray:
    """Phase, in cycles reduced to [0, 1), of symbol `s` at oversampled indices `m`.

    The instantaneous frequency wraps from +B/2 to -B/2 at ``m = beta*(n - s)``;
    both pieces are phase continuous. At ``m = beta*k`` the result equals the
    critically sampled value ``(k**2/2 + (s - n/2)*k) / n`` modulo one.
    """
    m = np.asarray(m, dtype=np.int64)
    denom = 2 * beta * beta * n
    num = m * m + 2 * beta * (s - n // 2) * m
    fold = m >= beta * (n - s)
    num = num - np.where(fold, 2 * beta * n * m - 2 * beta * beta * n * (n - s), 0)
    return np.mod(num, denom) / denom


@lru_cache(maxsize=64)
def _symbol_samples(n: int, beta: int, s: int) -> np.ndarray:
    out = np.exp(2j * np.pi * chirp_cycles(n, beta, s, np.arange(beta * n)))
    out.setflags(write=False)
    return out


def gen_symbol(cfg: LoraConfig, s: int) -> IqBuffer:
    """Synthesize LoRa symbol `s` at ``cfg.oversample`` samples per chip."""
    if not 0 <= s < cfg.n:
        raise ValueError(f"symbol index {s} outside [0, {cfg.n})")
    return IqBuffer(_symbol_samples(cfg.n, int(cfg.oversample), int(s)).copy(), int(cfg.oversample))


def default_offset(sf_low: int, sf_high: int) -> int:
    """Segment offset that centres the high-SF segment's mean frequency at DC."""
    return ((1 << sf_high) - (1 << sf_low)) // 2


def _check_pair(cfg_high: LoraConfig, cfg_low: LoraConfig, n_s: int) -> None:
    if cfg_high.sf <= cfg_low.sf:
        raise ValueError(f"high SF ({cfg_high.sf}) must exceed low SF ({cfg_low.sf})")
    if cfg_high.oversample != cfg_low.oversample or cfg_high.bandwidth_hz != cfg_low.bandwidth_hz:
        raise ValueError("high and low configurations must share bandwidth and oversampling")
    if not 0 <= n_s <= cfg_high.n - cfg_low.n:
        raise ValueError(f"segment offset {n_s} outside [0, {cfg_high.n - cfg_low.n}]")


def gen_high_segment(cfg_high: LoraConfig, cfg_low: LoraConfig, n_s: int) -> IqBuffer:
    """Length ``beta*N_l`` slice of the high-SF upchirp starting at base index `n_s`."""
    _check_pair(cfg_high, cfg_low, n_s)
    beta = int(cfg_high.oversample)
    m = np.arange(beta * n_s, beta * (n_s + cfg_low.n))
    return IqBuffer(np.exp(2j * np.pi * chirp_cycles(cfg_high.n, beta, 0, m)), beta)


def segment_center_hz(cfg_high: LoraConfig, cfg_low: LoraConfig, n_s: int) -> float:
    """Mean instantaneous frequency of the segment returned by `gen_high_segment`."""
    _check_pair(cfg_high, cfg_low, n_s)
    b = cfg_high.bandwidth_hz
    return -b / 2 + (n_s + cfg_low.n / 2) * b / cfg_high.n


def dechirp(buf: IqBuffer, cfg: LoraConfig) -> IqBuffer:
    """Multiply a critically sampled buffer by the conjugate upchirp."""
    if buf.oversample != 1:
        raise ValueError("dechirp expects a critically sampled buffer (oversample tag 1)")
    if len(buf) != cfg.n:
        raise ValueError(f"buffer length {len(buf)} does not match symbol length {cfg.n}")
    up = _symbol_samples(cfg.n, 1, 0)
    return IqBuffer(np.conj(up) * buf.samples, 1)


def dft_metric(buf: IqBuffer) -> DecisionMetric:
    """Unitary (1/sqrt(N)) DFT of a power-of-two length buffer."""
    if not _is_pow2(len(buf)):
        raise ValueError(f"DFT length must be a power of two, got {len(buf)}")
    return DecisionMetric(np.fft.fft(buf.samples, norm="ortho"))


def decimate(buf: IqBuffer, beta: int) -> IqBuffer:
    """Keep every `beta`-th sample; no anti-alias filter."""
    if beta < 1 or len(buf) % beta:
        raise ValueError(f"buffer length {len(buf)} not divisible by decimation factor {beta}")
    if buf.oversample % beta:
        raise ValueError(f"oversample tag {buf.oversample} not divisible by {beta}")
    if beta == 1:
        return IqBuffer(buf.samples.copy(), buf.oversample)
    return IqBuffer(buf.samples[::beta].copy(), buf.oversample // beta)
