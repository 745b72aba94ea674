"""Two-layer transmit composition and the AWGN channel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .waveform import IqBuffer, LoraConfig, default_offset

INF = math.inf


@dataclass(frozen=True)
class SuperposConfig:
    """Low/high spreading-factor pair, segment offset and LHR kappa = P_l / P_h.

    ``n_s=None`` selects the DC-centred offset ``(N_h - N_l) / 2``;
    ``kappa=inf`` switches the superposed layer off.
    """

    sf_low: int = 7
    sf_high: int = 12
    n_s: int | None = None
    kappa: float = INF

    def __post_init__(self):
        if self.sf_high <= self.sf_low:
            raise ValueError(f"sf_high ({self.sf_high}) must exceed sf_low ({self.sf_low})")
        LoraConfig(self.sf_low)
        LoraConfig(self.sf_high)
        if self.n_s is None:
            object.__setattr__(self, "n_s", default_offset(self.sf_low, self.sf_high))
        if not 0 <= self.n_s <= (1 << self.sf_high) - (1 << self.sf_low):
            raise ValueError(f"segment offset {self.n_s} out of range")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")

    @property
    def high_amplitude(self) -> float:
        return 0.0 if self.kappa == INF else math.sqrt(1.0 / self.kappa)


@dataclass(frozen=True)
class PowerModel:
    """Signal and noise powers relative to a unit-power low-SF layer."""

    p_high: float
    p_noise: float
    p_low: float = field(default=1.0)

    @classmethod
    def from_ratios(cls, kappa: float, gamma: float) -> "PowerModel":
        if not (kappa > 0 and gamma > 0):
            raise ValueError("kappa and gamma must be positive")
        return cls(p_high=0.0 if kappa == INF else 1.0 / kappa,
                   p_noise=0.0 if gamma == INF else 1.0 / gamma)


def bit_to_symbol(bit: int) -> int:
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return 1 - 2 * bit


def compose_tx(low_symbol: IqBuffer, high_segment: IqBuffer, bit: int, cfg: SuperposConfig) -> IqBuffer:
    """Low-SF symbol plus the BPSK-modulated segment scaled to power 1/kappa."""
    if len(low_symbol) != len(high_segment) or low_symbol.oversample != high_segment.oversample:
        raise ValueError("low symbol and high segment differ in length or sampling rate")
    c = bit_to_symbol(bit)
    if cfg.kappa == INF:
        return IqBuffer(low_symbol.samples.copy(), low_symbol.oversample)
    return IqBuffer(low_symbol.samples + cfg.high_amplitude * c * high_segment.samples, low_symbol.oversample)


def complex_gaussian(rng: np.random.Generator, size: int, power: float) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples of variance `power`.

    Each sample uses two uniforms, interleaved as (magnitude, phase):
    ``|w|^2 = -power * log(1 - u1)`` is exponential with mean `power` and the
    phase ``2*pi*u2`` is uniform, which is exactly CN(0, power).
    """
    u = rng.random((size, 2))
    mag = np.sqrt(-np.log1p(-u[:, 0]) * power)
    theta = 2.0 * np.pi * u[:, 1]
    return mag * np.cos(theta) + 1j * (mag * np.sin(theta))


def awgn(buf: IqBuffer, gamma_linear: float, rng: np.random.Generator) -> IqBuffer:
    """Add white noise of per-sample variance 1/gamma (at whatever rate `buf` is sampled)."""
    if gamma_linear == INF:
        return IqBuffer(buf.samples.copy(), buf.oversample)
    if not gamma_linear > 0:
        raise ValueError(f"SNR must be positive, got {gamma_linear!r}")
    noise = complex_gaussian(rng, len(buf), 1.0 / gamma_linear)
    return IqBuffer(buf.samples + noise, buf.oversample)
