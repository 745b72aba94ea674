"""Legacy LoRa detection, low-layer cancellation and BPSK detection of the superposed layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .waveform import DecisionMetric, IqBuffer, LoraConfig, decimate, dechirp, dft_metric, gen_symbol


@dataclass
class DemodResult:
    s_hat: int
    metric: DecisionMetric
    peak_magnitude: float


@dataclass
class SuperposDecision:
    z: complex
    bit_hat: int


def demod_lora(rx: IqBuffer, cfg: LoraConfig) -> DemodResult:
    """Decimate to one sample per chip, dechirp, DFT and pick the strongest bin.

    Ties go to the lowest bin index.
    """
    crit = decimate(rx, rx.oversample)
    if len(crit) != cfg.n:
        raise ValueError(f"received symbol has {len(crit)} chips, expected {cfg.n}")
    metric = dft_metric(dechirp(crit, cfg.critical()))
    mag = np.abs(metric.bins)
    s_hat = int(np.argmax(mag))
    return DemodResult(s_hat, metric, float(mag[s_hat]))


def reconstruct_and_cancel(rx: IqBuffer, s_hat: int, cfg_low: LoraConfig) -> IqBuffer:
    """Subtract a unit-amplitude replica of low-SF symbol `s_hat` at the rate of `rx`."""
    replica = gen_symbol(LoraConfig(cfg_low.sf, cfg_low.bandwidth_hz, rx.oversample), s_hat)
    if len(replica) != len(rx):
        raise ValueError(f"received buffer has {len(rx)} samples, replica has {len(replica)}")
    return IqBuffer(rx.samples - replica.samples, rx.oversample)


def correlate_bpsk(residual: IqBuffer, template: IqBuffer) -> SuperposDecision:
    """Coherent correlation with the known segment; decide on the sign of Re(z)."""
    if len(residual) != len(template):
        raise ValueError(f"residual length {len(residual)} != template length {len(template)}")
    z = complex(np.vdot(template.samples, residual.samples))
    return SuperposDecision(z, 0 if z.real >= 0 else 1)


def design_bandpass(center_hz: float, width_hz: float, sample_rate_hz: float,
                    stop_atten_db: float = 60.0) -> np.ndarray:
    """Complex linear-phase FIR taps passing ``center_hz +/- width_hz/2``.

    Kaiser-windowed sinc; the stop band starts at ``2*width_hz`` from the centre.
    """
    if not 0 < width_hz < sample_rate_hz:
        raise ValueError(f"band width {width_hz} must lie in (0, sample rate {sample_rate_hz})")
    if abs(center_hz) > sample_rate_hz / 2:
        raise ValueError(f"centre {center_hz} Hz outside the Nyquist band")
    nyq = sample_rate_hz / 2
    edge_pass, edge_stop = width_hz / 2, 2 * width_hz
    if edge_stop >= nyq:
        raise ValueError("band too wide for the sample rate")
    numtaps, beta = signal.kaiserord(stop_atten_db, (edge_stop - edge_pass) / nyq)
    numtaps |= 1
    proto = signal.firwin(numtaps, (edge_pass + edge_stop) / 2, window=("kaiser", beta), fs=sample_rate_hz)
    n = np.arange(numtaps) - numtaps // 2
    return proto * np.exp(2j * np.pi * center_hz * n / sample_rate_hz)


def bandpass(residual: IqBuffer, center_hz: float, width_hz: float, sample_rate_hz: float,
             bypass: bool = False) -> IqBuffer:
    """Optional band-pass stage ahead of the correlator, zero group delay alignment."""
    if bypass:
        return IqBuffer(residual.samples.copy(), residual.oversample)
    taps = design_bandpass(center_hz, width_hz, sample_rate_hz)
    return IqBuffer(signal.convolve(residual.samples, taps, mode="same"), residual.oversample)
