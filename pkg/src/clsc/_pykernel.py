"""Pure-numpy trial kernel, vectorised over a chunk of trials.

Same contract as the compiled ``_kernel.run_chunk``: it reads the trial
windows described in :mod:`clsc.streams` and returns, per trial, the drawn
symbol and bit and the receiver's decisions.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import signal

from .streams import chunk_words, words_to_uniform
from .waveform import _symbol_samples

_TABLE_LIMIT_BYTES = 64 << 20
_BATCH_SAMPLES = 1 << 17


@lru_cache(maxsize=8)
def _symbol_table(n: int, beta: int) -> np.ndarray | None:
    if n * n * beta * 16 > _TABLE_LIMIT_BYTES:
        return None
    table = np.stack([_symbol_samples(n, beta, s) for s in range(n)])
    table.setflags(write=False)
    return table


def _symbols(n: int, beta: int, s: np.ndarray) -> np.ndarray:
    table = _symbol_table(n, beta)
    if table is not None:
        return table[s]
    return np.stack([_symbol_samples(n, beta, int(v)) for v in s])


def _run_batch(master_seed, first_trial, n_trials, n, beta, segment, amp_high, noise_power, bpf_taps, ideal_cancel):
    length = beta * n
    u = words_to_uniform(chunk_words(master_seed, first_trial, n_trials, length))
    s = (u[:, 0] * n).astype(np.int64)
    bit = (u[:, 1] * 2).astype(np.int64)
    c = (1 - 2 * bit).astype(np.float64)

    rx = _symbols(n, beta, s) + (amp_high * c)[:, None] * segment
    if noise_power > 0:
        mag = np.sqrt(-np.log1p(-u[:, 2:2 + 2 * length:2]) * noise_power)
        theta = 2.0 * np.pi * u[:, 3:3 + 2 * length:2]
        rx += mag * np.cos(theta) + 1j * (mag * np.sin(theta))

    up = _symbol_samples(n, 1, 0)
    metric = np.fft.fft(rx[:, ::beta] * np.conj(up), axis=1, norm="ortho")
    s_hat = np.argmax(np.abs(metric), axis=1).astype(np.int64)

    residual = rx - _symbols(n, beta, s if ideal_cancel else s_hat)
    if bpf_taps is not None:
        residual = signal.convolve(residual, bpf_taps[None, :], mode="same")
    z = residual @ np.conj(segment)
    bit_hat = (z.real < 0).astype(np.int64)
    return s, bit, s_hat, bit_hat


def run_chunk(master_seed: int, first_trial: int, n_trials: int, sf_low: int, beta: int,
              segment: np.ndarray, amp_high: float, noise_power: float,
              bpf_taps: np.ndarray | None = None, ideal_cancel: bool = False):
    """Simulate trials ``first_trial .. first_trial + n_trials - 1``.

    Returns four int64 arrays: transmitted symbol, transmitted bit, detected
    symbol, detected bit. With `ideal_cancel` the transmitted rather than the
    detected low-SF symbol is subtracted before the correlator.
    """
    n = 1 << sf_low
    length = beta * n
    segment = np.asarray(segment, dtype=np.complex128)
    if segment.shape != (length,):
        raise ValueError(f"segment must have {length} samples")
    # keep temporaries around a few MB; large allocations cost more than the arithmetic
    batch = max(1, _BATCH_SAMPLES // length)
    parts = [
        _run_batch(master_seed, first_trial + lo, min(batch, n_trials - lo), n, beta,
                   segment, amp_high, noise_power, bpf_taps, ideal_cancel)
        for lo in range(0, n_trials, batch)
    ]
    return tuple(np.concatenate(col) for col in zip(*parts))
