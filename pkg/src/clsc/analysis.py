"""Error-rate theory, effective SNRs, feasibility region and interference spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, signal, special

from .waveform import IqBuffer, LoraConfig, dechirp, dft_metric, gen_symbol

INF = math.inf


def db_to_linear(db: float) -> float:
    return INF if db == INF else 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x == INF:
        return INF
    if x <= 0:
        return -INF
    return 10.0 * math.log10(x)


# ---------------------------------------------------------------------------
# interference spectrum of a high-SF segment inside a low-SF demodulator


@dataclass(frozen=True)
class SpectrumPrediction:
    """Stationary-phase description of |U[k]|.

    The block K of bins whose stationary point falls inside the window is
    contiguous modulo N_l; when it wraps past bin N_l - 1, ``k_end < k_start``.
    """

    p: float
    q: np.ndarray
    k_start: int
    k_end: int
    flat_level: float
    block_size: int
    predicted_block_size: float
    in_block: np.ndarray

    def magnitudes(self) -> np.ndarray:
        """Predicted |U[k]|: the flat level inside K, zero elsewhere."""
        return np.where(self.in_block, self.flat_level, 0.0)

    def block_order(self) -> np.ndarray:
        """Indices of K in order, starting at `k_start` and wrapping if needed."""
        n_l = self.in_block.size
        return (self.k_start + np.arange(self.block_size)) % n_l


def _check_spectrum_args(cfg_low: LoraConfig, cfg_high: LoraConfig, n_s: int, s_h: int) -> None:
    if cfg_high.sf == cfg_low.sf:
        raise ValueError("equal spreading factors: chirp-rate mismatch p is zero")
    if cfg_high.sf < cfg_low.sf:
        raise ValueError(f"high SF ({cfg_high.sf}) must exceed low SF ({cfg_low.sf})")
    if not 0 <= n_s <= cfg_high.n - cfg_low.n:
        raise ValueError(f"segment offset {n_s} outside [0, {cfg_high.n - cfg_low.n}]")
    if not 0 <= s_h < cfg_high.n:
        raise ValueError(f"high-SF symbol index {s_h} outside [0, {cfg_high.n})")


def u_spectrum_bruteforce(cfg_low: LoraConfig, cfg_high: LoraConfig, n_s: int, s_h: int = 0) -> np.ndarray:
    """|U[k]| obtained by dechirping and transforming the actual critically sampled segment."""
    _check_spectrum_args(cfg_low, cfg_high, n_s, s_h)
    seg = gen_symbol(cfg_high.critical(), s_h).samples[n_s:n_s + cfg_low.n]
    return np.abs(dft_metric(dechirp(IqBuffer(seg), cfg_low.critical())).bins)


def u_spectrum_stationary(cfg_low: LoraConfig, cfg_high: LoraConfig, n_s: int, s_h: int = 0) -> SpectrumPrediction:
    """Stationary-phase prediction of the block K and its flat magnitude.

    The sum over n only sees q_k modulo one, so the stationary point
    ``-q/p`` is tested on the representative of q_k in [0, 1).
    """
    _check_spectrum_args(cfg_low, cfg_high, n_s, s_h)
    n_l, n_h = cfg_low.n, cfg_high.n
    p = (n_l - n_h) / (n_l * n_h)
    k = np.arange(n_l)
    q = (n_s + s_h) / n_h - k / n_l
    n0 = -np.mod(q, 1.0) / p
    in_block = (n0 > 0) & (n0 < n_l)
    size = int(in_block.sum())
    if size == 0:
        k_start = k_end = 0
    else:
        starts = np.nonzero(in_block & ~np.roll(in_block, 1))[0]
        k_start = int(starts[0]) if starts.size else 0
        k_end = (k_start + size - 1) % n_l
    return SpectrumPrediction(
        p=p,
        q=q,
        k_start=k_start,
        k_end=k_end,
        flat_level=1.0 / math.sqrt(n_l * abs(p)),
        block_size=size,
        predicted_block_size=n_l * (1.0 - n_l / n_h),
        in_block=in_block,
    )


def assert_minmax_bound(magnitudes: np.ndarray, slack: float = 1e-12) -> None:
    """Check that the largest per-bin energy is at least the mean per-bin energy."""
    e = np.abs(np.asarray(magnitudes)) ** 2
    bound = e.sum() / e.size
    if e.max() < bound - slack * max(1.0, bound):
        raise AssertionError(f"max |U[k]|^2 = {e.max()!r} below mean bin energy {bound!r}")


# ---------------------------------------------------------------------------
# per-bin amplitude statistics of the LoRa decision metric (P_l = 1)


def rayleigh_cdf(r, gamma: float):
    """CDF of a noise-only bin magnitude: 1 - exp(-r^2 gamma)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("amplitude must be non-negative")
    if gamma <= 0:
        raise ValueError("SNR must be positive")
    out = -np.expm1(-r * r * gamma)
    return float(out) if out.ndim == 0 else out


def _log_rice_pdf(r: np.ndarray, gamma: float, n_l: int) -> np.ndarray:
    a = math.sqrt(n_l)
    x = 2.0 * r * gamma * a
    with np.errstate(divide="ignore"):
        return np.log(2.0 * r * gamma) - gamma * (r - a) ** 2 + np.log(special.i0e(x))


def rice_pdf(r, gamma: float, n_l: int):
    """Density of the signal-bin magnitude for a unit-power symbol of length `n_l`."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("amplitude must be non-negative")
    if gamma <= 0:
        raise ValueError("SNR must be positive")
    out = np.exp(_log_rice_pdf(r, gamma, n_l))
    return float(out) if out.ndim == 0 else out


def ser_lora(gamma_eff: float, sf: int) -> float:
    """Symbol error rate of dechirp-and-DFT detection in AWGN.

    Integrates ``(1 - F_Ra(r)^(N-1)) f_Ri(r)`` directly, so small error rates
    keep full relative precision instead of being formed as ``1 - P_c``.
    """
    if gamma_eff == INF:
        return 0.0
    if not gamma_eff > 0:
        raise ValueError(f"effective SNR must be positive, got {gamma_eff!r}")
    n = 1 << int(sf)
    a = math.sqrt(n)
    g = float(gamma_eff)

    def integrand(r: float) -> float:
        if r <= 0.0:
            return 0.0
        # log of 1 - F^(N-1), with F = 1 - exp(-r^2 g)
        log_f_max = (n - 1) * math.log1p(-math.exp(-r * r * g)) if r * r * g < 745 else 0.0
        miss = -math.expm1(log_f_max)
        if miss <= 0.0:
            return 0.0
        x = 2.0 * r * g * a
        log_pdf = math.log(2.0 * r * g) - g * (r - a) ** 2 + math.log(special.i0e(x))
        return miss * math.exp(log_pdf)

    # Rice mass beyond 9 standard deviations is below 1e-15
    spread = 9.0 / math.sqrt(2.0 * g)
    lo = max(0.0, a - spread)
    hi = a + spread
    pieces = [0.0] + [x for x in (lo, a) if x > 0.0] + [hi]
    total = 0.0
    for left, right in zip(pieces[:-1], pieces[1:]):
        val, _ = integrate.quad(integrand, left, right, epsabs=0.0, epsrel=1e-10, limit=400)
        total += val
    return min(1.0, max(0.0, total))


# ---------------------------------------------------------------------------
# effective SNRs and bit error rate


def eff_snr_low(gamma: float, kappa: float) -> float:
    """SNR seen by the low-SF layer when the high-SF layer counts as extra noise."""
    if not (gamma > 0 and kappa > 0):
        raise ValueError("gamma and kappa must be positive")
    if kappa == INF:
        return gamma
    if gamma == INF:
        return kappa
    return gamma * kappa / (gamma + kappa)


def eff_snr_high(gamma: float, kappa: float, beta: int, n_l: int) -> float:
    """Correlator output SNR of the superposed layer: (gamma/kappa) * beta * N_l."""
    if not (gamma > 0 and kappa > 0 and beta > 0 and n_l > 0):
        raise ValueError("gamma, kappa, beta and n_l must be positive")
    if kappa == INF:
        return 0.0
    return gamma / kappa * beta * n_l


def q_function(x):
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def ber_bpsk(gamma_h: float) -> float:
    """Coherent BPSK bit error rate Q(sqrt(2 gamma_h)) = erfc(sqrt(gamma_h)) / 2."""
    if gamma_h < 0:
        raise ValueError(f"SNR must be non-negative, got {gamma_h!r}")
    if gamma_h == INF:
        return 0.0
    return float(0.5 * special.erfc(math.sqrt(gamma_h)))


# ---------------------------------------------------------------------------
# feasible (gamma, kappa) region


@dataclass(frozen=True)
class FeasibleCell:
    gamma_db: float
    kappa_db: float
    lora_ok: bool
    high_ok: bool
    on_boundary: bool = False

    @property
    def both_ok(self) -> bool:
        return self.lora_ok and self.high_ok


def feasible_cell(gamma_db: float, kappa_db: float, lora_threshold_db: float = -6.0,
                  ber_target: float = 1e-5, beta: int = 16, sf_low: int = 7) -> FeasibleCell:
    gamma, kappa = db_to_linear(gamma_db), db_to_linear(kappa_db)
    lora_ok = eff_snr_low(gamma, kappa) >= db_to_linear(lora_threshold_db)
    high_ok = ber_bpsk(eff_snr_high(gamma, kappa, beta, 1 << sf_low)) <= ber_target
    return FeasibleCell(gamma_db, kappa_db, bool(lora_ok), bool(high_ok))


def feasible_region(gamma_grid_db: Sequence[float], kappa_grid_db: Sequence[float],
                    lora_threshold_db: float = -6.0, ber_target: float = 1e-5,
                    beta: int = 16, sf_low: int = 7) -> list[FeasibleCell]:
    """Evaluate both constraints on the grid, gamma-major.

    A cell is marked ``on_boundary`` when its joint feasibility differs from
    at least one of its four grid neighbours.
    """
    g = list(gamma_grid_db)
    k = list(kappa_grid_db)
    if not g or not k:
        raise ValueError("gamma and kappa grids must be non-empty")
    if any(b < a for a, b in zip(g, g[1:])) or any(b < a for a, b in zip(k, k[1:])):
        raise ValueError("grids must be sorted ascending")
    grid = [[feasible_cell(gd, kd, lora_threshold_db, ber_target, beta, sf_low) for kd in k] for gd in g]
    both = np.array([[c.both_ok for c in row] for row in grid], dtype=bool)
    edge = np.zeros_like(both)
    edge[1:, :] |= both[1:, :] != both[:-1, :]
    edge[:-1, :] |= both[1:, :] != both[:-1, :]
    edge[:, 1:] |= both[:, 1:] != both[:, :-1]
    edge[:, :-1] |= both[:, 1:] != both[:, :-1]
    out = []
    for i, row in enumerate(grid):
        for j, c in enumerate(row):
            out.append(FeasibleCell(c.gamma_db, c.kappa_db, c.lora_ok, c.high_ok, bool(edge[i, j])))
    return out


# ---------------------------------------------------------------------------
# time-frequency view


def stft_magnitude(samples: np.ndarray, sample_rate: float, window: int = 64, hop: int = 16):
    """Hann-windowed short-time Fourier magnitude.

    Returns ``(frame_centre_times_s, freqs_hz, magnitudes)`` with frequencies
    ascending from -fs/2 and one row of `magnitudes` per frame.
    """
    x = np.asarray(samples, dtype=np.complex128)
    if window < 2 or hop < 1 or window > x.size:
        raise ValueError(f"invalid STFT window {window} / hop {hop} for {x.size} samples")
    starts = np.arange(0, x.size - window + 1, hop)
    frames = x[starts[:, None] + np.arange(window)] * signal.windows.hann(window, sym=False)
    mag = np.abs(np.fft.fftshift(np.fft.fft(frames, axis=1), axes=1))
    freqs = np.fft.fftshift(np.fft.fftfreq(window, 1.0 / sample_rate))
    return (starts + window / 2) / sample_rate, freqs, mag
