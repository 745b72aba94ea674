# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial kernel: Philox stream, channel and receiver fused per trial.

Mirrors ``clsc._pykernel.run_chunk`` draw for draw. Low-SF symbols are built
from three tables, ``up[m] * tone[(s*m) % L] * rot[m % beta]`` (the last
factor only after the frequency wrap), instead of one table per symbol.
"""

import numpy as np

from libc.math cimport log1p, sqrt, M_PI
from libc.stdint cimport uint64_t, int64_t

from .waveform import _symbol_samples

cdef extern from "<math.h>" nogil:
    void sincos(double x, double *sin, double *cos)

cdef extern from "philox.h" nogil:
    void clsc_philox_fill(uint64_t k0, uint64_t k1, uint64_t first_block,
                          uint64_t nblocks, uint64_t *dst)

cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline double _uniform(uint64_t w) noexcept nogil:
    return <double>(w >> 11) * TWO_M53


cdef void _low_symbol(double complex[::1] out, const double complex[::1] up, const double complex[::1] tone,
                      const double complex[::1] rot, int64_t s, int64_t n, int64_t beta) noexcept nogil:
    cdef int64_t length = beta * n
    cdef int64_t fold = beta * (n - s)
    cdef int64_t m, ti = 0, ri = 0
    for m in range(length):
        out[m] = up[m] * tone[ti]
        if m >= fold:
            out[m] = out[m] * rot[ri]
        ti += s
        if ti >= length:
            ti -= length
        ri += 1
        if ri == beta:
            ri = 0


cdef void _fft_inplace(double complex[::1] a, const int64_t[::1] bitrev,
                       const double complex[::1] twiddle, int64_t n) noexcept nogil:
    cdef int64_t i, j, k, half, step, span
    cdef double complex t, w
    for i in range(n):
        j = bitrev[i]
        if j > i:
            t = a[i]
            a[i] = a[j]
            a[j] = t
    span = 2
    while span <= n:
        half = span // 2
        step = n // span
        i = 0
        while i < n:
            for k in range(half):
                w = twiddle[k * step]
                t = w * a[i + k + half]
                a[i + k + half] = a[i + k] - t
                a[i + k] = a[i + k] + t
            i += span
        span *= 2


def philox_words(uint64_t master_seed, uint64_t first_block, uint64_t nblocks):
    """Raw words of stream blocks ``first_block .. first_block + nblocks - 1``."""
    out = np.empty(4 * nblocks, dtype=np.uint64)
    cdef uint64_t[::1] dst = out
    if nblocks:
        clsc_philox_fill(master_seed, 0, first_block, nblocks, &dst[0])
    return out


def run_chunk(uint64_t master_seed, int64_t first_trial, int64_t n_trials, int sf_low, int64_t beta,
              segment, double amp_high, double noise_power, bpf_taps=None, bint ideal_cancel=False):
    if bpf_taps is not None:
        raise ValueError("compiled kernel has no band-pass stage; use the python backend")
    cdef int64_t n = 1 << sf_low
    cdef int64_t length = beta * n
    cdef int64_t nwords = 2 + 2 * length
    cdef int64_t nblocks = (nwords + 3) // 4

    seg_arr = np.ascontiguousarray(segment, dtype=np.complex128)
    if seg_arr.shape[0] != length:
        raise ValueError(f"segment must have {length} samples")
    if (first_trial + n_trials) * nblocks >= 2 ** 63:
        raise OverflowError("trial index too large for the stream layout")

    idx = np.arange(length)
    cdef const double complex[::1] seg = seg_arr
    cdef const double complex[::1] up = np.ascontiguousarray(_symbol_samples(n, beta, 0))
    cdef const double complex[::1] tone = np.exp(2j * np.pi * idx / length)
    cdef const double complex[::1] rot = np.exp(-2j * np.pi * np.arange(beta) / beta)
    cdef const double complex[::1] dechirp_ref = np.conj(_symbol_samples(n, 1, 0))
    cdef const double complex[::1] twiddle = np.exp(-2j * np.pi * np.arange(n // 2 + 1) / n)
    bits = sf_low
    cdef const int64_t[::1] bitrev = np.array(
        [int(format(i, f"0{bits}b")[::-1], 2) for i in range(n)], dtype=np.int64)

    out_s = np.empty(n_trials, dtype=np.int64)
    out_bit = np.empty(n_trials, dtype=np.int64)
    out_s_hat = np.empty(n_trials, dtype=np.int64)
    out_bit_hat = np.empty(n_trials, dtype=np.int64)
    cdef int64_t[::1] o_s = out_s, o_b = out_bit, o_sh = out_s_hat, o_bh = out_bit_hat

    words_arr = np.empty(4 * nblocks, dtype=np.uint64)
    rx_arr = np.empty(length, dtype=np.complex128)
    low_arr = np.empty(length, dtype=np.complex128)
    fft_arr = np.empty(n, dtype=np.complex128)
    cdef uint64_t[::1] words = words_arr
    cdef double complex[::1] rx = rx_arr
    cdef double complex[::1] low = low_arr
    cdef double complex[::1] buf = fft_arr

    cdef int64_t t, m, k, s, bit, s_hat
    cdef double c, mag, theta, best, p, sn, cs
    cdef double complex z, x
    cdef bint noisy = noise_power > 0

    with nogil:
        for t in range(n_trials):
            clsc_philox_fill(master_seed, 0, <uint64_t>((first_trial + t) * nblocks), nblocks, &words[0])
            s = <int64_t>(_uniform(words[0]) * n)
            bit = <int64_t>(_uniform(words[1]) * 2)
            c = 1.0 - 2.0 * bit

            _low_symbol(low, up, tone, rot, s, n, beta)
            for m in range(length):
                x = low[m] + (amp_high * c) * seg[m]
                if noisy:
                    mag = sqrt(-log1p(-_uniform(words[2 + 2 * m])) * noise_power)
                    theta = 2.0 * M_PI * _uniform(words[3 + 2 * m])
                    sincos(theta, &sn, &cs)
                    x = x + (mag * cs + 1j * (mag * sn))
                rx[m] = x

            for k in range(n):
                buf[k] = rx[k * beta] * dechirp_ref[k]
            _fft_inplace(buf, bitrev, twiddle, n)
            s_hat = 0
            best = -1.0
            for k in range(n):
                p = buf[k].real * buf[k].real + buf[k].imag * buf[k].imag
                if p > best:
                    best = p
                    s_hat = k

            _low_symbol(low, up, tone, rot, s if ideal_cancel else s_hat, n, beta)
            z = 0
            for m in range(length):
                z = z + seg[m].conjugate() * (rx[m] - low[m])

            o_s[t] = s
            o_b[t] = bit
            o_sh[t] = s_hat
            o_bh[t] = 1 if z.real < 0 else 0

    return out_s, out_bit, out_s_hat, out_bit_hat
