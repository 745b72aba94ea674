/* Philox4x64-10 block function (Salmon et al., Random123), bit-compatible
 * with numpy.random.Philox: stream block b is computed at counter b + 1. */
#ifndef CLSC_PHILOX_H
#define CLSC_PHILOX_H

#include <stdint.h>

static inline uint64_t clsc_mulhilo64(uint64_t a, uint64_t b, uint64_t *hi)
{
    __uint128_t p = (__uint128_t)a * (__uint128_t)b;
    *hi = (uint64_t)(p >> 64);
    return (uint64_t)p;
}

static inline void clsc_philox4x64_10(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                                      uint64_t k0, uint64_t k1, uint64_t out[4])
{
    for (int r = 0; r < 10; ++r) {
        uint64_t hi0, hi1, lo0, lo1;
        if (r) {
            k0 += 0x9E3779B97F4A7C15ULL;
            k1 += 0xBB67AE8584CAA73BULL;
        }
        lo0 = clsc_mulhilo64(0xD2E7470EE14C6C93ULL, c0, &hi0);
        lo1 = clsc_mulhilo64(0xCA5A826395121157ULL, c2, &hi1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

/* Fill `nblocks` consecutive blocks starting at stream block `first_block`. */
static inline void clsc_philox_fill(uint64_t k0, uint64_t k1, uint64_t first_block,
                                    uint64_t nblocks, uint64_t *dst)
{
    for (uint64_t j = 0; j < nblocks; ++j) {
        /* caller keeps first_block + nblocks below 2**64 - 1: no carry */
        clsc_philox4x64_10(first_block + j + 1, 0, 0, 0, k0, k1, dst + 4 * j);
    }
}

#endif
