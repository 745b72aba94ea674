"""Counter-based random streams for Monte Carlo trials.

Every trial owns a fixed, disjoint window of one Philox4x64-10 stream keyed by
the master seed: trial ``i`` reads blocks ``[i*B, (i+1)*B)`` where ``B`` is
the number of 4-word blocks a trial needs. A trial's draws therefore depend
only on ``(master_seed, i)``, never on how trials are split across workers.

Word layout inside a trial window (uniform ``u = (w >> 11) * 2**-53``):

* word 0: low-SF symbol, ``floor(u * N_l)``
* word 1: BPSK bit, ``floor(u * 2)``
* words ``2 + 2m`` and ``3 + 2m``: magnitude / phase uniforms of noise sample ``m``
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
HEADER_WORDS = 2


def words_per_trial(n_samples: int) -> int:
    return HEADER_WORDS + 2 * n_samples


def blocks_per_trial(n_samples: int) -> int:
    return -(-words_per_trial(n_samples) // 4)


def philox_key(master_seed: int) -> np.ndarray:
    if not 0 <= master_seed <= MASK64:
        raise ValueError(f"master seed must be an unsigned 64-bit integer, got {master_seed}")
    return np.array([master_seed, 0], dtype=np.uint64)


def _counter(block: int) -> np.ndarray:
    return np.array([(block >> (64 * i)) & MASK64 for i in range(4)], dtype=np.uint64)


def trial_generator(master_seed: int, trial_index: int, n_samples: int) -> np.random.Generator:
    """Generator positioned at the start of trial `trial_index`'s window."""
    if trial_index < 0:
        raise ValueError("trial index must be non-negative")
    start = trial_index * blocks_per_trial(n_samples)
    return np.random.Generator(np.random.Philox(key=philox_key(master_seed), counter=_counter(start)))


def chunk_words(master_seed: int, first_trial: int, n_trials: int, n_samples: int) -> np.ndarray:
    """Raw words for trials ``first_trial .. first_trial + n_trials - 1``, one row per trial."""
    blocks = blocks_per_trial(n_samples)
    bg = np.random.Philox(key=philox_key(master_seed), counter=_counter(first_trial * blocks))
    return bg.random_raw(n_trials * blocks * 4).reshape(n_trials, blocks * 4)


def words_to_uniform(words: np.ndarray) -> np.ndarray:
    return (words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def derive_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for the `index`-th scenario of a sweep."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
