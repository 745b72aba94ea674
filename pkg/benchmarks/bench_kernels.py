"""Compare the compiled and numpy trial kernels.

    python benchmarks/bench_kernels.py [--trials 4096] [--repeat 3]

Prints microseconds per trial for each backend and operating point, and
checks that both backends return identical decisions.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from clsc import SuperposConfig, backend
from clsc.sim import Scenario, trial_outcomes

POINTS = [
    ("noisy, kappa=6 dB", -12.0, 10 ** 0.6),
    ("noisy, kappa=inf", -8.0, math.inf),
    ("noiseless, kappa=6 dB", math.inf, 10 ** 0.6),
]


def time_kernel(kernel, sc: Scenario, trials: int, repeat: int) -> tuple[float, tuple]:
    trial_outcomes(sc, 0, 64, kernel)  # warm tables and caches
    best, out = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = trial_outcomes(sc, 0, trials, kernel)
        best = min(best, time.perf_counter() - t0)
    return best / trials * 1e6, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = ["python"] + (["compiled"] if backend.HAVE_COMPILED else [])
    if not backend.HAVE_COMPILED:
        print("compiled kernel not built; timing the numpy kernel only")
    print(f"{'point':<24}" + "".join(f"{n + ' us/trial':>22}" for n in names) + f"{'speedup':>10}  identical")
    for label, gamma_db, kappa in POINTS:
        sc = Scenario(SuperposConfig(kappa=kappa), gamma_db, args.trials, master_seed=2024)
        res = {n: time_kernel(backend.get_kernel(n), sc, args.trials, args.repeat) for n in names}
        line = f"{label:<24}" + "".join(f"{res[n][0]:>22.1f}" for n in names)
        if len(names) == 2:
            same = all(np.array_equal(a, b) for a, b in zip(res["python"][1], res["compiled"][1]))
            line += f"{res['python'][0] / res['compiled'][0]:>9.2f}x  {same}"
        print(line)


if __name__ == "__main__":
    main()
