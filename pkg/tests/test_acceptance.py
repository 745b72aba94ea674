"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
(and on stdout when this file is run as a script).
"""

import csv
import io
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import special

from clsc import (IqBuffer, LoraConfig, SuperposConfig, compose_tx, correlate_bpsk, dechirp, demod_lora, dft_metric,
                  gen_high_segment, gen_symbol, reconstruct_and_cancel, ser_lora, u_spectrum_bruteforce,
                  u_spectrum_stationary)
from clsc.analysis import assert_minmax_bound, ber_bpsk, db_to_linear, eff_snr_high, eff_snr_low
from clsc.sim import Scenario, sweep, trial_outcomes
from clsc.streams import derive_seed
from conftest import ACCEPTANCE

TRIALS = 100_000
BETA, N_L = 16, 128
KAPPAS_DB = (3.0, 6.0, 10.0)
MIN_ERRORS = 10

# spectra computed for criterion 4, reused by criterion 3
_SPECTRA: list[np.ndarray] = []


def record(key: str, ok: bool, line: str) -> None:
    ACCEPTANCE[key] = (bool(ok), line)
    print(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {line}")


def binomial_z(errors: int, trials: int, p: float) -> float:
    sigma = math.sqrt(p * (1 - p) / trials)
    return (errors / trials - p) / sigma if sigma > 0 else (0.0 if errors == 0 else math.inf)


def graded(points):
    """(|z| <= 3 for every point with enough errors, text for the worst one, number graded)."""
    rows = [(pt, th, binomial_z(err, pt.trials, th)) for pt, err, th in points if err >= MIN_ERRORS]
    if not rows:
        return False, "no point reached the error floor", 0
    pt, th, z = max(rows, key=lambda r: abs(r[2]))
    worst = f"worst z={z:+.2f} at gamma={pt.gamma_db:.2f} dB kappa={pt.kappa_db:g} dB (theory {th:.4g})"
    return all(abs(r[2]) <= 3 for r in rows), worst, len(rows)


def test_c1_orthogonality():
    t0 = time.perf_counter()
    worst_off, worst_diag = 0.0, 0.0
    for sf in range(2, 10):
        n = 1 << sf
        x = np.stack([gen_symbol(LoraConfig(sf), s).samples for s in range(n)])
        gram = x.conj() @ x.T
        worst_diag = max(worst_diag, np.max(np.abs(np.diag(gram) - n)))
        worst_off = max(worst_off, np.max(np.abs(gram - np.diag(np.diag(gram)))))
    rng = np.random.default_rng(1)
    for sf in (10, 11, 12):
        n = 1 << sf
        for _ in range(100):
            a, b = rng.choice(n, size=2, replace=False)
            xa, xb = gen_symbol(LoraConfig(sf), int(a)).samples, gen_symbol(LoraConfig(sf), int(b)).samples
            worst_off = max(worst_off, abs(np.vdot(xa, xb)))
            worst_diag = max(worst_diag, abs(np.vdot(xa, xa) - n))
    dt = time.perf_counter() - t0
    ok = worst_off < 1e-6 and worst_diag < 1e-6 and dt < 30
    record("1", ok, f"max |off-diag|={worst_off:.2e}, max |diag-N|={worst_diag:.2e}, {dt:.1f} s")
    assert ok


def test_c2_energy_conservation():
    rng = np.random.default_rng(2)
    worst = 0.0
    for sf in range(7, 13):
        cfg = LoraConfig(sf)
        for _ in range(1000):
            buf = IqBuffer(rng.normal(size=cfg.n) + 1j * rng.normal(size=cfg.n))
            y = dft_metric(dechirp(buf, cfg)).bins
            worst = max(worst, abs(np.sum(np.abs(y) ** 2) - buf.energy) / buf.energy)
    record("2", worst < 1e-9, f"max relative energy error {worst:.2e} over 6000 buffers")
    assert worst < 1e-9


def test_c4_stationary_phase_flatness():
    t0 = time.perf_counter()
    lo, hi = LoraConfig(7), LoraConfig(12)
    pred = u_spectrum_stationary(lo, hi, 0)
    mags = u_spectrum_bruteforce(lo, hi, 0)
    _SPECTRA.append(mags)
    interior = pred.block_order()[5:-5]
    dev_db = 20 * np.log10(mags[interior] / pred.flat_level)
    frac = float(np.sum(mags[pred.in_block] ** 2) / np.sum(mags ** 2))
    dt = time.perf_counter() - t0
    ok = (np.all(np.abs(dev_db) <= 3.0) and frac >= 0.90 and abs(pred.block_size - 124) <= 4
          and pred.predicted_block_size == 124 and dt < 1.0)
    record("4", ok, f"interior {dev_db.min():+.2f}..{dev_db.max():+.2f} dB around {pred.flat_level:.4f}, "
                    f"energy in K {frac:.3f}, |K|={pred.block_size} (predicted 124), {dt * 1e3:.0f} ms")
    assert ok


def test_c3_minmax_bound():
    if not _SPECTRA:
        _SPECTRA.append(u_spectrum_bruteforce(LoraConfig(7), LoraConfig(12), 0))
    # beyond the criterion-4 spectrum: every high SF against SF7 at several offsets and symbols
    extra = [u_spectrum_bruteforce(LoraConfig(7), LoraConfig(sf), n_s, s_h)
             for sf in range(8, 13) for n_s in (0, ((1 << sf) - 128) // 2, (1 << sf) - 128) for s_h in (0, 1, 77)]
    margins = []
    for mags in _SPECTRA + extra:
        assert_minmax_bound(mags, slack=1e-12)
        e = mags ** 2
        margins.append(e.max() - e.sum() / e.size)
    ok = min(margins) >= -1e-12
    record("3", ok, f"max|U|^2 - E/N = {min(margins):.4f} >= 0 (min over {len(_SPECTRA) + len(extra)} spectra)")
    assert ok


def test_c5_plain_lora_ser():
    t0 = time.perf_counter()
    gammas = (-12.0, -10.0, -8.0, -6.0)
    scs = [Scenario(SuperposConfig(), g, TRIALS, master_seed=derive_seed(5, i)) for i, g in enumerate(gammas)]
    pts = sweep(scs)
    rows = [(pt, pt.symbol_errors, ser_lora(db_to_linear(pt.gamma_db), 7)) for pt in pts]
    ok, worst, n = graded(rows)
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    skipped = len(rows) - n
    record("5", ok, f"{n} graded points ({skipped} below {MIN_ERRORS} errors), {worst}, {dt:.0f} s")
    assert ok


def _collapse_low_scenarios():
    out = []
    for kappa_db in KAPPAS_DB:
        k = db_to_linear(kappa_db)
        for gl_db in (-12.0, -10.0, -8.0):
            g = 1 / (1 / db_to_linear(gl_db) - 1 / k)
            out.append((kappa_db, 10 * math.log10(g)))
    return out


def test_c6_collapse_low_layer():
    grid = _collapse_low_scenarios()
    scs = [Scenario(SuperposConfig(kappa=db_to_linear(k)), g, TRIALS, master_seed=derive_seed(6, i))
           for i, (k, g) in enumerate(grid)]
    pts = sweep(scs)
    rows = [(pt, pt.symbol_errors, ser_lora(eff_snr_low(sc.gamma, sc.superpos.kappa), 7))
            for sc, pt in zip(scs, pts)]
    ok, worst, n = graded(rows)
    record("6", ok, f"{n} points, gamma_l in {{-12,-10,-8}} dB x kappa {KAPPAS_DB} dB, {worst}")
    assert ok


BER_TARGETS = (0.3, 0.1, 1e-2, 1e-3, 1e-4)


def _ber_grid(targets):
    out = []
    for kappa_db in KAPPAS_DB:
        for ber in targets:
            gamma_h = special.erfcinv(2 * ber) ** 2
            out.append((kappa_db, 10 * math.log10(gamma_h * db_to_linear(kappa_db) / (BETA * N_L))))
    return out


def _ber_rows(grid, seed, ideal_cancel=False):
    scs = [Scenario(SuperposConfig(kappa=db_to_linear(k)), g, TRIALS, master_seed=derive_seed(seed, i),
                    ideal_cancel=ideal_cancel) for i, (k, g) in enumerate(grid)]
    pts = sweep(scs)
    return [(pt, pt.bit_errors, ber_bpsk(eff_snr_high(sc.gamma, sc.superpos.kappa, BETA, N_L)))
            for sc, pt in zip(scs, pts)]


def test_c7_collapse_high_layer():
    rows = _ber_rows(_ber_grid(BER_TARGETS), seed=7)
    ok, worst, n = graded(rows)
    failing = sum(1 for pt, err, th in rows if err >= MIN_ERRORS and abs(binomial_z(err, pt.trials, th)) > 3)
    record("7", ok, f"{n} points, theory BER {BER_TARGETS[0]:g}..{BER_TARGETS[-1]:g}, "
                    f"{failing} outside 3 sigma, {worst}")
    assert ok, (f"{failing} of {n} points outside 3 sigma; measured BER exceeds theory wherever the "
                f"LoRa layer is mis-detected (decision-directed cancellation)")


def test_c7_diagnostic_ideal_cancellation():
    """Same check with the transmitted low-SF symbol subtracted.

    Not an acceptance criterion: it isolates the correlator from LoRa error
    propagation, the condition under which the BER expression is derived.
    """
    rows = _ber_rows(_ber_grid((0.1, 1e-2, 1e-3)), seed=77, ideal_cancel=True)
    ok, worst, n = graded(rows)
    record("7-ideal", ok, f"(diagnostic, ideal cancellation) {n} points, {worst}")
    assert ok


def test_c8_feasible_region():
    proc = subprocess.run([sys.executable, "-m", "clsc", "feasible"], capture_output=True, text=True, check=True)
    rows = list(csv.DictReader(io.StringIO(proc.stdout)))
    cells = {(float(r["gamma_db"]), float(r["kappa_db"])): r for r in rows}

    spot = (cells[(0.0, 10.0)]["both_ok"] == "true", cells[(-20.0, 10.0)]["lora_ok"] == "false")
    # (0 dB, 60 dB) is outside the default kappa range; evaluate it with an explicit grid
    proc60 = subprocess.run([sys.executable, "-m", "clsc", "feasible", "--gamma-db", "0", "--kappa-db", "60"],
                            capture_output=True, text=True, check=True)
    far = next(csv.DictReader(io.StringIO(proc60.stdout)))
    spot += (far["lora_ok"] == "true" and far["high_ok"] == "false" and far["both_ok"] == "false",)

    lora_min = 10 ** (-6 / 10)
    mismatches = 0
    for (g_db, k_db), r in cells.items():
        g, k = 10 ** (g_db / 10), 10 ** (k_db / 10)
        lora_ok = g * k / (g + k) >= lora_min
        high_ok = 0.5 * math.erfc(math.sqrt(g / k * BETA * N_L)) <= 1e-5
        want = ("true" if lora_ok else "false", "true" if high_ok else "false",
                "true" if lora_ok and high_ok else "false")
        mismatches += (r["lora_ok"], r["high_ok"], r["both_ok"]) != want
    ok = all(spot) and mismatches == 0 and len(cells) == 121 * 161
    record("8", ok, f"spot checks {sum(spot)}/3, {mismatches} mismatches over {len(cells)} cells")
    assert ok


def test_c9_determinism_across_workers(tmp_path):
    args = [sys.executable, "-m", "clsc", "simulate", "--gamma-db", "-14:-8:2", "--kappa-db", "6,inf",
            "--trials", "20000", "--seed", "9"]
    out = []
    for workers in (1, 8):
        path = tmp_path / f"w{workers}.csv"
        env = {**os.environ, "CLSC_WORKERS": str(workers)}
        subprocess.run(args + ["--out", str(path)], env=env, check=True)
        out.append(path.read_bytes())
    ok = out[0] == out[1]
    record("9", ok, f"workers 1 vs 8: {'byte-identical' if ok else 'DIFFERENT'} ({len(out[0])} bytes)")
    assert ok


def test_c10_noiseless_round_trip():
    lo, hi = LoraConfig(7, oversample=BETA), LoraConfig(12, oversample=BETA)
    seg = gen_high_segment(hi, lo, 1984)
    failures = 0
    for kappa in (1.0, 4.0, 16.0):
        sp = SuperposConfig(kappa=kappa)
        for s in range(128):
            for bit in (0, 1):
                rx = compose_tx(gen_symbol(lo, s), seg, bit, sp)
                s_hat = demod_lora(rx, lo).s_hat
                bit_hat = correlate_bpsk(reconstruct_and_cancel(rx, s_hat, lo), seg).bit_hat
                failures += (s_hat != s) + (bit_hat != bit)
        # the fused Monte Carlo kernel sees the same noiseless link
        sc = Scenario(sp, math.inf, 4096, master_seed=10)
        s_, b_, sh_, bh_ = trial_outcomes(sc, 0, 4096)
        failures += int(np.count_nonzero(s_ != sh_) + np.count_nonzero(b_ != bh_))
    ok = failures == 0
    record("10", ok, f"768 exhaustive cases + 12288 kernel trials, {failures} errors")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
