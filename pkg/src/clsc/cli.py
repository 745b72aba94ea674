"""Command-line front end; every command writes one CSV table.

With ``--out PATH`` a ``PATH.manifest.json`` sidecar records the command,
its parameters, seed, library version and a UTC timestamp.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analysis import (
    ber_bpsk,
    db_to_linear,
    eff_snr_high,
    eff_snr_low,
    feasible_region,
    linear_to_db,
    ser_lora,
    stft_magnitude,
    u_spectrum_bruteforce,
    u_spectrum_stationary,
)
from .channel import SuperposConfig, compose_tx
from .sim import Scenario, sweep
from .streams import derive_seed
from .waveform import LoraConfig, default_offset, gen_high_segment, gen_symbol

SPECTRUM_COLUMNS = ["k", "mag_bruteforce", "mag_stationary_prediction", "in_block_K"]
SPECTROGRAM_COLUMNS = ["frame", "time_s", "freq_hz", "magnitude"]
SIMULATE_COLUMNS = ["gamma_db", "kappa_db", "trials", "ser", "ser_stderr", "ber", "ber_stderr",
                    "ser_theory", "ber_theory", "symbol_errors", "bit_errors", "low_confidence"]
FEASIBLE_COLUMNS = ["gamma_db", "kappa_db", "lora_ok", "high_ok", "both_ok", "on_boundary"]
ANALYZE_COLUMNS = {
    "ser": ["gamma_db", "kappa_db", "gamma_eff_db", "ser_theory"],
    "ber": ["gamma_db", "kappa_db", "gamma_h_db", "ber_theory"],
    "ber-eff": ["gamma_h_db", "ber_theory"],
}


class CliError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    master_seed: int | None
    library_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def parse_value(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise CliError(f"not a number: {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """``x``, ``a,b,c`` or inclusive ``start:stop:step``; ``inf`` allowed as a value."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (parse_value(p) for p in parts)
        if not all(math.isfinite(v) for v in (start, stop, step)) or step <= 0 or stop < start:
            raise CliError(f"invalid range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    values = [parse_value(v) for v in text.split(",") if v.strip()]
    if not values:
        raise CliError(f"empty grid {text!r}")
    return values


def write_table(args, columns: list[str], rows, params: dict, seed: int | None = None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    if args.out is None:
        sys.stdout.write(buf.getvalue())
        return
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    manifest = RunManifest(args.command, params, seed)
    with open(f"{args.out}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, default=str)
        fh.write("\n")


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out")}


def _offset(args) -> int:
    return default_offset(args.sf_low, args.sf_high) if args.offset is None else args.offset


def cmd_spectrum(args) -> None:
    lo, hi = LoraConfig(args.sf_low), LoraConfig(args.sf_high)
    n_s = _offset(args)
    pred = u_spectrum_stationary(lo, hi, n_s, args.symbol)
    mags = u_spectrum_bruteforce(lo, hi, n_s, args.symbol)
    flat = pred.magnitudes()
    rows = [(k, mags[k], flat[k], pred.in_block[k]) for k in range(lo.n)]
    write_table(args, SPECTRUM_COLUMNS, rows, _params(args))


def cmd_spectrogram(args) -> None:
    lo = LoraConfig(args.sf_low, args.bandwidth_hz, args.beta)
    if args.waveform == "low":
        buf = gen_symbol(lo, args.symbol)
    else:
        hi = LoraConfig(args.sf_high, args.bandwidth_hz, args.beta)
        seg = gen_high_segment(hi, lo, _offset(args))
        if args.waveform == "high":
            buf = seg
        else:
            sp = SuperposConfig(args.sf_low, args.sf_high, _offset(args), db_to_linear(args.kappa_db))
            buf = compose_tx(gen_symbol(lo, args.symbol), seg, args.bit, sp)
    times, freqs, mag = stft_magnitude(buf.samples, lo.sample_rate, args.window, args.hop)
    rows = ((i, times[i], freqs[j], mag[i, j]) for i in range(len(times)) for j in range(len(freqs)))
    write_table(args, SPECTROGRAM_COLUMNS, rows, _params(args))


def cmd_simulate(args) -> None:
    if args.trials < 1:
        raise CliError("--trials must be >= 1")
    gammas, kappas = parse_grid(args.gamma_db), parse_grid(args.kappa_db)
    scenarios = []
    for kappa_db in kappas:
        for gamma_db in gammas:
            sp = SuperposConfig(args.sf_low, args.sf_high, _offset(args), db_to_linear(kappa_db))
            scenarios.append(Scenario(sp, gamma_db, args.trials, derive_seed(args.seed, len(scenarios)),
                                      args.beta, args.bandwidth_hz, args.bypass_bpf,
                                      ideal_cancel=args.ideal_cancel))
    points = sweep(scenarios)
    rows = []
    for sc, pt in zip(scenarios, points):
        gamma, kappa = sc.gamma, sc.superpos.kappa
        ser_th = ser_lora(eff_snr_low(gamma, kappa), args.sf_low)
        ber_th = ber_bpsk(eff_snr_high(gamma, kappa, args.beta, 1 << args.sf_low))
        rows.append((pt.gamma_db, pt.kappa_db, pt.trials, pt.ser, pt.stderr_ser, pt.ber, pt.stderr_ber,
                     ser_th, ber_th, pt.symbol_errors, pt.bit_errors,
                     pt.low_confidence_ser or pt.low_confidence_ber))
    write_table(args, SIMULATE_COLUMNS, rows, _params(args), args.seed)


def cmd_feasible(args) -> None:
    cells = feasible_region(parse_grid(args.gamma_db), parse_grid(args.kappa_db), args.lora_threshold_db,
                            args.ber_target, args.beta, args.sf_low)
    rows = ((c.gamma_db, c.kappa_db, c.lora_ok, c.high_ok, c.both_ok, c.on_boundary) for c in cells)
    write_table(args, FEASIBLE_COLUMNS, rows, _params(args))


def cmd_analyze(args) -> None:
    rows = []
    n_l = 1 << args.sf_low
    if args.curve == "ber-eff":
        for gh_db in parse_grid(args.gamma_h_db):
            rows.append((gh_db, ber_bpsk(db_to_linear(gh_db))))
    else:
        for kappa_db in parse_grid(args.kappa_db):
            for gamma_db in parse_grid(args.gamma_db):
                gamma, kappa = db_to_linear(gamma_db), db_to_linear(kappa_db)
                if args.curve == "ser":
                    g_eff = eff_snr_low(gamma, kappa)
                    rows.append((gamma_db, kappa_db, linear_to_db(g_eff), ser_lora(g_eff, args.sf_low)))
                else:
                    g_h = eff_snr_high(gamma, kappa, args.beta, n_l)
                    rows.append((gamma_db, kappa_db, linear_to_db(g_h), ber_bpsk(g_h)))
    write_table(args, ANALYZE_COLUMNS[args.curve], rows, _params(args))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clsc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, gamma=None, kappa=None):
        p.add_argument("--sf-low", type=int, default=7)
        p.add_argument("--sf-high", type=int, default=12)
        p.add_argument("--offset", type=int, default=None, help="segment offset n_s (default: DC-centred)")
        p.add_argument("--beta", type=int, default=16, help="oversampling factor")
        p.add_argument("--bandwidth-hz", type=float, default=125e3)
        p.add_argument("--out", default=None, help="CSV path (default: stdout)")
        if gamma is not None:
            p.add_argument("--gamma-db", default=gamma, help="scalar, a,b,c or start:stop:step; 'inf' allowed")
        if kappa is not None:
            p.add_argument("--kappa-db", default=kappa, help="scalar, a,b,c or start:stop:step; 'inf' allowed")

    p = sub.add_parser("spectrum", help="|U[k]| of a high-SF segment: brute force vs stationary phase")
    common(p)
    p.add_argument("--symbol", type=int, default=0, help="high-SF symbol index s_h")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("spectrogram", help="short-time Fourier magnitude of a transmit waveform")
    common(p)
    p.add_argument("--waveform", choices=["low", "high", "composite"], default="composite")
    p.add_argument("--symbol", type=int, default=0, help="low-SF symbol index")
    p.add_argument("--bit", type=int, choices=[0, 1], default=0)
    p.add_argument("--kappa-db", type=parse_value, default=0.0)
    p.add_argument("--window", type=int, default=64)
    p.add_argument("--hop", type=int, default=16)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("simulate", help="Monte Carlo SER/BER over (gamma, kappa) grids")
    common(p, gamma="-10", kappa="10")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--bypass-bpf", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--ideal-cancel", action="store_true",
                   help="subtract the transmitted low-SF symbol instead of the detected one")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("feasible", help="feasibility of both layers over a (gamma, kappa) grid")
    p.add_argument("--gamma-db", default="-20:10:0.25")
    p.add_argument("--kappa-db", default="0:40:0.25")
    p.add_argument("--lora-threshold-db", type=float, default=-6.0)
    p.add_argument("--ber-target", type=float, default=1e-5)
    p.add_argument("--beta", type=int, default=16)
    p.add_argument("--sf-low", type=int, default=7)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("analyze", help="theoretical SER / BER curves")
    p.add_argument("--curve", choices=sorted(ANALYZE_COLUMNS), default="ser")
    p.add_argument("--sf-low", "--sf", type=int, default=7)
    p.add_argument("--gamma-db", default="-16:0:0.5")
    p.add_argument("--kappa-db", default="inf")
    p.add_argument("--gamma-h-db", default="-10:15:0.5")
    p.add_argument("--beta", type=int, default=16)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)
    return parser


GRID_FLAGS = ("--gamma-db", "--kappa-db", "--gamma-h-db")


def _attach_grid_values(argv: list[str]) -> list[str]:
    # argparse takes "-12,-10" or "-16:0:0.5" for an option name; bind them explicitly
    out, i = [], 0
    while i < len(argv):
        if argv[i] in GRID_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_attach_grid_values(argv))
    try:
        args.func(args)
    except (CliError, ValueError, OverflowError) as exc:
        msg = " ".join(str(exc).split())
        print(f"clsc {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
