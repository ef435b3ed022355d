"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 infeasible channel or code
parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import logging
import sys

from . import analysis, harness
from .baselines import MAX_SEARCH_BITS, builtin_code, load_dispersion_code
from .channel import parse_db, substream
from .constellation import build_qam
from .errors import ConfigurationError, ContractViolation, FeasibilityError, ParameterError
from .spacecode import encode, make_params

log = logging.getLogger("rcmimo")

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _add_sim_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file mirroring SimConfig")
    p.add_argument("--snr", help="SNR grid in dB, start:step:stop or comma list")
    p.add_argument("--k-db", help="K-factors in dB, comma list; inf and -inf allowed")
    p.add_argument("--trials", type=int)
    p.add_argument("--max-errors", type=int, help="early-stop bit errors per cell (0 disables)")
    p.add_argument("--seed", type=int)
    p.add_argument("--code", help="comma-separated schemes, e.g. proposed,vblast_ml,matrix_c")
    p.add_argument("--beta2", type=float)
    p.add_argument("--gain-norm", choices=["paper", "sqrt"])
    p.add_argument("--combiner", choices=["mf", "sum"])
    p.add_argument("--sic", choices=["zf", "mmse"], help="VBLAST SIC nulling")
    p.add_argument("-M", "--order", type=int, dest="M")
    p.add_argument("--dispersion", action="append", default=[], metavar="NAME=PATH", help="dispersion-code file for a scheme")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path (default stdout)")


def _config(args, base: harness.SimConfig) -> harness.SimConfig:
    cfg = harness.SimConfig.from_file(args.config, base) if args.config else base
    changes = {}
    if args.snr:
        changes["snr_db"] = harness.parse_range(args.snr)
    if args.k_db:
        changes["k_db"] = harness.parse_db_list(args.k_db)
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.max_errors is not None:
        changes["max_errors"] = args.max_errors or None
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.code:
        changes["schemes"] = tuple(s.strip() for s in args.code.split(",") if s.strip())
    if args.beta2 is not None:
        changes["beta2"] = args.beta2
    if args.gain_norm:
        changes["gain_norm"] = args.gain_norm
    if args.combiner:
        changes["combiner"] = args.combiner
    if args.sic:
        changes["sic_detector"] = args.sic
    if args.M is not None:
        changes["M"] = args.M
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out:
        changes["output"] = args.out
    if args.dispersion:
        files = dict(cfg.dispersion_files)
        for item in args.dispersion:
            name, sep, path = item.partition("=")
            if not sep:
                raise ConfigurationError(f"--dispersion expects NAME=PATH, got {item!r}")
            files[name] = path
        changes["dispersion_files"] = files
    return harness.SimConfig.from_mapping(changes, cfg) if changes else cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def cmd_sim(args) -> int:
    if args.figure:
        cfg = _config(args, harness.preset(args.figure))
        points = harness.run_figure(args.figure, cfg)
    else:
        cfg = _config(args, harness.SimConfig())
        points = harness.run_grid(cfg)
    _emit(harness.to_csv(points), cfg.output)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args, harness.preset(2))
    if args.grid:
        cfg = cfg.replace(beta2_grid=harness.parse_range(args.grid))
    points = harness.run_figure(2, cfg)
    _emit(harness.to_csv(points), cfg.output)
    return 0


def cmd_pep(args) -> int:
    c = build_qam(args.M)
    p = make_params(args.beta2)
    k_db = parse_db(args.k_db)
    R = analysis.estimate_Rhg(k_db, args.gain_norm, args.samples, substream(args.seed, 0))
    snr = 10.0 ** (parse_db(args.snr) / 10.0)
    rows = []
    pairs = list(itertools.product(range(c.order), repeat=2))
    for a, b in itertools.combinations(range(len(pairs)), 2):
        cw = encode(c.points[list(pairs[a])], p)
        uw = encode(c.points[list(pairs[b])], p)
        rep = analysis.pep_chernoff(analysis.PepInputs(cw, uw, R, snr))
        rows.append([a, b, rep.rank, f"{rep.bound_value:.6e}", f"{rep.high_snr_bound:.6e}", " ".join(f"{v:.6e}" for v in rep.eigenvalues)])
    text = _csv(["pair_c", "pair_u", "rank", "bound", "high_snr_bound", "eigenvalues"], rows)
    _emit(text, args.out)
    return 0


def cmd_complexity(args) -> int:
    rows = analysis.complexity_table(args.M)
    keys = ["decoder", "metric_evaluations", *analysis.TABLE_I_OPS, "comparisons"]
    text = _csv(keys, [[r[k] for k in keys] for r in rows])
    codes = [builtin_code("matrix_c")] + [load_dispersion_code(p) for p in args.dispersion]
    # codes beyond the exhaustive-search cap are left out of the live count
    bits = args.M.bit_length() - 1
    srows = analysis.scheme_table(args.M, [c for c in codes if c.n_symbols * bits <= MAX_SEARCH_BITS])
    text += "\n" + _csv(["scheme", "symbol_rate", "metric_evaluations"], [[r["scheme"], r["symbol_rate"], r["metric_evaluations"]] for r in srows])
    _emit(text, args.out)
    return 0


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcmimo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="run a BER experiment and write CSV")
    sim.add_argument("--figure", choices=["2", "3", "4"], help="experiment preset: 2 beta2 sweep, 3 BER vs K, 4 BER vs SNR")
    _add_sim_overrides(sim)
    sim.set_defaults(func=cmd_sim)

    an = sub.add_parser("analyze", help="design-criteria tools")
    asub = an.add_subparsers(dest="tool", required=True)

    pep = asub.add_parser("pep", help="Chernoff PEP bound and diversity rank for all codeword pairs")
    pep.add_argument("--k-db", default="2")
    pep.add_argument("--snr", default="20", help="SNR in dB")
    pep.add_argument("--gain-norm", choices=["paper", "sqrt"], default="sqrt")
    pep.add_argument("--beta2", type=float, default=0.618)
    pep.add_argument("--samples", type=int, default=100_000)
    pep.add_argument("--seed", type=int, default=1)
    pep.add_argument("-M", "--order", type=int, dest="M", default=4)
    pep.add_argument("--out")
    pep.set_defaults(func=cmd_pep)

    sw = asub.add_parser("sweep-beta2", help="BER versus beta2 with common random numbers")
    sw.add_argument("--grid", help="beta2 grid, start:step:stop or comma list")
    _add_sim_overrides(sw)
    sw.set_defaults(func=cmd_sweep)

    cx = asub.add_parser("complexity", help="operation counts and metric evaluations per decoder")
    cx.add_argument("-M", "--order", type=int, dest="M", default=4)
    cx.add_argument("--dispersion", action="append", default=[], metavar="PATH")
    cx.add_argument("--out")
    cx.set_defaults(func=cmd_complexity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ContractViolation) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FeasibilityError, ParameterError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
