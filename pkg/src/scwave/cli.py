"""Command-line entry point: `scwave <subcommand>`.

Results go to stdout; logs to stderr. Output files are written atomically
(write-then-rename) and every file is accompanied by a `*.manifest.json`
recording the subcommand, the fully resolved configuration, the seed and
the toolkit version, so any run can be reproduced from its outputs.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .density import DEFAULT_MAX_ITERS, HistoryPolicy, bp_threshold, de_run
from .ensemble import (
    EnsembleError,
    EnsembleSpec,
    SmoothingProfile,
    design_rate,
    load_spec,
    save_spec,
    spec_to_dict,
    validate_spec,
)
from .fixtures import check_fixtures, load_fixtures
from .optimizer import (
    InitializationError,
    OptimizerConfig,
    optimize_over_degrees,
)
from .sampler import export_alist, realized_rate, sample_code
from .simulate import ChannelModel, DecoderSetup, run_sweep
from .wave import front_arrival_speed, speed_displacement

logger = logging.getLogger("scwave")

SPEED_CSV_COLUMNS = ["epsilon", "dv", "dc", "w", "speed", "iterations", "feasible", "label"]
SIM_CSV_COLUMNS = [
    "param", "frames", "frame_errors", "bit_errors", "erasures",
    "BER", "FER", "ci_low", "ci_high",
]


class DomainError(Exception):
    """User-facing failure of a well-formed command (exit code 1)."""


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_manifest(out_path: Path, subcommand: str, args: argparse.Namespace, seed) -> None:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k != "func"
    }
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    atomic_write_text(
        out_path.with_name(out_path.name + ".manifest.json"),
        json.dumps(manifest, indent=2) + "\n",
    )


def resolve_seed(args: argparse.Namespace) -> int:
    """Explicit --seed, or a fresh one that the manifest will record."""
    if getattr(args, "seed", None) is not None:
        return args.seed
    seed = secrets.randbits(63)
    logger.info("no --seed given; generated seed %d (recorded in manifest)", seed)
    args.seed = seed
    return seed


def parse_grid(text: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive endpoints) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    count = int(round((stop - start) / step))
    grid = [start + k * step for k in range(count + 1)]
    return [g for g in grid if g <= stop + 1e-12]


def parse_dv_set(text: str) -> tuple[int, ...]:
    """'3..10', '3,4,5', or '4'."""
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(t) for t in text.split(","))


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    atomic_write_text(path, buf.getvalue())


def read_csv_rows(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _load_ensemble(path: str) -> EnsembleSpec:
    try:
        spec = load_spec(path)
    except (OSError, EnsembleError) as e:
        raise DomainError(str(e))
    check = validate_spec(spec)
    if not check.ok:
        raise DomainError(f"{path}: " + "; ".join(check.violations))
    return spec


# ---------------------------------------------------------------- commands


def cmd_rate(args) -> int:
    spec = _load_ensemble(args.ensemble)
    report = design_rate(spec)
    print(f"{report.design_rate:.5f}")
    logger.info(
        "delta=%.6f asymptotic_rate=%.6f L=%d", report.delta, report.asymptotic_rate, spec.L
    )
    return 0


def cmd_de(args) -> int:
    spec = _load_ensemble(args.ensemble)
    record = HistoryPolicy.FULL if args.dump_profiles else HistoryPolicy.NONE
    report = de_run(spec, args.epsilon, max_iters=args.max_iters, record=record)
    print(
        f"converged={report.converged} iterations={report.iterations_used} "
        f"max_residual={report.final_profile.x.max():.3e}"
    )
    if args.dump_profiles:
        out = Path(args.dump_profiles)
        rows = [
            {"t": t, "z": z + 1, "x": repr(float(x))}
            for t, profile in enumerate(report.history)
            for z, x in enumerate(profile)
        ]
        write_csv(out, ["t", "z", "x"], rows)
        write_manifest(out, "de", args, seed=None)
        logger.info("wrote %d profile rows to %s", len(rows), out)
    return 0


def cmd_threshold(args) -> int:
    spec = _load_ensemble(args.ensemble)
    value = bp_threshold(spec, tol=args.tol, max_iters=args.max_iters)
    print(f"{value:.6f}")
    return 0


def cmd_speed(args) -> int:
    specs: list[tuple[str, EnsembleSpec]] = []
    for path in args.ensemble or []:
        specs.append((Path(path).stem, _load_ensemble(path)))
    for text in args.uniform or []:
        dv_s, w_s = text.split(":")
        dv, w = int(dv_s), int(w_s)
        template = specs[0][1] if specs else None
        L = template.L if template else args.L
        M = template.M if template else 500
        specs.append(
            (f"uniform-dv{dv}-w{w}", EnsembleSpec(dv, 2 * dv, SmoothingProfile.uniform(w), L, M))
        )
    if not specs:
        raise DomainError("give at least one --ensemble or --uniform series")
    grid = args.epsilon_grid
    rows = []
    for label, spec in specs:
        for eps in grid:
            est = (
                speed_displacement(spec, eps, D=args.displacement)
                if args.method == "td"
                else front_arrival_speed(spec, eps)
            )
            rows.append(
                {
                    "epsilon": repr(eps),
                    "dv": spec.dv,
                    "dc": spec.dc,
                    "w": spec.w,
                    "speed": repr(est.v),
                    "iterations": est.iterations,
                    "feasible": est.feasible,
                    "label": label,
                }
            )
            logger.info(
                "%s eps=%.4f speed=%.5f feasible=%s", label, eps, est.v, est.feasible
            )
    out = Path(args.out)
    write_csv(out, SPEED_CSV_COLUMNS, rows)
    series = {
        label: {"dv": s.dv, "dc": s.dc, "w": s.w, "nu": list(s.profile.nu)}
        for label, s in specs
    }
    atomic_write_text(out.with_suffix(".series.json"), json.dumps(series, indent=2) + "\n")
    write_manifest(out, "speed", args, seed=None)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_optimize(args) -> int:
    seed = resolve_seed(args)
    config = OptimizerConfig(
        w=args.w,
        epsilon=args.epsilon,
        dv_set=args.dv,
        cost_kind=args.cost,
        population_multiplier=args.population_multiplier,
        generations=args.generations,
        crossover_prob=args.crossover,
        seed=seed,
        L=args.L,
    )
    try:
        report = optimize_over_degrees(config)
    except InitializationError as e:
        raise DomainError(str(e))
    best = report.winner
    out = Path(args.out)
    payload = {
        "dv": best.dv,
        "dc": best.dc,
        "nu": list(best.profile.nu),
        "cost": best.cost,
        "speed": best.speed,
        "epsilon": best.epsilon,
        "seed": seed,
    }
    atomic_write_text(out, json.dumps(payload, indent=2) + "\n")
    trace_path = out.with_suffix(".trace.csv")
    write_csv(
        trace_path,
        ["generation", "best_cost"],
        [
            {"generation": g, "best_cost": repr(c)}
            for g, c in enumerate(best.trace)
        ],
    )
    write_manifest(out, "optimize", args, seed=seed)
    print(
        f"best dv={best.dv} cost={best.cost:.4f} speed={best.speed:.5f} "
        f"nu={[round(v, 5) for v in best.profile.nu]}"
    )
    return 0


def cmd_construct(args) -> int:
    seed = resolve_seed(args)
    spec = _load_ensemble(args.ensemble)
    graph = sample_code(spec, seed)
    out = Path(args.out)
    collapsed = export_alist(graph, out)
    write_manifest(out, "construct", args, seed=seed)
    print(f"wrote {graph.n} x {graph.num_cns} code to {out}")
    if args.stats:
        degs = graph.cn_degrees()
        print(f"edges={graph.num_edges} multi_edges={graph.multi_edge_count()}")
        print(f"collapsed_in_export={collapsed}")
        print(f"cn_degree_min={degs.min()} cn_degree_max={degs.max()}")
        print(f"unconnected_cns={(degs == 0).sum()}")
        print(f"realized_rate={realized_rate(graph):.5f}")
    return 0


def cmd_simulate(args) -> int:
    seed = resolve_seed(args)
    spec = _load_ensemble(args.ensemble)
    if args.setup.upper() in ("A", "B"):
        setup = DecoderSetup.from_label(args.setup, spec.w)
    else:
        wd, iters = (int(t) for t in args.setup.split(":"))
        setup = DecoderSetup(window=wd, iterations=iters)
    if args.channel == "bec":
        channels = [ChannelModel.bec(e) for e in args.grid]
    else:
        rate = design_rate(spec).design_rate
        channels = [ChannelModel.biawgn_ebn0(db, rate) for db in args.grid]
    reports = run_sweep(
        spec, channels, setup, frames=args.frames, seed=seed,
        min_frame_errors=args.min_frame_errors,
    )
    rows = []
    for rep in reports:
        lo, hi = rep.fer_ci
        rows.append(
            {
                "param": repr(rep.param),
                "frames": rep.frames,
                "frame_errors": rep.frame_errors,
                "bit_errors": rep.bit_errors,
                "erasures": rep.erasures,
                "BER": repr(rep.ber),
                "FER": repr(rep.fer),
                "ci_low": repr(lo),
                "ci_high": repr(hi),
            }
        )
        logger.info(
            "param=%.4f frames=%d FER=%.3e BER=%.3e",
            rep.param, rep.frames, rep.fer, rep.ber,
        )
        if rep.syndrome_failures:
            raise DomainError(
                f"{rep.syndrome_failures} fully-resolved frames violated parity "
                f"checks at param={rep.param}"
            )
    out = Path(args.out)
    write_csv(out, SIM_CSV_COLUMNS, rows)
    write_manifest(out, "simulate", args, seed=seed)
    print(f"wrote {len(rows)} grid points to {out}")
    return 0


def cmd_fixtures(args) -> int:
    rows = load_fixtures()
    if args.check:
        failures = check_fixtures()
        for f in failures:
            print(f"FAIL {f}")
        if failures:
            return 1
        print(f"ok: all {len(rows)} reference rates reproduce to 1e-5")
        return 0
    if args.emit_dir:
        out_dir = Path(args.emit_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for row in rows:
            name = row.label.replace(",", "").replace("_", "").lower()
            save_spec(row.spec(L=args.L), out_dir / f"{name}.json")
        print(f"wrote {len(rows)} ensemble files to {out_dir}")
        return 0
    for row in rows:
        eps = "---" if row.epsilon is None else f"{row.epsilon:.2f}"
        print(
            f"{row.label:8s} w={row.w} dv={row.dv} eps={eps} rate={row.rate:.5f} "
            f"nu={[round(v, 5) for v in row.nu]}"
        )
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scwave",
        description="Non-uniformly coupled SC-LDPC ensembles: analysis, "
        "optimization, construction and simulation.",
    )
    p.add_argument("--version", action="version", version=f"scwave {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def ensemble_arg(sp):
        sp.add_argument("--ensemble", required=True, help="ensemble JSON file")

    sp = sub.add_parser("rate", help="print the design rate of an ensemble")
    ensemble_arg(sp)
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("de", help="run density evolution at one channel parameter")
    ensemble_arg(sp)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    sp.add_argument("--dump-profiles", metavar="CSV", help="write the full t,z,x history")
    sp.set_defaults(func=cmd_de)

    sp = sub.add_parser("threshold", help="bisect the decoding threshold")
    ensemble_arg(sp)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("speed", help="wave-speed sweep over channel parameters")
    sp.add_argument("--ensemble", action="append", help="ensemble JSON (repeatable)")
    sp.add_argument(
        "--uniform", action="append", metavar="DV:W",
        help="add a uniform reference series (repeatable)",
    )
    sp.add_argument("--epsilon-grid", type=parse_grid, required=True, metavar="A:B:STEP")
    sp.add_argument("--method", choices=("td", "t20"), default="t20")
    sp.add_argument("--displacement", type=int, default=20, help="D for method td")
    sp.add_argument("--L", type=int, default=100, help="chain length for --uniform series")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_speed)

    sp = sub.add_parser("optimize", help="search smoothing profiles for speed")
    sp.add_argument("--w", type=int, required=True)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--dv", type=parse_dv_set, default=(3, 4, 5, 6, 7, 8, 9, 10),
                    metavar="SET", help="degrees to try: '4', '3,4,5' or '3..10'")
    sp.add_argument("--cost", choices=("c1", "c2"), default="c2")
    sp.add_argument("--generations", type=int, default=1000)
    sp.add_argument("--population-multiplier", type=int, default=100)
    sp.add_argument("--crossover", type=float, default=0.33)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--L", type=int, default=100)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("construct", help="sample a finite-length code, write alist")
    ensemble_arg(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.add_argument("--stats", action="store_true")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("simulate", help="windowed-decoding Monte-Carlo sweep")
    ensemble_arg(sp)
    sp.add_argument("--channel", choices=("bec", "biawgn"), default="bec")
    sp.add_argument("--grid", type=parse_grid, required=True, metavar="A:B:STEP",
                    help="erasure probabilities, or Eb/N0 in dB for biawgn")
    sp.add_argument("--setup", default="A", metavar="A|B|WD:I")
    sp.add_argument("--frames", type=int, default=2000)
    sp.add_argument("--min-frame-errors", type=int, default=None,
                    help="stop a grid point early once this many frames failed")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fixtures", help="list or verify the bundled reference codes")
    sp.add_argument("--check", action="store_true", help="verify published rates")
    sp.add_argument("--emit-dir", metavar="DIR", help="write each row as an ensemble JSON")
    sp.add_argument("--L", type=int, default=100, help="chain length for --emit-dir")
    sp.set_defaults(func=cmd_fixtures)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (EnsembleError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
