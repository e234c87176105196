"""Command-line entry point: ``kpzlab <command> ...``.

Exit codes: 0 success / all checks PASS, 1 some check FAIL,
2 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ConfigError, LabError
from ..grid import RngKey, load_grid_function, window_grid
from ..landscape import sample_landscape_slice
from ..semigroup import Kind, evolve, make_initial
from .config import SCENARIOS, build_config, load_config_file
from .report import load_report, summary_table
from .scenarios import DESCRIPTIONS, run_scenario


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--n", type=float, default=None, help="prelimit scale n")
    p.add_argument("--grid-step", type=float, default=None,
                   help="LPP grid step (default 1/(5n))")
    p.add_argument("--out", type=Path, default=None, help="output directory")


def _window(p: argparse.ArgumentParser, prefix: str, lo: float, hi: float, step: float) -> None:
    p.add_argument(f"--{prefix}-lo", type=float, default=lo)
    p.add_argument(f"--{prefix}-hi", type=float, default=hi)
    p.add_argument(f"--{prefix}-step", type=float, default=step)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kpzlab", description="Prelimit directed landscape lab")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-landscape", help="sample one landscape slice")
    _common(p)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    _window(p, "z", -1.0, 1.0, 0.1)
    _window(p, "x", -1.0, 1.0, 0.1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("evolve", help="evolve initial data through one slice")
    _common(p)
    p.add_argument("--initial", choices=("narrow_wedge", "flat", "brownian", "power", "file"),
                   default="flat")
    p.add_argument("--initial-file", type=Path, help="CSV with columns x,value ('-inf' allowed)")
    p.add_argument("--x0", type=float, default=0.0, help="narrow-wedge apex")
    p.add_argument("--zeta", type=float, default=0.5)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    _window(p, "z", -2.0, 2.0, 0.05)
    _window(p, "x", -1.0, 1.0, 0.05)

    p = sub.add_parser("experiment", help="run a scenario and write a report")
    p.add_argument("scenario", choices=SCENARIOS)
    _common(p)
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--halfwidth", type=float, default=None, help="initial-data half-width")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="sample artifact format")
    p.add_argument("--plots", action="store_true", help="also write SVG plots")

    p = sub.add_parser("report", help="summarize a report directory")
    p.add_argument("path", type=Path)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")

    sub.add_parser("list-scenarios", help="list experiment scenarios")
    return ap


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")
    print(out / name)


def _cmd_sample(args) -> int:
    zg = window_grid(args.z_lo, args.z_hi, args.z_step)
    xg = window_grid(args.x_lo, args.x_hi, args.x_step)
    sl = sample_landscape_slice(args.n or 50.0, args.s, args.t, zg, xg,
                                RngKey(args.seed if args.seed is not None else 7),
                                args.grid_step)
    text = sl.to_csv() if args.format == "csv" else sl.to_json()
    _emit(text, args.out, f"slice.{args.format}")
    return 0


def _cmd_evolve(args) -> int:
    zg = window_grid(args.z_lo, args.z_hi, args.z_step)
    xg = window_grid(args.x_lo, args.x_hi, args.x_step)
    key = RngKey(args.seed if args.seed is not None else 7)
    if args.initial == "file":
        if args.initial_file is None:
            raise ConfigError("--initial file needs --initial-file")
        f = load_grid_function(args.initial_file)
        zg = f.grid
        init = make_initial(Kind.CUSTOM, zg, values=f)
    else:
        init = make_initial(args.initial, zg, x0=args.x0, zeta=args.zeta, drift=args.drift,
                            key=key.with_substream(1))
    sl = sample_landscape_slice(args.n or 50.0, args.s, args.t, zg, xg, key, args.grid_step)
    prof = evolve(init, sl)
    _emit(prof.to_csv(), args.out, "evolved.csv")
    return 0


def _cmd_experiment(args) -> int:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {"master_seed": args.seed, "n": args.n, "grid_step": args.grid_step,
                 "z_halfwidth": args.halfwidth, "replications": args.replications,
                 "sample_format": args.format, "plots": True if args.plots else None,
                 "out_dir": str(args.out) if args.out else None}
    cfg = build_config(args.scenario, file_values, overrides)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    report = run_scenario(cfg, args.threads)
    out = Path(cfg.out_dir or f"runs/{cfg.scenario}")
    report.write(out, threads=args.threads)
    sys.stdout.write(summary_table(report.to_dict()))
    print(f"wrote {out}")
    return 0 if report.passed else 1


def _cmd_report(args) -> int:
    rep = load_report(args.path)
    sys.stdout.write(summary_table(rep, args.format))
    return 0 if rep["verdict"] == "PASS" else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name in SCENARIOS:
                print(f"{name:18s} {DESCRIPTIONS[name]}")
            return 0
        if args.command == "sample-landscape":
            return _cmd_sample(args)
        if args.command == "evolve":
            return _cmd_evolve(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        return _cmd_report(args)
    except (LabError, OSError, json.JSONDecodeError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
