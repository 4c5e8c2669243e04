"""Command-line interface: ``cfe run``, ``cfe converge`` and ``cfe verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 solver error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import CFEError, ConfigError
from .integrator import run
from .output import (
    build_manifest,
    utc_now,
    write_csv,
    write_ledger,
    write_manifest,
    write_snapshots,
)
from .study import CONVERGENCE_COLUMNS, check_trend, sweep
from .verify import format_table, load_cases, run_checks

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

log = logging.getLogger("cfe")


def _error(message: str) -> None:
    print(f"cfe: error: {message}", file=sys.stderr)


def _out_dir(arg, cfg) -> Path:
    if arg is not None:
        return Path(arg)
    if cfg.output_dir:
        path = Path(cfg.output_dir)
        return path if path.is_absolute() else cfg.base_dir / path
    raise ConfigError("no output directory: pass --out or set output_dir in the config")


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        out = _out_dir(args.out, cfg)
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_USAGE
    started = utc_now()
    try:
        traj = run(cfg.initial_for(cfg.grid), cfg.grid, cfg.kernel, cfg.scheme, cfg.step, cfg.T,
                   initial_name=cfg.initial_name)
    except CFEError as exc:
        _error(f"solver failed: {type(exc).__name__}: {exc}")
        return EXIT_SOLVER
    out.mkdir(parents=True, exist_ok=True)
    write_ledger(out / "ledger.csv", traj.ledger)
    write_snapshots(out / "snapshots", traj)
    write_manifest(out / "manifest.json", build_manifest(cfg.text, cfg.raw, traj, started, utc_now()))
    led = traj.ledger
    print(f"t={traj.final_time:g} M0={led.M0[-1]:.6g} M1={led.M1[-1]:.6g} "
          f"loss={led.accumulated_loss[-1]:.3e} clipped={led.clipped_mass[-1]:.3e} -> {out}")
    return EXIT_OK


def _parse_R(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--R expects comma-separated numbers, got {text!r}") from None


def cmd_converge(args) -> int:
    try:
        cfg = load_config(args.config)
        out = _out_dir(args.out, cfg)
        R_list = _parse_R(args.R)
        rows = sweep(cfg, R_list)
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_USAGE
    except CFEError as exc:
        _error(f"solver failed: {type(exc).__name__}: {exc}")
        return EXIT_SOLVER
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, (r.as_csv() for r in rows))
    for r in rows:
        print(f"R={r.R:g} cells={r.cells} loss_fraction={r.loss_fraction:.3e} {r.note}".rstrip())
    if not cfg.kernel.linearly_bounded:
        return EXIT_OK
    failures = check_trend(rows)
    for f in failures:
        _error(f)
    return EXIT_FAILED if failures else EXIT_OK


def cmd_verify(args) -> int:
    try:
        names = load_cases(args.cases) if args.cases else None
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_USAGE
    results = run_checks(names)
    print(format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        _error("failed checks: " + ", ".join(failed))
        return EXIT_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfe", description="Truncated coagulation-fragmentation solver.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one configuration and write CSV outputs")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="sweep the truncation size R at fixed resolution")
    p.add_argument("--config", required=True)
    p.add_argument("--R", required=True, help="comma-separated increasing domain sizes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="run the self-verification suite")
    p.add_argument("--cases", help='JSON file {"checks": [...]} selecting checks')
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
