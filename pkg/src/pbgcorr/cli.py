"""Command-line entry point.

Exit status: 0 on success, 1 for configuration or input errors, 2 for
numerical failures (a ``diagnostic.txt`` is written to the output directory).
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import replace
from pathlib import Path

from . import scenarios, svg
from .config import RunConfig, dump_config, load_config
from .errors import ConfigError, PBGError, PlotError
from .tables import atomic_write_text

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--stride", type=int, help="evaluate correlations every n-th time step")
    common.add_argument("--oracle-modes", type=int, help="number of bath modes for verify")

    p = argparse.ArgumentParser(prog="pbgcorr", description="Band-gap emitter dynamics and correlations")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="excited-state amplitude only")
    sub.add_parser("correlations", parents=[common], help="amplitude plus QD/EoF/MI time series")
    sub.add_parser("bound-state", parents=[common], help="bound-state energy, weight and y(E)-E curve")
    pre = sub.add_parser("preset", parents=[common], help="figure presets")
    pre.add_argument("name", help="|".join(scenarios.PRESETS))
    sw = sub.add_parser("sweep", parents=[common], help="one run per parameter value")
    sw.add_argument("--axis", required=True, help="omega_0, eta or alpha")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--workers", type=int, default=None, help="parallel runs (default: CPU count)")
    sw.add_argument("--with-correlations", action="store_true", help="also compute correlations")
    sub.add_parser("verify", parents=[common], help="compare against exact diagonalisation")
    pl = sub.add_parser("plot", help="render a CSV table as SVG")
    pl.add_argument("csv", type=Path)
    pl.add_argument("--kind", default="auto", help="auto|" + "|".join(svg.PLOT_KINDS))
    pl.add_argument("--out", type=Path, help="SVG path (default: CSV path with .svg)")
    pl.add_argument("--title", default="")
    return p


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.out is not None:
        cfg = cfg.replace(out_dir=str(args.out))
    if args.stride is not None:
        if args.stride < 1:
            raise ConfigError("--stride must be >= 1")
        cfg = cfg.replace(correlations=replace(cfg.correlations, stride=args.stride))
    if args.oracle_modes is not None:
        if args.oracle_modes < 1:
            raise ConfigError("--oracle-modes must be positive")
        cfg = cfg.replace(oracle_modes=args.oracle_modes)
    return cfg


def _parse_values(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be comma-separated numbers: {exc}") from None


def _dispatch(args, cfg: RunConfig) -> None:
    out = Path(cfg.out_dir)
    cmd = args.command
    if cmd == "solve":
        res = scenarios.run_solve(cfg, out)
        print(f"final |b|^2 = {res.trajectory.population[-1]:.6g}; wrote {out}/trajectory.csv")
    elif cmd == "correlations":
        scenarios.run_correlations(cfg, out)
        print(f"wrote {out}/correlations.csv")
    elif cmd == "bound-state":
        rows = scenarios.run_bound_state(cfg, out)
        for w0, r in rows.items():
            print(f"omega_0={w0}: exists={r['exists']} E1={r['E1']} Z={r['Z']}")
    elif cmd == "preset":
        summary = scenarios.run_preset(args.name, cfg, out)
        print(json.dumps(summary, indent=2, sort_keys=True))
    elif cmd == "sweep":
        rows = scenarios.run_sweep(cfg, args.axis, _parse_values(args.values), out, args.workers,
                                   True if args.with_correlations else None)
        failed = [r for r in rows if r["status"] != "ok"]
        print(f"{len(rows) - len(failed)} runs ok, {len(failed)} failed; summary in {out}")
    elif cmd == "verify":
        summary = scenarios.run_verify(cfg, out)
        print(json.dumps(summary, indent=2, sort_keys=True))


def _diagnose(out: Path, exc: BaseException, cfg: RunConfig | None) -> Path:
    text = [f"{type(exc).__name__}: {exc}", ""]
    if cfg is not None:
        text += ["resolved configuration:", dump_config(cfg)]
    text += ["traceback:", "".join(traceback.format_exception(type(exc), exc, exc.__traceback__))]
    return atomic_write_text(Path(out) / "diagnostic.txt", "\n".join(text))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "plot":
        target = args.out or args.csv.with_suffix(".svg")
        try:
            svg.emit_plot(args.csv, target, args.kind, args.title)
        except (PlotError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"wrote {target}")
        return EXIT_OK

    cfg = None
    try:
        cfg = _resolve(args)
        _dispatch(args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PBGError, ArithmeticError, ValueError) as exc:
        where = _diagnose(Path(cfg.out_dir if cfg else "."), exc, cfg)
        print(f"numerical failure: {exc} (details in {where})", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
