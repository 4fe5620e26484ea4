"""Command line entry point.

``qbgk run`` integrates a preset or configured scenario and writes the
diagnostics series CSV, a spatial profile CSV for runs with a spatial
mesh, and the standard figures into the output directory.  Exit codes:
0 success, 2 configuration error, 3 solver failure, 4 invariant
violation (under ``--strict`` or ``--check``).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import SimConfig, parse_config
from .diagnostics import DiagnosticsCollector, spatial_profile
from .errors import (ConfigurationError, DiagnosticError, InvariantViolation,
                     QbgkError)
from .integrators import run
from .report import (render_figures, render_profile_figure, write_profile,
                     write_series)
from .scenarios import build_setup, scenario_names, scenario_preset

__all__ = ["main", "console_main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbgk",
        description="Multi-species quantum BGK relaxation and transport.")
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser(
        "run", help="integrate a scenario and write CSV output",
        description="Known scenarios: " + ", ".join(scenario_names()))
    source = runp.add_mutually_exclusive_group()
    source.add_argument("--scenario", help="preset scenario name")
    source.add_argument("--config", help="configuration file path")
    runp.add_argument("--output", help="output directory (default: preset)")
    runp.add_argument("--order", type=int, choices=(1, 2),
                      help="time and flux order (overrides both)")
    runp.add_argument("--dt", type=float, help="time step override")
    runp.add_argument("--t-end", type=float, dest="t_end",
                      help="final time override")
    runp.add_argument("--grid", type=int,
                      help="momentum grid intervals per axis")
    runp.add_argument("--strict", action="store_true",
                      help="abort on any invariant violation")
    runp.add_argument("--check", action="store_true",
                      help="run a shortened invariant suite only")
    return parser


def _load_config(args) -> SimConfig:
    if args.config is not None:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read {path}: {exc}") from exc
        config = parse_config(text)
    elif args.scenario is not None:
        config = scenario_preset(args.scenario)
    else:
        raise ConfigurationError(
            "scenario required: pass --scenario NAME or --config FILE")
    if args.output is not None:
        config = replace(config, output_dir=args.output)
    if args.order is not None:
        config = replace(config, scheme_order=args.order,
                         flux_order=args.order)
    if args.dt is not None:
        config = replace(config, dt=args.dt)
    if args.t_end is not None:
        config = replace(config, t_end=args.t_end)
    if args.grid is not None:
        config = replace(config, grid_intervals=args.grid)
    return config.validate()


def _run_config(config: SimConfig, strict: bool):
    setup = build_setup(config)
    collector = DiagnosticsCollector(
        setup.mixture,
        dx=1.0 if config.domain is None else config.domain.dx)
    result = run(setup.mixture, setup.fields, dt=config.dt,
                 t_end=config.t_end,
                 scheme="euler" if config.scheme_order == 1 else "ars222",
                 domain=config.domain, limited=config.flux_order == 2,
                 stride=config.stride, observer=collector, strict=strict,
                 grad_tol=config.grad_tol)
    return setup, collector, result


def _write_outputs(config, setup, collector, result) -> None:
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = [spec.name for spec in config.species]
    comment = (f"scenario={config.scenario} units={config.units} "
               f"species={','.join(names)} dt={config.dt:g} "
               f"t_end={config.t_end:g}")
    write_series(collector.records, outdir / "series.csv", comment=comment)
    render_figures(collector.records, outdir, names=names,
                   units=config.units)
    if config.domain is not None:
        profile = spatial_profile(result.fields, setup.mixture)
        write_profile(profile, config.domain, outdir / "profile.csv",
                      comment=comment)
        render_profile_figure(profile, config.domain, outdir, names=names)


def _run_checks(config: SimConfig) -> int:
    """Shortened strict run plus invariant verdicts; 0 if all pass."""
    horizon = min(config.t_end, 25 * config.dt)
    check_cfg = replace(config, t_end=horizon, stride=1)
    failures = 0

    def verdict(label: str, ok: bool, detail: str) -> None:
        nonlocal failures
        failures += 0 if ok else 1
        print(f"check {'PASS' if ok else 'FAIL'}: {label} ({detail})")

    try:
        setup, collector, result = _run_config(check_cfg, strict=True)
    except QbgkError as exc:
        print(f"check FAIL: run aborted ({exc})", file=sys.stderr)
        return EXIT_INVARIANT
    verdict("conservation", result.max_drift < 1e-9,
            f"max relative drift {result.max_drift:.3e}")
    verdict("positivity", result.positivity_violations == 0,
            f"{result.positivity_violations} violations")
    entropy = np.array([rec.entropy for rec in collector.records])
    slack = 1e-12 * max(1.0, abs(float(entropy[0])))
    verdict("entropy decay", bool(np.all(np.diff(entropy) <= slack)),
            f"H: {entropy[0]:.6g} -> {entropy[-1]:.6g}")
    gaps = [np.linalg.norm(rec.species[k].velocity
                           - rec.species[j].velocity)
            for rec in collector.records
            for k in range(len(rec.species))
            for j in range(k + 1, len(rec.species))
            if setup.mixture.nu[k, j] > 0.0]
    if gaps:
        head = max(gaps[:len(gaps) // 2 or 1])
        tail = max(gaps[len(gaps) // 2:])
        verdict("velocity alignment", tail <= head + 1e-12,
                f"max pair gap {head:.3e} -> {tail:.3e}")
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if args.command != "run":
        parser.print_help()
        return EXIT_CONFIG

    try:
        config = _load_config(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.check:
        return _run_checks(config)

    try:
        setup, collector, result = _run_config(config, strict=args.strict)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (QbgkError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    try:
        _write_outputs(config, setup, collector, result)
    except (OSError, DiagnosticError, QbgkError) as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    if result.positivity_violations:
        print(f"warning: {result.positivity_violations} positivity "
              "violations (rerun with --strict to abort on them)",
              file=sys.stderr)
    print(f"{config.scenario}: {result.steps} steps to "
          f"t = {result.final_time:g}, max conservation drift "
          f"{result.max_drift:.3e}, output in {config.output_dir}")
    return EXIT_OK


def console_main() -> None:
    sys.exit(main(sys.argv[1:]))
