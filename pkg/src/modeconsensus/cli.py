"""``modeconsensus`` command line: ``run``, ``bounds`` and ``validate`` subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .algorithms import kstar, oracle_mode
from .bounds import PRESETS, bound_report
from .errors import ConfigError, ModeConsensusError, NumericalRefusal
from .network import check_dwell
from .scenario import build_scenario, load_config, required_dwell, run

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modeconsensus", description="Distributed mode-estimation simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run a scenario and write its artifacts"),
                       ("bounds", "print the bound report for a scenario"),
                       ("validate", "check a scenario config and its dwell times")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="scenario YAML file")
        s.add_argument("--preset", choices=PRESETS, help="override the gain preset")
        s.add_argument("--seed", type=int, help="override the scenario seed")
        if name == "run":
            s.add_argument("--out-dir", help="output directory (default: output.dir from the config)")
            s.add_argument("--dt", type=float, help="fixed step for sign-coupled runs")
            s.add_argument("--horizon", type=float, help="simulated horizon in seconds")
    return p


def _apply_overrides(cfg, args):
    if args.preset is not None:
        cfg = replace(cfg, gains=replace(cfg.gains, preset=args.preset))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    integ = cfg.integrator
    if getattr(args, "dt", None) is not None:
        integ = replace(integ, dt=args.dt)
    if getattr(args, "horizon", None) is not None:
        integ = replace(integ, horizon=args.horizon)
    return replace(cfg, integrator=integ)


def _cmd_run(cfg, args) -> int:
    summary = run(cfg, args.out_dir)
    for v in summary.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.name}" + (f": {v.detail}" if v.detail and not v.passed else ""))
    print(f"mode={summary.mode!r} K_trace={summary.K_trace} states={summary.state_var_count} "
          f"elapsed={summary.elapsed:.6g}s wall={summary.wall_clock:.2f}s")
    for note in summary.notes + summary.warnings:
        print(f"note: {note}")
    return EXIT_OK if summary.passed else EXIT_VERDICT


def _cmd_bounds(cfg, args) -> int:
    scenario, notes = build_scenario(cfg)
    labels = scenario.labels(0)
    _, best = oracle_mode(labels)
    report = bound_report(scenario.gains, scenario.n_bar, scenario.omega_size,
                          segment=scenario.timeline.segments[0], k_star=kstar(best, len(labels)))
    data = report.to_dict()
    data["gains"] = scenario.gains.to_dict()
    data["notes"] = notes
    print(json.dumps(data, indent=2))
    return EXIT_OK


def _cmd_validate(cfg, args) -> int:
    scenario, notes = build_scenario(cfg)
    tl = scenario.timeline
    dwell = required_dwell(cfg, scenario.gains, scenario.n_bar, scenario.omega_size)
    rep = check_dwell(tl, dwell, include_start=True)
    print(f"config ok: {len(tl.segments)} segment(s), N={tl.segments[0].n}, n_bar={tl.n_bar}, "
          f"|Omega|={scenario.omega_size}")
    for note in notes:
        print(f"note: {note}")
    if not tl.events:
        return EXIT_OK
    print(f"required dwell {dwell:.6g} s")
    for g in rep.gaps:
        print(f"{'PASS' if g.ok else 'FAIL'} gap {g.earlier:g} -> {g.later:g}: {g.gap:.6g} s")
    return EXIT_OK if rep.passed else EXIT_VERDICT


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        handler = {"run": _cmd_run, "bounds": _cmd_bounds, "validate": _cmd_validate}[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalRefusal as exc:
        print(f"numerical refusal: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ModeConsensusError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
