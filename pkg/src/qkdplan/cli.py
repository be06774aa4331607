"""Command-line entry point: ``qkdplan {plan,sweep,compare,validate}``.

Exit status: 0 on success, 1 when no feasible plan exists (or a validated
plan has violations), 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from qkdplan.costs import load_catalog
from qkdplan.errors import InfeasibleError, InputError
from qkdplan.experiments import (PAIRS_RANDOM, PAIRS_SINGLE_HOP, ExperimentConfig, build_instance,
                                 emit_csv, emit_plot, load_pairs, render_csv,
                                 run_baseline_comparison, run_reservation_sweep)
from qkdplan.plan_io import load_plan, plan_to_json, report_to_json
from qkdplan.planner import brute_force_oracle, solve_evf, solve_random, solve_sp_exact
from qkdplan.routing import CapacityConfig, validate_plan
from qkdplan.topology import build_usnet, load_topology

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from exc


def _topology(arg: str):
    return build_usnet() if arg == "usnet" else load_topology(_read(arg, "topology"))


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", default="usnet", help="JSON topology file or 'usnet'")
    p.add_argument("--apps", type=int, default=200, help="number of applications")
    p.add_argument("--pairs", default=PAIRS_SINGLE_HOP,
                   help="'random', 'single-hop' or a JSON file of [src, dst] pairs")
    p.add_argument("--scenarios", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="Poisson mean (default: scenarios / 3)")
    p.add_argument("--uav-outage", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity", type=int, default=80, help="wavelengths per fiber")
    p.add_argument("--k-paths", type=int, default=3)
    p.add_argument("--catalog", default=None, help="JSON price overrides")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdplan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve one instance and print its cost breakdown")
    _common(p)
    p.add_argument("--method", choices=["sp", "evf", "random", "oracle"], default="sp")
    p.add_argument("--out", help="write the serialized plan (JSON) here")

    p = sub.add_parser("sweep", help="cost structure versus a common reservation level")
    _common(p)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", help="SVG output path")

    p = sub.add_parser("compare", help="SP versus EVF and RANDOM baselines")
    _common(p)
    p.add_argument("--app-counts", default="50,100,150,200")
    p.add_argument("--random-seeds", type=int, default=20)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", help="SVG output path")

    p = sub.add_parser("validate", help="check a serialized plan against the routing constraints")
    p.add_argument("plan", help="plan JSON written by 'plan --out'")
    p.add_argument("--topology", default="usnet")
    p.add_argument("--capacity", type=int, default=None,
                   help="wavelengths per fiber (default: value stored in the plan, else 80)")
    return parser


def config_from_args(args) -> ExperimentConfig:
    topo = _topology(args.topology)
    pairs = None
    pairing = args.pairs
    if args.pairs not in (PAIRS_RANDOM, PAIRS_SINGLE_HOP):
        pairs = load_pairs(_read(args.pairs, "pairs file"))
        pairing = f"file:{args.pairs}"
    catalog_kw = {}
    if args.catalog:
        catalog_kw["catalog"] = load_catalog(_read(args.catalog, "catalog"))
    n_apps = args.apps if pairs is None else min(args.apps, len(pairs))
    return ExperimentConfig(
        topology=topo, topology_source=args.topology, n_applications=n_apps,
        n_scenarios=args.scenarios, lam=args.lam, uav_outage=args.uav_outage, seed=args.seed,
        capacity=args.capacity, k_paths=args.k_paths, pairing=pairing, pairs=pairs, **catalog_kw)


def _cmd_plan(args) -> int:
    config = config_from_args(args)
    instance = build_instance(config)
    solver = {"sp": solve_sp_exact, "evf": solve_evf, "oracle": brute_force_oracle,
              "random": lambda inst: solve_random(inst, args.seed)}[args.method]
    ev = solver(instance)
    c = ev.cost
    counts: dict[int, int] = {}
    for r in ev.reservations.values():
        counts[r] = counts.get(r, 0) + 1
    print(f"method            {ev.plan.method}")
    print(f"applications      {len(instance.applications)} ({config.pairing})")
    print(f"reservations      " + ", ".join(f"{r}x{n}" for r, n in sorted(counts.items())))
    print(f"phase1            {c.phase1:.6f}")
    print(f"phase2_expected   {c.phase2_expected:.6f}")
    print(f"overall           {c.overall:.6f}")
    if args.out:
        text = plan_to_json(ev, instance.applications, config.capacity, config.metadata())
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _emit(rows, args) -> None:
    if args.out:
        emit_csv(rows, args.out)
    else:
        sys.stdout.write(render_csv(rows))
    if args.plot:
        emit_plot(rows, args.plot)


def _cmd_sweep(args) -> int:
    result = run_reservation_sweep(config_from_args(args))
    _emit(result.rows, args)
    common = result.sp_common_reservation
    print(f"argmin forced reservation: {result.argmin}; SP reservations: "
          f"{common if common is not None else 'mixed'}", file=sys.stderr)
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        counts = [int(x) for x in args.app_counts.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad --app-counts: {args.app_counts}") from exc
    result = run_baseline_comparison(config_from_args(args), counts, args.random_seeds)
    _emit(result.rows, args)
    print(json.dumps(result.metadata), file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args) -> int:
    plan, apps, stored_capacity = load_plan(_read(args.plan, "plan"))
    w = args.capacity or stored_capacity or 80
    violations = validate_plan(plan, _topology(args.topology), CapacityConfig(int(w)), apps)
    print(report_to_json(violations))
    return EXIT_INFEASIBLE if violations else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"plan": _cmd_plan, "sweep": _cmd_sweep, "compare": _cmd_compare,
               "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
