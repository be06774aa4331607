"""Reservation sweep and baseline comparison harness.

Reproduces the cost-structure curve (phase-1, expected phase-2 and overall
cost versus a common reservation level) and the SP / EVF / RANDOM cost
comparison over growing numbers of applications.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from qkdplan.costs import DeviceCatalog, RangeLimits
from qkdplan.errors import InputError
from qkdplan.planner import (PlanningInstance, evaluate_plan, forced_plan, solve_evf,
                             solve_random, solve_sp_exact)
from qkdplan.rng import SplitMix64
from qkdplan.routing import DEFAULT_K_PATHS, DEFAULT_WAVELENGTHS, Application, CapacityConfig
from qkdplan.scenarios import build_scenarios
from qkdplan.topology import Topology, build_usnet

PAIRS_RANDOM = "random"
PAIRS_SINGLE_HOP = "single-hop"

# offsets keep the pairing, UAV-weather and baseline streams independent
_PAIR_STREAM = 0x5A17
_RANDOM_STREAM = 0xBA5E


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology = field(default_factory=build_usnet)
    topology_source: str = "usnet"
    n_applications: int = 200
    n_scenarios: int = 10
    lam: float | None = None
    uav_outage: float = 0.0
    seed: int = 0
    capacity: int = DEFAULT_WAVELENGTHS
    k_paths: int = DEFAULT_K_PATHS
    pairing: str = PAIRS_SINGLE_HOP
    # explicit (src, dst) pairs when pairing comes from a file
    pairs: tuple[tuple[int, int], ...] | None = None
    catalog: DeviceCatalog = field(default_factory=DeviceCatalog)
    limits: RangeLimits = field(default_factory=RangeLimits)

    @property
    def effective_lambda(self) -> float:
        return self.n_scenarios / 3 if self.lam is None else self.lam

    def metadata(self) -> dict:
        return {"topology": self.topology_source, "n_applications": self.n_applications,
                "n_scenarios": self.n_scenarios, "lambda": self.effective_lambda,
                "uav_outage": self.uav_outage, "seed": self.seed, "capacity": self.capacity,
                "k_paths": self.k_paths, "pairing": self.pairing}


def sample_applications(topo: Topology, n: int, mode: str, seed: int) -> list[Application]:
    """Draw ``n`` applications with a seeded SplitMix64 stream.

    ``random`` picks distinct unordered node pairs; ``single-hop`` puts each
    application on a uniformly chosen fiber edge (edges may repeat).
    Draws are sequential, so a smaller ``n`` yields a prefix of a larger one.
    """
    if n < 1:
        raise InputError("need at least one application")
    rng = SplitMix64(seed + _PAIR_STREAM)
    if mode == PAIRS_RANDOM:
        ids = topo.node_ids
        pairs = [(u, v) for i, u in enumerate(ids) for v in ids[i + 1:]]
        if n > len(pairs):
            raise InputError(f"only {len(pairs)} distinct node pairs exist, asked for {n}")
        chosen = rng.sample(pairs, n)
    elif mode == PAIRS_SINGLE_HOP:
        edges = topo.edges
        chosen = [edges[rng.randint(0, len(edges) - 1)] for _ in range(n)]
        chosen = [(e.u, e.v) for e in chosen]
    else:
        raise InputError(f"unknown pairing mode {mode!r}")
    return [Application(i, u, v) for i, (u, v) in enumerate(chosen)]


def load_pairs(text: str) -> tuple[tuple[int, int], ...]:
    """Parse a JSON array of ``[src, dst]`` pairs or ``{"src", "dst"}`` objects."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"pairs file is not valid JSON: {exc}") from exc
    if not isinstance(doc, list) or not doc:
        raise InputError("pairs file must be a non-empty array")
    out = []
    for item in doc:
        if isinstance(item, dict):
            item = (item.get("src"), item.get("dst"))
        if not (isinstance(item, (list, tuple)) and len(item) == 2
                and all(isinstance(x, int) and not isinstance(x, bool) for x in item)):
            raise InputError(f"bad application pair {item!r}")
        out.append((item[0], item[1]))
    return tuple(out)


def build_instance(config: ExperimentConfig, n_applications: int | None = None) -> PlanningInstance:
    n = config.n_applications if n_applications is None else n_applications
    if config.pairs is not None:
        apps = [Application(i, u, v) for i, (u, v) in enumerate(config.pairs[:n])]
    else:
        apps = sample_applications(config.topology, n, config.pairing, config.seed)
    scenarios = build_scenarios(config.n_scenarios, config.effective_lambda,
                                config.uav_outage, config.seed)
    return PlanningInstance(config.topology, tuple(apps), scenarios, config.catalog,
                            config.limits, CapacityConfig(config.capacity), config.k_paths)


# ---------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepRow:
    forced_reservation: int
    phase1: float
    phase2_expected: float

    @property
    def overall(self) -> float:
        return self.phase1 + self.phase2_expected


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    argmin: int
    sp_reservations: dict[int, int]
    metadata: dict

    @property
    def sp_common_reservation(self) -> int | None:
        values = set(self.sp_reservations.values())
        return values.pop() if len(values) == 1 else None


def run_reservation_sweep(config: ExperimentConfig, *, with_sp: bool = True) -> SweepResult:
    """Evaluate every common reservation level 0..n_scenarios on shortest routes."""
    instance = build_instance(config)
    top = instance.scenarios.n_scenarios
    rows = []
    for r in range(top + 1):
        ev = evaluate_plan(forced_plan(instance, r), instance)
        rows.append(SweepRow(r, ev.cost.phase1, ev.cost.phase2_expected))
    # ties resolve to the smaller reservation
    argmin = min(rows, key=lambda row: (row.overall, row.forced_reservation)).forced_reservation
    sp = solve_sp_exact(instance).reservations if with_sp else {}
    return SweepResult(rows, argmin, dict(sp), config.metadata())


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class CompareRow:
    n_applications: int
    sp_overall: float
    evf_overall: float
    random_overall_mean: float

    @property
    def evf_to_sp(self) -> float:
        return self.evf_overall / self.sp_overall if self.sp_overall else math.nan

    @property
    def random_to_sp(self) -> float:
        return self.random_overall_mean / self.sp_overall if self.sp_overall else math.nan


@dataclass(frozen=True)
class ComparisonResult:
    rows: list[CompareRow]
    # n_applications -> overall cost of each RANDOM run, in seed order
    random_runs: dict[int, list[float]]
    metadata: dict


def run_baseline_comparison(config: ExperimentConfig, app_counts, n_random_seeds: int) -> ComparisonResult:
    if n_random_seeds < 1:
        raise InputError("need at least one random seed")
    rows = []
    runs = {}
    for n in app_counts:
        instance = build_instance(config, n)
        sp = solve_sp_exact(instance).cost.overall
        evf = solve_evf(instance).cost.overall
        randoms = [solve_random(instance, config.seed + _RANDOM_STREAM + i).cost.overall
                   for i in range(n_random_seeds)]
        runs[n] = randoms
        rows.append(CompareRow(n, sp, evf, math.fsum(randoms) / len(randoms)))
    meta = config.metadata() | {"app_counts": list(app_counts), "random_seeds": n_random_seeds}
    return ComparisonResult(rows, runs, meta)


# ---------------------------------------------------------------- output

SWEEP_HEADER = ("forced_reservation", "phase1", "phase2_expected", "overall")
COMPARE_HEADER = ("n_applications", "sp_overall", "evf_overall", "random_overall_mean",
                  "evf_to_sp", "random_to_sp")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _csv_lines(rows) -> tuple[tuple[str, ...], list[list[str]]]:
    first = rows[0]
    if isinstance(first, SweepRow):
        body = []
        for r in rows:
            p1, p2 = _fmt(r.phase1), _fmt(r.phase2_expected)
            # overall is summed after rounding so the row adds up exactly
            body.append([str(r.forced_reservation), p1, p2, str(Decimal(p1) + Decimal(p2))])
        return SWEEP_HEADER, body
    if isinstance(first, CompareRow):
        return COMPARE_HEADER, [[str(r.n_applications), _fmt(r.sp_overall), _fmt(r.evf_overall),
                                 _fmt(r.random_overall_mean), _fmt(r.evf_to_sp),
                                 _fmt(r.random_to_sp)] for r in rows]
    raise InputError(f"cannot write rows of type {type(first).__name__}")


def render_csv(rows) -> str:
    if not rows:
        raise InputError("no rows to write")
    header, body = _csv_lines(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(body)
    return buf.getvalue()


def emit_csv(rows, path) -> None:
    text = render_csv(rows)
    try:
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def emit_plot(rows, path) -> None:
    """Line chart as a standalone SVG; each series is a ``<g id="series-...">`` group."""
    if not rows:
        raise InputError("no rows to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "qkdplan"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if isinstance(rows[0], SweepRow):
        x = [r.forced_reservation for r in rows]
        series = [("phase1", "First phase", [r.phase1 for r in rows]),
                  ("phase2", "Second phase", [r.phase2_expected for r in rows]),
                  ("overall", "Overall", [r.overall for r in rows])]
        ax.set_xlabel("Number of reserved QKD services")
        ax.set_title("Cost structure")
    elif isinstance(rows[0], CompareRow):
        x = [r.n_applications for r in rows]
        series = [("random", "QBN-Random", [r.random_overall_mean for r in rows]),
                  ("evf", "QBN-EVF", [r.evf_overall for r in rows]),
                  ("sp", "Stochastic programming", [r.sp_overall for r in rows])]
        ax.set_xlabel("Number of Metaverse applications")
        ax.set_title("Performance comparison")
    else:
        raise InputError(f"cannot plot rows of type {type(rows[0]).__name__}")
    for gid, label, y in series:
        (line,) = ax.plot(x, y, marker="o", label=label)
        line.set_gid(f"series-{gid}")
    ax.set_ylabel("Provisioning cost")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    finally:
        plt.close(fig)

