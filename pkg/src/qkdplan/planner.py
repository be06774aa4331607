"""Two-stage stochastic provisioning of QKD services.

Stage one reserves an integer number of fiber-based key-rate units per
application, together with a route and continuous wavelengths. Stage two
covers whatever a realized scenario demands beyond the reservation with
on-demand satellite or UAV QKD, at the cheaper feasible free-space price.

The objective is separable across applications; the only coupling comes
from per-fiber wavelength capacity. When the per-application optima fit,
they are returned directly. Otherwise a branch-and-bound search over
(route, reservation) choices restores feasibility at minimum cost.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

from qkdplan.costs import (CostBreakdown, DeviceCatalog, RangeLimits, on_demand_options,
                           path_reservation_cost, path_unit_cost)
from qkdplan.errors import InfeasibleError, InputError
from qkdplan.rng import SplitMix64
from qkdplan.routing import (DEFAULT_K_PATHS, Application, CapacityConfig, Route,
                             WavelengthTable, assign_wavelengths, k_shortest_paths)
from qkdplan.scenarios import PROB_TOL, ScenarioSet, cdf_at, expected_demand
from qkdplan.topology import Topology, euclidean_distance

log = logging.getLogger(__name__)

COST_TOL = 1e-9

SP = "SP"
EVF = "EVF"
RANDOM = "RANDOM"
ORACLE = "ORACLE"
FORCED = "FORCED"

ORACLE_MAX_APPS = 4
ORACLE_MAX_DEMAND = 6


@dataclass(frozen=True)
class PlanningInstance:
    topo: Topology
    applications: tuple[Application, ...]
    scenarios: ScenarioSet
    catalog: DeviceCatalog = field(default_factory=DeviceCatalog)
    limits: RangeLimits = field(default_factory=RangeLimits)
    capacity: CapacityConfig = field(default_factory=CapacityConfig)
    k_paths: int = DEFAULT_K_PATHS
    # app id -> per-scenario demand, aligned with ``scenarios``
    demand_overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "applications",
                           tuple(sorted(self.applications, key=lambda a: a.id)))
        if not self.applications:
            raise InputError("instance has no applications")
        ids = [a.id for a in self.applications]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate application ids")
        for a in self.applications:
            self.topo.node(a.src)
            self.topo.node(a.dst)
        for app_id, demands in self.demand_overrides.items():
            if app_id not in ids:
                raise InputError(f"demand override for unknown application {app_id}")
            self.scenarios.with_demands(demands)
        if self.k_paths < 1:
            raise InputError("k_paths must be >= 1")

    def app(self, app_id: int) -> Application:
        for a in self.applications:
            if a.id == app_id:
                return a
        raise InputError(f"unknown application {app_id}")

    def app_scenarios(self, app_id: int) -> ScenarioSet:
        demands = self.demand_overrides.get(app_id)
        return self.scenarios if demands is None else self.scenarios.with_demands(demands)

    @cached_property
    def paths(self) -> dict[int, list[tuple[int, ...]]]:
        """Candidate routes per application, shortest first."""
        cache: dict[tuple[int, int], list[tuple[int, ...]]] = {}
        out = {}
        for a in self.applications:
            if (a.src, a.dst) not in cache:
                cache[(a.src, a.dst)] = [tuple(p) for p in
                                         k_shortest_paths(self.topo, a.src, a.dst, self.k_paths)]
            out[a.id] = cache[(a.src, a.dst)]
        return out


@dataclass(frozen=True)
class ProvisioningPlan:
    reservations: dict[int, int]
    routes: tuple[Route, ...]
    method: str

    def route_for(self, app_id: int) -> Route:
        for r in self.routes:
            if r.app_id == app_id:
                return r
        raise InputError(f"plan has no route for application {app_id}")


@dataclass(frozen=True)
class EvaluatedPlan:
    plan: ProvisioningPlan
    cost: CostBreakdown
    # aligned with instance.scenarios: (demand, probability, recourse cost)
    per_scenario: tuple[tuple[int, float, float], ...]

    @property
    def per_scenario_recourse(self) -> dict[int, float]:
        return {d: c for d, _, c in self.per_scenario}

    @property
    def reservations(self) -> dict[int, int]:
        return self.plan.reservations


# ---------------------------------------------------------------- stage two

def _scenario_unit_costs(app: Application, sset: ScenarioSet, topo: Topology,
                         catalog: DeviceCatalog, limits: RangeLimits) -> list[float | None]:
    """Cheapest free-space unit price per scenario (None when no mode exists)."""
    distance = euclidean_distance(topo, app.src, app.dst)
    out = []
    for s in sset.scenarios:
        options = on_demand_options(distance, s.uav_available, catalog, limits)
        out.append(min(options.values()) if options else None)
    return out


def _scenario_recourse(r: int, demands, unit_costs, app_id: int) -> list[float]:
    out = []
    for d, c in zip(demands, unit_costs):
        deficit = max(0, d - r)
        if deficit and c is None:
            raise InfeasibleError(
                f"application {app_id}: {deficit} unit(s) short with no free-space option")
        out.append(deficit * c if deficit else 0.0)
    return out


def recourse_cost(r: int, app: Application, sset: ScenarioSet, topo: Topology,
                  catalog: DeviceCatalog, limits: RangeLimits) -> float:
    """Expected on-demand cost of covering demand above the reservation ``r``.

    Raises:
        InfeasibleError: some scenario has a deficit and no usable free-space mode.
    """
    if r < 0:
        raise InputError("reservation must be non-negative")
    units = _scenario_unit_costs(app, sset, topo, catalog, limits)
    per = _scenario_recourse(r, sset.demands, units, app.id)
    return math.fsum(s.probability * c for s, c in zip(sset.scenarios, per))


def newsvendor_reservation(sset: ScenarioSet, res_unit_cost: float, od_unit_cost: float) -> int:
    """Smallest r whose demand CDF reaches the critical ratio (od - res) / od."""
    if od_unit_cost <= res_unit_cost:
        return 0
    if res_unit_cost <= 0:
        return sset.max_demand
    ratio = (od_unit_cost - res_unit_cost) / od_unit_cost
    for r in sorted({0, *sset.demands}):
        if cdf_at(sset, r) >= ratio - PROB_TOL:
            return r
    return sset.max_demand


# ---------------------------------------------------------------- evaluation

def evaluate_plan(plan: ProvisioningPlan, instance: PlanningInstance) -> EvaluatedPlan:
    phase1_terms = []
    per_scenario = [[] for _ in instance.scenarios.scenarios]
    for app in instance.applications:
        if app.id not in plan.reservations:
            raise InputError(f"plan has no reservation for application {app.id}")
        r = plan.reservations[app.id]
        route = plan.route_for(app.id)
        if route.units != r:
            raise InputError(f"application {app.id}: route units {route.units} != reservation {r}")
        phase1_terms.append(path_reservation_cost(route.path, r, instance.topo, instance.catalog))
        sset = instance.app_scenarios(app.id)
        units = _scenario_unit_costs(app, sset, instance.topo, instance.catalog, instance.limits)
        for bucket, c in zip(per_scenario, _scenario_recourse(r, sset.demands, units, app.id)):
            bucket.append(c)
    totals = [math.fsum(b) for b in per_scenario]
    phase2 = math.fsum(s.probability * t for s, t in zip(instance.scenarios.scenarios, totals))
    table = tuple((s.demand_units, s.probability, t)
                  for s, t in zip(instance.scenarios.scenarios, totals))
    return EvaluatedPlan(plan, CostBreakdown(math.fsum(phase1_terms), phase2), table)


def _plan_from_choices(instance: PlanningInstance, choices: dict[int, tuple[int, int]],
                       method: str, *, assign: bool = True) -> ProvisioningPlan:
    """Choices map app id -> (path index, reservation)."""
    routes = [Route(a.id, instance.paths[a.id][choices[a.id][0]], choices[a.id][1])
              for a in instance.applications]
    if assign:
        result = assign_wavelengths(routes, instance.capacity)
        if not result.ok:
            c = result.conflicts[0]
            raise InfeasibleError(
                f"wavelength assignment failed for application {c.app_id} on edge {c.edge}")
        routes = list(result.routes)
    return ProvisioningPlan({a.id: choices[a.id][1] for a in instance.applications},
                            tuple(routes), method)


def forced_plan(instance: PlanningInstance, reservation: int, *, assign: bool = False) -> ProvisioningPlan:
    """Every application reserves ``reservation`` units on its shortest route."""
    return _plan_from_choices(instance, {a.id: (0, reservation) for a in instance.applications},
                              FORCED, assign=assign)


# ---------------------------------------------------------------- cost tables

@dataclass
class _AppTable:
    app: Application
    paths: list[tuple[int, ...]]
    edges: list[list[tuple[int, int]]]
    # cost[p][r], inf when recourse is infeasible
    cost: list[list[float]]
    best: tuple[int, int]

    @property
    def best_cost(self) -> float:
        p, r = self.best
        return self.cost[p][r]


def _build_tables(instance: PlanningInstance) -> dict[int, _AppTable]:
    tables = {}
    for app in instance.applications:
        sset = instance.app_scenarios(app.id)
        units = _scenario_unit_costs(app, sset, instance.topo, instance.catalog, instance.limits)
        rec = []
        for r in range(sset.max_demand + 1):
            try:
                per = _scenario_recourse(r, sset.demands, units, app.id)
                rec.append(math.fsum(s.probability * c for s, c in zip(sset.scenarios, per)))
            except InfeasibleError:
                rec.append(math.inf)
        paths = instance.paths[app.id]
        cost = [[path_reservation_cost(p, r, instance.topo, instance.catalog) + rec[r]
                 for r in range(len(rec))] for p in paths]
        best = _per_app_optimum(instance, app, sset, paths, units, cost)
        if math.isinf(cost[best[0]][best[1]]):
            raise InfeasibleError(f"application {app.id} cannot be served in every scenario")
        edges = [[(min(a, b), max(a, b)) for a, b in zip(p, p[1:])] for p in paths]
        tables[app.id] = _AppTable(app, paths, edges, cost, best)
    return tables


def _per_app_optimum(instance, app, sset, paths, units, cost) -> tuple[int, int]:
    """Uncapacitated optimum; closed form when the on-demand price is scenario-invariant."""
    if all(u is not None for u in units) and len(set(units)) == 1:
        res = path_unit_cost(paths[0], instance.topo, instance.catalog)
        r = newsvendor_reservation(sset, res, units[0])
        candidate = (0, r)
        # equal-cost alternate routes or exact ties never undercut the closed form
        if all(cost[0][r] <= c + COST_TOL for row in cost for c in row):
            return candidate
    flat = [(c, p, r) for p, row in enumerate(cost) for r, c in enumerate(row)]
    c, p, r = min(flat)
    return (p, r)


# ---------------------------------------------------------------- SP solver

def _feasible(instance: PlanningInstance, tables, choices: dict[int, tuple[int, int]]) -> bool:
    routes = [Route(app_id, tables[app_id].paths[p], r) for app_id, (p, r) in choices.items()]
    return assign_wavelengths(routes, instance.capacity).ok


def _components(tables: dict[int, _AppTable], app_ids) -> list[list[int]]:
    """Groups of applications whose candidate routes share fiber."""
    parent = {a: a for a in app_ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner: dict[tuple[int, int], int] = {}
    for a in app_ids:
        for edges in tables[a].edges:
            for e in edges:
                if e in owner:
                    parent[find(a)] = find(owner[e])
                else:
                    owner[e] = a
    groups: dict[int, list[int]] = {}
    for a in app_ids:
        groups.setdefault(find(a), []).append(a)
    return [sorted(g) for g in sorted(groups.values(), key=min)]


def _greedy_incumbent(instance, tables, app_ids) -> dict[int, tuple[int, int]]:
    targets = {a: tables[a].best[1] for a in app_ids}
    routes = _place_sequential(instance.capacity, {a: tables[a].paths for a in app_ids}, targets)
    # a clipped reservation may cost more than a smaller level on the same route
    trimmed = {}
    for a, (p, units) in routes.items():
        row = tables[a].cost[p]
        trimmed[a] = (p, min(range(units + 1), key=lambda r: (row[r], r)))
    return trimmed if _feasible(instance, tables, trimmed) else routes


def _branch_and_bound(instance, tables, app_ids) -> dict[int, tuple[int, int]]:
    w_max = instance.capacity.wavelengths_per_fiber
    order = sorted(app_ids, key=lambda a: (-len(tables[a].paths[0]), a))
    children = {}
    for a in order:
        t = tables[a]
        opts = [(c, p, r) for p, row in enumerate(t.cost) for r, c in enumerate(row)
                if not math.isinf(c) and r <= w_max]
        children[a] = sorted(opts)

    incumbent = _greedy_incumbent(instance, tables, app_ids)
    best = [math.fsum(tables[a].cost[p][r] for a, (p, r) in incumbent.items()), dict(incumbent)]
    load: dict[tuple[int, int], int] = {}
    chosen: dict[int, tuple[int, int]] = {}

    def fits(edges, r):
        return all(load.get(e, 0) + r <= w_max for e in edges)

    def bound(depth):
        total = 0.0
        for a in order[depth:]:
            t = tables[a]
            for c, p, r in children[a]:
                if r == 0 or fits(t.edges[p], r):
                    total += c
                    break
            else:
                return math.inf
        return total

    def search(depth, acc):
        if depth == len(order):
            if acc < best[0] - COST_TOL and _feasible(instance, tables, chosen):
                best[0] = acc
                best[1] = dict(chosen)
            return
        a = order[depth]
        t = tables[a]
        for c, p, r in children[a]:
            if acc + c >= best[0] - COST_TOL:
                break  # children are cost-sorted
            edges = t.edges[p]
            if r and not fits(edges, r):
                continue
            for e in edges:
                load[e] = load.get(e, 0) + r
            chosen[a] = (p, r)
            if acc + c + bound(depth + 1) < best[0] - COST_TOL:
                search(depth + 1, acc + c)
            del chosen[a]
            for e in edges:
                load[e] -= r

    search(0, 0.0)
    return best[1]


def solve_sp_exact(instance: PlanningInstance) -> EvaluatedPlan:
    """Minimum expected-cost plan under wavelength capacity.

    Feasible plans are those whose routes first-fit in ascending application
    order without conflict. Applications whose routes never share fiber are
    solved independently.
    """
    tables = _build_tables(instance)
    choices = {a: t.best for a, t in tables.items()}
    if not _feasible(instance, tables, choices):
        coupled = [a for a in sorted(tables) if choices[a][1] > 0]
        for group in _components(tables, coupled):
            sub = {a: choices[a] for a in group}
            if not _feasible(instance, tables, sub):
                log.debug("branch and bound over %d coupled applications", len(group))
                choices.update(_branch_and_bound(instance, tables, group))
    return evaluate_plan(_plan_from_choices(instance, choices, SP), instance)


# ---------------------------------------------------------------- baselines

def _place_sequential(capacity: CapacityConfig, paths: dict[int, list[tuple[int, ...]]],
                      targets: dict[int, int]) -> dict[int, tuple[int, int]]:
    """Greedy first-fit in ascending app order with route spillover.

    Each application takes its first candidate route that fits the target in
    full; if none does, the route holding the most units wins and the
    reservation is clipped to what fits. Returns app id -> (path index, units).
    """
    table = WavelengthTable(capacity.wavelengths_per_fiber)
    out = {}
    for app_id in sorted(targets):
        target = targets[app_id]
        best_p, best_n = 0, -1
        for p, path in enumerate(paths[app_id]):
            keys = [(min(a, b), max(a, b)) for a, b in zip(path, path[1:])]
            placed = table.place(keys, target)
            table.release(keys, placed)
            if len(placed) > best_n:
                best_p, best_n = p, len(placed)
            if len(placed) == target:
                break
        path = paths[app_id][best_p]
        table.place([(min(a, b), max(a, b)) for a, b in zip(path, path[1:])], best_n)
        out[app_id] = (best_p, best_n)
    return out


def _baseline(instance: PlanningInstance, targets: dict[int, int], method: str) -> EvaluatedPlan:
    placed = _place_sequential(instance.capacity, instance.paths, targets)
    return evaluate_plan(_plan_from_choices(instance, placed, method), instance)


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def solve_evf(instance: PlanningInstance) -> EvaluatedPlan:
    """Reserve the rounded expected demand for every application."""
    targets = {a.id: round_half_up(expected_demand(instance.app_scenarios(a.id)))
               for a in instance.applications}
    return _baseline(instance, targets, EVF)


def solve_random(instance: PlanningInstance, seed: int) -> EvaluatedPlan:
    """Reserve a uniform draw from 0..n_scenarios for every application."""
    rng = SplitMix64(seed)
    n = instance.scenarios.n_scenarios
    targets = {a.id: rng.randint(0, n) for a in instance.applications}
    return _baseline(instance, targets, RANDOM)


# ---------------------------------------------------------------- oracle

def brute_force_oracle(instance: PlanningInstance) -> EvaluatedPlan:
    """Exhaustive search over every route and reservation vector.

    Only for tiny instances; the first lexicographic minimum wins ties.
    """
    if len(instance.applications) > ORACLE_MAX_APPS:
        raise InputError(f"oracle supports at most {ORACLE_MAX_APPS} applications")
    max_d = max(instance.app_scenarios(a.id).max_demand for a in instance.applications)
    if max_d > ORACLE_MAX_DEMAND:
        raise InputError(f"oracle supports demand up to {ORACLE_MAX_DEMAND}")

    w_max = instance.capacity.wavelengths_per_fiber
    option_lists = []
    for app in instance.applications:
        sset = instance.app_scenarios(app.id)
        rec = []
        for r in range(sset.max_demand + 1):
            try:
                rec.append(recourse_cost(r, app, sset, instance.topo,
                                         instance.catalog, instance.limits))
            except InfeasibleError:
                rec.append(math.inf)
        opts = []
        for p, path in enumerate(instance.paths[app.id]):
            edges = [(min(a, b), max(a, b)) for a, b in zip(path, path[1:])]
            for r in range(sset.max_demand + 1):
                c = path_reservation_cost(path, r, instance.topo, instance.catalog) + rec[r]
                opts.append((p, r, c, edges))
        option_lists.append(opts)

    best_cost, best = math.inf, None
    for combo in itertools.product(*option_lists):
        cost = math.fsum(o[2] for o in combo)
        if not cost < best_cost - COST_TOL:
            continue
        load: dict[tuple[int, int], int] = {}
        for _, r, _, edges in combo:
            for e in edges:
                load[e] = load.get(e, 0) + r
        if any(v > w_max for v in load.values()):
            continue
        routes = [Route(app.id, instance.paths[app.id][o[0]], o[1])
                  for app, o in zip(instance.applications, combo)]
        if not assign_wavelengths(routes, instance.capacity).ok:
            continue
        best_cost, best = cost, combo
    if best is None:
        raise InfeasibleError("no feasible plan")
    choices = {app.id: (o[0], o[1]) for app, o in zip(instance.applications, best)}
    return evaluate_plan(_plan_from_choices(instance, choices, ORACLE), instance)
