"""Hop-minimizing routes, first-fit wavelength assignment and plan validation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import networkx as nx

from qkdplan.errors import InputError
from qkdplan.topology import Topology, edge_key

DEFAULT_WAVELENGTHS = 80
DEFAULT_K_PATHS = 3

FLOW_CONSERVATION = "flow_conservation"
WAVELENGTH_COUNT = "wavelength_count"
PATH_UNIQUENESS = "path_uniqueness"
WAVELENGTH_CONTINUITY = "wavelength_continuity"
WAVELENGTH_CAPACITY = "wavelength_capacity"
WAVELENGTH_UNIQUENESS = "wavelength_uniqueness"
CONSTRAINTS = (FLOW_CONSERVATION, WAVELENGTH_COUNT, PATH_UNIQUENESS,
               WAVELENGTH_CONTINUITY, WAVELENGTH_CAPACITY, WAVELENGTH_UNIQUENESS)


@dataclass(frozen=True)
class Application:
    id: int
    src: int
    dst: int

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise InputError(f"application {self.id} has src == dst == {self.src}")


@dataclass(frozen=True)
class CapacityConfig:
    wavelengths_per_fiber: int = DEFAULT_WAVELENGTHS

    def __post_init__(self) -> None:
        if isinstance(self.wavelengths_per_fiber, bool) or \
                not isinstance(self.wavelengths_per_fiber, int) or self.wavelengths_per_fiber < 1:
            raise InputError("wavelengths per fiber must be an integer >= 1")


@dataclass(frozen=True)
class Route:
    """One application's lightpath bundle.

    ``wavelengths`` holds one entry per reserved unit. An entry is normally a
    single index used on every hop; a per-hop tuple is accepted so that
    continuity breaks can be represented (and reported) by the validator.
    """

    app_id: int
    path: tuple[int, ...]
    units: int = 0
    wavelengths: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", tuple(self.path))
        object.__setattr__(self, "wavelengths", tuple(
            tuple(w) if isinstance(w, (list, tuple)) else w for w in self.wavelengths))

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    @property
    def edge_keys(self) -> list[tuple[int, int]]:
        return [edge_key(a, b) for a, b in zip(self.path, self.path[1:])]

    def per_hop(self, entry) -> tuple[int, ...]:
        if isinstance(entry, tuple):
            return entry
        return (entry,) * self.hops


def k_shortest_paths(topo: Topology, src: int, dst: int, k: int = DEFAULT_K_PATHS) -> list[list[int]]:
    """Up to ``k`` loop-free paths ordered by (hops, length, node sequence).

    Paths come from networkx's Yen-style generator in nondecreasing hop
    count; every path sharing the k-th path's hop count is collected before
    sorting so the secondary keys are honoured exactly.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    topo.node(src)
    topo.node(dst)
    if src == dst:
        raise InputError("source and destination coincide")
    found: list[list[int]] = []
    limit_hops = None
    for path in nx.shortest_simple_paths(topo.graph, src, dst):
        hops = len(path) - 1
        if limit_hops is not None and hops > limit_hops:
            break
        found.append(path)
        if limit_hops is None and len(found) >= k:
            limit_hops = hops

    def key(p):
        return (len(p) - 1, sum(e.length_km for e in topo.path_edges(p)), p)

    found.sort(key=key)
    return found[:k]


@dataclass(frozen=True)
class Conflict:
    app_id: int
    edge: tuple[int, int]
    placed: int
    requested: int


@dataclass
class WavelengthTable:
    """Per-edge set of occupied wavelength indices."""

    capacity: int
    used: dict[tuple[int, int], set[int]] = field(default_factory=dict)

    def load(self, key) -> int:
        return len(self.used.get(key, ()))

    def first_free(self, keys) -> int | None:
        occupied = set()
        for key in keys:
            occupied |= self.used.get(key, set())
        for w in range(self.capacity):
            if w not in occupied:
                return w
        return None

    def place(self, keys, units: int) -> list[int]:
        """Place up to ``units`` lightpaths first-fit; returns the indices placed."""
        placed = []
        for _ in range(units):
            w = self.first_free(keys)
            if w is None:
                break
            for key in keys:
                self.used.setdefault(key, set()).add(w)
            placed.append(w)
        return placed

    def release(self, keys, indices) -> None:
        for key in keys:
            self.used.get(key, set()).difference_update(indices)

    def saturated_edge(self, keys) -> tuple[int, int]:
        return max(keys, key=lambda k: (self.load(k), -keys.index(k)))


@dataclass(frozen=True)
class Assignment:
    routes: tuple[Route, ...]
    conflicts: tuple[Conflict, ...]

    @property
    def ok(self) -> bool:
        return not self.conflicts


def assign_wavelengths(routes, capacity: CapacityConfig) -> Assignment:
    """First-fit wavelength assignment in ascending ``app_id`` order.

    Each unit takes the lowest index free on every edge of its path. A route
    that cannot be placed in full is left unassigned and reported as a
    conflict naming its most loaded edge; the remaining routes still go on.
    """
    table = WavelengthTable(capacity.wavelengths_per_fiber)
    out = []
    conflicts = []
    for route in sorted(routes, key=lambda r: r.app_id):
        keys = route.edge_keys
        placed = table.place(keys, route.units)
        if len(placed) < route.units:
            table.release(keys, placed)
            conflicts.append(Conflict(route.app_id, table.saturated_edge(keys),
                                      len(placed), route.units))
            out.append(replace(route, wavelengths=()))
        else:
            out.append(replace(route, wavelengths=tuple(placed)))
    return Assignment(tuple(out), tuple(conflicts))


@dataclass(frozen=True)
class Violation:
    constraint: str
    app_id: int | None
    detail: str

    def to_dict(self) -> dict:
        return {"constraint": self.constraint, "app_id": self.app_id, "detail": self.detail}


def validate_routes(routes, applications, topo: Topology,
                    capacity: CapacityConfig) -> list[Violation]:
    """Check routes against the six routing/wavelength constraint families."""
    violations: list[Violation] = []
    apps = {a.id: a for a in applications}
    w_max = capacity.wavelengths_per_fiber

    by_app: dict[int, list[Route]] = {}
    for r in routes:
        by_app.setdefault(r.app_id, []).append(r)
    for app_id in sorted(apps.keys() | by_app.keys()):
        count = len(by_app.get(app_id, []))
        if app_id not in apps:
            violations.append(Violation(PATH_UNIQUENESS, app_id, "route for unknown application"))
        elif count != 1:
            violations.append(Violation(PATH_UNIQUENESS, app_id, f"{count} paths, expected 1"))

    # edge -> wavelength -> app ids of the occupying units
    occupancy: dict[tuple[int, int], dict[int, list[int]]] = {}
    for route in routes:
        app = apps.get(route.app_id)
        path = route.path
        if app is not None and (len(path) < 2 or path[0] != app.src or path[-1] != app.dst):
            violations.append(Violation(
                FLOW_CONSERVATION, route.app_id,
                f"path {list(path)} does not run {app.src}->{app.dst}"))
        for a, b in zip(path, path[1:]):
            if not topo.has_edge(a, b):
                violations.append(Violation(FLOW_CONSERVATION, route.app_id,
                                            f"no fiber between {a} and {b}"))
        if len(route.wavelengths) != route.units:
            violations.append(Violation(
                WAVELENGTH_COUNT, route.app_id,
                f"{len(route.wavelengths)} wavelengths for {route.units} units"))

        keys = route.edge_keys
        for entry in route.wavelengths:
            hop_idx = route.per_hop(entry)
            if len(hop_idx) != len(keys) or len(set(hop_idx)) > 1:
                violations.append(Violation(
                    WAVELENGTH_CONTINUITY, route.app_id,
                    f"per-hop indices {list(hop_idx)} change along the path"))
            for key, w in zip(keys, hop_idx):
                occupancy.setdefault(key, {}).setdefault(w, []).append(route.app_id)

    for key in sorted(occupancy):
        slot = occupancy[key]
        out_of_range = sorted(w for w in slot if not 0 <= w < w_max)
        if len(slot) > w_max or out_of_range:
            culprit = slot[out_of_range[0]][0] if out_of_range else None
            violations.append(Violation(
                WAVELENGTH_CAPACITY, culprit,
                f"edge {key}: {len(slot)} distinct indices of {w_max}, out of range {out_of_range}"))
        for w in sorted(slot):
            if len(slot[w]) > 1:
                violations.append(Violation(
                    WAVELENGTH_UNIQUENESS, slot[w][1],
                    f"edge {key}: index {w} used by apps {slot[w]}"))
    return violations


def validate_plan(plan, topo: Topology, capacity: CapacityConfig, applications) -> list[Violation]:
    """Validation report for a provisioning plan; empty when every constraint holds."""
    violations = validate_routes(plan.routes, applications, topo, capacity)
    route_count: dict[int, int] = {}
    for route in plan.routes:
        route_count[route.app_id] = route_count.get(route.app_id, 0) + 1
    for route in plan.routes:
        reserved = plan.reservations.get(route.app_id)
        # apps with several routes are already reported under path uniqueness
        if route_count[route.app_id] == 1 and reserved is not None and reserved != route.units:
            violations.append(Violation(
                WAVELENGTH_COUNT, route.app_id,
                f"route carries {route.units} units but {reserved} are reserved"))
    return violations


def candidate_paths(topo: Topology, applications, k: int) -> dict[int, list[tuple[int, ...]]]:
    return {a.id: [tuple(p) for p in k_shortest_paths(topo, a.src, a.dst, k)]
            for a in applications}

