"""Device prices, reservation and on-demand costing, range checks.

All prices are in normalized monetary units. Reservation prices apply to
fiber-based QKD provisioned before demand is known; on-demand prices apply
to free-space (satellite or UAV) QKD bought per deficit key-rate unit.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, fields, replace

from qkdplan.errors import InfeasibleError, InputError
from qkdplan.topology import Edge, Topology

FIBER_HOP = "fiber_hop"
UAV = "uav"
SATELLITE = "satellite"


@dataclass(frozen=True)
class DeviceCatalog:
    # reservation
    qkd_transmitter: float = 1500.0
    qkd_receiver: float = 2250.0
    local_key_manager: float = 1200.0
    security_infrastructure: float = 150.0
    mux_demux: float = 300.0
    fiber_per_km: float = 1.0
    # on-demand
    od_transmitter: float = 6000.0
    od_receiver: float = 9000.0
    secret_key_buffer: float = 3000.0
    od_security_infrastructure: float = 500.0
    uav: float = 20.0
    satellite: float = 20000.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise InputError(f"price {f.name} must be a finite non-negative number, got {value}")

    def scaled(self, factor: float) -> DeviceCatalog:
        return replace(self, **{k: v * factor for k, v in asdict(self).items()})

    @property
    def trusted_node_cost(self) -> float:
        """Per-channel cost at each node of a reserved path."""
        return self.local_key_manager + self.security_infrastructure

    @property
    def od_device_cost(self) -> float:
        return (self.od_transmitter + self.od_receiver
                + self.secret_key_buffer + self.od_security_infrastructure)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


RESERVATION_PRICES = ("qkd_transmitter", "qkd_receiver", "local_key_manager",
                      "security_infrastructure", "mux_demux", "fiber_per_km")
ON_DEMAND_PRICES = ("od_transmitter", "od_receiver", "secret_key_buffer",
                    "od_security_infrastructure", "uav", "satellite")


def catalog_from_dict(doc) -> DeviceCatalog:
    """Override document -> catalog. Missing keys keep the default prices."""
    if not isinstance(doc, dict):
        raise InputError("catalog document must be an object")
    known = {f.name for f in fields(DeviceCatalog)}
    unknown = set(doc) - known
    if unknown:
        raise InputError(f"unknown catalog keys: {sorted(unknown)}")
    for k, v in doc.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InputError(f"price {k} must be a number, got {v!r}")
    return DeviceCatalog(**{k: float(v) for k, v in doc.items()})


def load_catalog(text: str) -> DeviceCatalog:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"catalog document is not valid JSON: {exc}") from exc
    return catalog_from_dict(doc)


@dataclass(frozen=True)
class RangeLimits:
    fiber_hop_max_km: float = 100.0
    satellite_max_km: float = 1000.0
    uav_spacing_km: float = 1.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise InputError(f"{f.name} must be positive")


@dataclass(frozen=True)
class CostBreakdown:
    phase1: float
    phase2_expected: float

    @property
    def overall(self) -> float:
        return self.phase1 + self.phase2_expected

    def to_dict(self) -> dict[str, float]:
        return {"phase1": self.phase1, "phase2_expected": self.phase2_expected,
                "overall": self.overall}


def edge_channel_cost(edge: Edge, catalog: DeviceCatalog) -> float:
    """Cost of one wavelength channel across an MDI fiber edge.

    A transmitter and a MUX/DEMUX at each end, one untrusted measurement
    relay mid-span, and the fiber lease by length.
    """
    return (2 * catalog.qkd_transmitter + catalog.qkd_receiver
            + 2 * catalog.mux_demux + edge.length_km * catalog.fiber_per_km)


def path_unit_cost(path, topo: Topology, catalog: DeviceCatalog) -> float:
    """Reservation cost of a single key-rate unit along ``path``."""
    edges = topo.path_edges(path)
    return (sum(edge_channel_cost(e, catalog) for e in edges)
            + len(path) * catalog.trusted_node_cost)


def path_reservation_cost(path, units: int, topo: Topology, catalog: DeviceCatalog) -> float:
    if units < 0:
        raise InputError(f"units must be non-negative, got {units}")
    if len(path) < 2:
        raise InputError("a path needs at least two nodes")
    unit = path_unit_cost(path, topo, catalog)
    return units * unit


def feasible_modes(distance_km: float, limits: RangeLimits) -> set[str]:
    if not distance_km > 0:
        raise InputError(f"distance must be positive, got {distance_km}")
    modes = {UAV}
    if distance_km <= limits.fiber_hop_max_km:
        modes.add(FIBER_HOP)
    if distance_km <= limits.satellite_max_km:
        modes.add(SATELLITE)
    return modes


def uav_count(distance_km: float, limits: RangeLimits) -> int:
    return math.ceil(distance_km / limits.uav_spacing_km)


def on_demand_options(distance_km: float, uav_available: bool,
                      catalog: DeviceCatalog, limits: RangeLimits) -> dict[str, float]:
    """Per-unit price of every free-space mode usable at this distance."""
    modes = feasible_modes(distance_km, limits)
    base = catalog.od_device_cost
    options = {}
    if uav_available:
        options[UAV] = base + uav_count(distance_km, limits) * catalog.uav
    if SATELLITE in modes:
        options[SATELLITE] = base + catalog.satellite
    return options


def on_demand_unit_cost(distance_km: float, uav_available: bool,
                        catalog: DeviceCatalog, limits: RangeLimits) -> float:
    """Cheapest free-space price for one deficit key-rate unit.

    Raises:
        InfeasibleError: UAVs are grounded and the pair is beyond satellite range.
    """
    options = on_demand_options(distance_km, uav_available, catalog, limits)
    if not options:
        raise InfeasibleError(
            f"no free-space QKD option for {distance_km:.1f} km without UAVs")
    return min(options.values())


def entanglement_memory_usage(path) -> dict[int, int]:
    """Quantum-memory units held on each router by one end-to-end connection.

    Every external link pins one memory unit at both of its end routers.
    """
    if len(path) < 2:
        raise InputError("a path needs at least two nodes")
    usage: Counter[int] = Counter()
    for a, b in zip(path, path[1:]):
        usage[a] += 1
        usage[b] += 1
    return dict(usage)
