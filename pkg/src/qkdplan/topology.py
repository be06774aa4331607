"""Terrestrial QKD backbone: nodes with planar coordinates and fiber edges.

Nodes are co-located data/QKD nodes. Fiber edges carry their own length,
which is what fiber reservation is priced on; node coordinates only feed the
straight-line distance used for free-space (satellite/UAV) recourse.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx

from qkdplan.errors import InputError

USNET_FIBER_KM = 80.0

# 24-node / 43-link USNET backbone, 0-based ids.
USNET_LINKS: tuple[tuple[int, int], ...] = (
    (0, 1), (0, 5), (1, 2), (1, 5), (2, 3), (2, 4), (2, 6), (3, 4),
    (4, 7), (5, 6), (5, 8), (5, 10), (6, 7), (6, 8), (7, 9), (8, 9),
    (8, 10), (8, 11), (9, 12), (9, 13), (10, 11), (10, 14), (10, 18),
    (11, 12), (11, 15), (12, 13), (12, 16), (13, 17), (14, 15), (14, 19),
    (15, 16), (15, 20), (15, 21), (16, 17), (16, 21), (16, 22), (17, 23),
    (18, 19), (19, 20), (20, 21), (21, 22), (22, 23), (14, 18),
)

# Planar layout (km) with adjacent nodes 60-92 km apart.
USNET_COORDS_KM: tuple[tuple[float, float], ...] = (
    (228.2, 438.2), (289.0, 412.9), (357.1, 369.1), (430.5, 363.8),
    (405.2, 297.4), (225.1, 358.7), (294.8, 317.3), (343.5, 245.3),
    (224.8, 283.1), (273.1, 204.8), (153.7, 316.2), (167.1, 235.7),
    (210.0, 163.7), (269.9, 122.1), (82.3, 274.1), (95.5, 192.8),
    (139.3, 118.6), (204.7, 65.8), (71.7, 333.4), (6.8, 275.4),
    (15.2, 188.3), (65.7, 127.1), (91.4, 54.1), (155.3, 2.1),
)


@dataclass(frozen=True)
class Node:
    id: int
    x_km: float
    y_km: float


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length_km: float

    @property
    def key(self) -> tuple[int, int]:
        """Orientation-free identifier, (min, max)."""
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        if len(self.nodes) < 2:
            raise InputError("topology needs at least two nodes")
        index: dict[int, Node] = {}
        for n in self.nodes:
            if not isinstance(n.id, int) or n.id < 0:
                raise InputError(f"node id must be a non-negative integer, got {n.id!r}")
            if n.id in index:
                raise InputError(f"duplicate node id {n.id}")
            if not (math.isfinite(n.x_km) and math.isfinite(n.y_km)):
                raise InputError(f"node {n.id} has non-finite coordinates")
            index[n.id] = n
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if e.u not in index or e.v not in index:
                raise InputError(f"edge {e.u}-{e.v} references an unknown node")
            if e.u == e.v:
                raise InputError(f"self-loop on node {e.u}")
            if not (math.isfinite(e.length_km) and e.length_km > 0):
                raise InputError(f"edge {e.u}-{e.v} has nonpositive length {e.length_km}")
            if e.key in seen:
                raise InputError(f"duplicate edge {e.u}-{e.v}")
            seen.add(e.key)
        object.__setattr__(self, "_index", index)
        if not self._all_reachable():
            raise InputError("topology is not connected")

    def _all_reachable(self) -> bool:
        start = self.nodes[0].id
        seen = {start}
        queue = deque([start])
        while queue:
            for nb in self.neighbors(queue.popleft()):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return len(seen) == len(self.nodes)

    @cached_property
    def _adjacency(self) -> dict[int, dict[int, Edge]]:
        adj: dict[int, dict[int, Edge]] = {n.id: {} for n in self.nodes}
        for e in self.edges:
            adj[e.u][e.v] = e
            adj[e.v][e.u] = e
        return adj

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self._index))
        for e in self.edges:
            g.add_edge(e.u, e.v, length_km=e.length_km)
        return g

    @property
    def node_ids(self) -> list[int]:
        return sorted(self._index)

    def node(self, node_id: int) -> Node:
        try:
            return self._index[node_id]
        except KeyError:
            raise InputError(f"unknown node id {node_id}") from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._index

    def neighbors(self, node_id: int) -> list[int]:
        return sorted(self._adjacency[node_id])

    def edge(self, u: int, v: int) -> Edge:
        try:
            return self._adjacency[u][v]
        except KeyError:
            raise InputError(f"no edge between {u} and {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjacency.get(u, {})

    def path_edges(self, path: list[int] | tuple[int, ...]) -> list[Edge]:
        """Edges traversed by a node sequence; raises on nonadjacent hops."""
        return [self.edge(a, b) for a, b in zip(path, path[1:])]

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "x_km": n.x_km, "y_km": n.y_km} for n in self.nodes],
            "edges": [{"u": e.u, "v": e.v, "length_km": e.length_km} for e in self.edges],
        }


def build_usnet(fiber_km: float = USNET_FIBER_KM) -> Topology:
    """The embedded USNET-24 backbone with every fiber edge set to ``fiber_km``."""
    nodes = [Node(i, x, y) for i, (x, y) in enumerate(USNET_COORDS_KM)]
    edges = [Edge(u, v, fiber_km) for u, v in USNET_LINKS]
    return Topology(tuple(nodes), tuple(edges))


_NODE_KEYS = {"id", "x_km", "y_km"}
_EDGE_KEYS = {"u", "v", "length_km"}


def _check_keys(obj, expected: set[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{what} must be an object")
    keys = set(obj)
    if keys - expected:
        raise InputError(f"unknown {what} keys: {sorted(keys - expected)}")
    if expected - keys:
        raise InputError(f"missing {what} keys: {sorted(expected - keys)}")


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{what} must be a number, got {value!r}")
    return float(value)


def _integer(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{what} must be an integer, got {value!r}")
    return value


def topology_from_dict(doc) -> Topology:
    _check_keys(doc, {"nodes", "edges"}, "topology")
    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise InputError("'nodes' and 'edges' must be arrays")
    nodes = []
    for raw in doc["nodes"]:
        _check_keys(raw, _NODE_KEYS, "node")
        nodes.append(Node(_integer(raw["id"], "node id"),
                          _number(raw["x_km"], "x_km"), _number(raw["y_km"], "y_km")))
    edges = []
    for raw in doc["edges"]:
        _check_keys(raw, _EDGE_KEYS, "edge")
        edges.append(Edge(_integer(raw["u"], "edge u"), _integer(raw["v"], "edge v"),
                          _number(raw["length_km"], "length_km")))
    return Topology(tuple(nodes), tuple(edges))


def load_topology(text: str) -> Topology:
    """Parse and validate a JSON topology document.

    Raises:
        InputError: on malformed JSON, unknown/missing keys, duplicate ids,
            nonpositive lengths or a disconnected graph.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"topology document is not valid JSON: {exc}") from exc
    return topology_from_dict(doc)


def euclidean_distance(topo: Topology, u: int, v: int) -> float:
    a, b = topo.node(u), topo.node(v)
    return math.hypot(a.x_km - b.x_km, a.y_km - b.y_km)
