"""Network graph, distance scaling, traffic matrices and k-shortest paths."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .errors import InputDomainError

DEFAULT_WDM_SLOTS = 40
DEFAULT_K = 5


@dataclass(frozen=True)
class Node:
    id: int
    name: str


@dataclass(frozen=True)
class Link:
    id: int
    src: int
    dst: int
    base_length_km: float
    scaled_length_km: float
    wdm_slots: int = DEFAULT_WDM_SLOTS


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    links: tuple[int, ...]
    base_length_km: float
    length_km: float


@dataclass(frozen=True, eq=False)
class Topology:
    """Directed fiber graph. Lengths are ``lam`` times the base lengths."""

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    lam: float
    name: str = "custom"
    _path_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @cached_property
    def link_by_id(self) -> dict[int, Link]:
        return {link.id: link for link in self.links}

    @cached_property
    def link_by_pair(self) -> dict[tuple[int, int], Link]:
        return {(link.src, link.dst): link for link in self.links}

    @cached_property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes)

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.node_ids)
        for link in self.links:
            g.add_edge(link.src, link.dst, weight=link.base_length_km, link_id=link.id)
        return g

    def node_name(self, node_id: int) -> str:
        for n in self.nodes:
            if n.id == node_id:
                return n.name
        raise InputDomainError(f"unknown node id {node_id}")


def build_topology(
    nodes: Iterable[tuple[int, str]],
    connections: Iterable[tuple[int, int, float]],
    lam: float,
    wdm_slots: int = DEFAULT_WDM_SLOTS,
    name: str = "custom",
) -> Topology:
    """Build a topology from bidirectional ``(a, b, base_km)`` connections.

    Each connection becomes two directed links with consecutive ids.
    """
    if not lam > 0:
        raise InputDomainError(f"lambda must be > 0, got {lam}")
    if wdm_slots < 1:
        raise InputDomainError(f"wdm_slots must be >= 1, got {wdm_slots}")
    node_list = tuple(Node(int(i), str(n)) for i, n in nodes)
    ids = {n.id for n in node_list}
    if len(ids) != len(node_list):
        raise InputDomainError("duplicate node ids")
    links = []
    seen = set()
    for a, b, km in connections:
        if a not in ids or b not in ids:
            raise InputDomainError(f"connection {a}-{b} references an unknown node")
        if a == b:
            raise InputDomainError(f"self-loop at node {a}")
        if km < 0:
            raise InputDomainError(f"negative length on {a}-{b}")
        if (a, b) in seen or (b, a) in seen:
            raise InputDomainError(f"duplicate connection {a}-{b}")
        seen.add((a, b))
        for s, d in ((a, b), (b, a)):
            links.append(Link(len(links), s, d, float(km), lam * km, wdm_slots))
    return Topology(node_list, tuple(links), lam, name)


SPAIN7_NODES = (
    (1, "Madrid"),
    (2, "Zaragoza"),
    (3, "Barcelona"),
    (4, "Valencia"),
    (5, "Murcia"),
    (6, "Málaga"),
    (7, "Sevilla"),
)

SPAIN7_CONNECTIONS = (
    (3, 4, 303),
    (4, 5, 177),
    (5, 6, 323),
    (6, 7, 158),
    (7, 1, 391),
    (1, 2, 272),
    (2, 3, 257),
    (1, 4, 302),
)

# Municipal populations (millions) raised to 1.5; the exponent widens the
# gravity spread towards the 6.95-1815 Gbit/s range of the reference matrix.
SPAIN7_NODE_WEIGHTS = {
    node: round(pop**1.5, 4)
    for node, pop in {
        1: 3.334,
        2: 0.681,
        3: 1.665,
        4: 0.800,
        5: 0.460,
        6: 0.578,
        7: 0.691,
    }.items()
}

TOPOLOGIES = {"spain7": (SPAIN7_NODES, SPAIN7_CONNECTIONS)}


def build_spanish_topology(lam: float, wdm_slots: int = DEFAULT_WDM_SLOTS) -> Topology:
    return build_topology(SPAIN7_NODES, SPAIN7_CONNECTIONS, lam, wdm_slots, name="spain7")


def named_topology(name: str, lam: float, wdm_slots: int = DEFAULT_WDM_SLOTS) -> Topology:
    if name not in TOPOLOGIES:
        raise InputDomainError(f"unknown topology {name!r}; known: {sorted(TOPOLOGIES)}")
    nodes, conns = TOPOLOGIES[name]
    return build_topology(nodes, conns, lam, wdm_slots, name=name)


def _make_path(topology: Topology, nodes: Sequence[int]) -> Path:
    links = [topology.link_by_pair[(a, b)] for a, b in zip(nodes, nodes[1:])]
    base = sum(link.base_length_km for link in links)
    return Path(tuple(nodes), tuple(link.id for link in links), base, topology.lam * base)


def k_shortest_paths(topology: Topology, origin: int, destination: int, k: int) -> list[Path]:
    """Up to ``k`` loopless paths by ascending length, ties by node sequence.

    Paths are ranked on unscaled lengths so the order does not depend on the
    scaling factor. Results are cached on the topology.
    """
    if origin not in topology.graph or destination not in topology.graph:
        raise InputDomainError(f"unknown node in pair ({origin}, {destination})")
    if origin == destination:
        raise InputDomainError("origin and destination must differ")
    if k < 1:
        raise InputDomainError(f"k must be >= 1, got {k}")
    key = (origin, destination, k)
    cached = topology._path_cache.get(key)
    if cached is not None:
        return list(cached)

    candidates: list[Path] = []
    if nx.has_path(topology.graph, origin, destination):
        gen = nx.shortest_simple_paths(topology.graph, origin, destination, weight="weight")
        for nodes in gen:
            path = _make_path(topology, nodes)
            # keep pulling while ties with the k-th length are possible
            if len(candidates) >= k and path.base_length_km > candidates[k - 1].base_length_km:
                break
            candidates.append(path)
            candidates.sort(key=lambda p: (p.base_length_km, p.nodes))
    result = tuple(candidates[:k])
    topology._path_cache[key] = result
    return list(result)


@dataclass(frozen=True)
class Demand:
    id: int
    origin: int
    destination: int
    offered_bps: float


@dataclass(frozen=True)
class TrafficMatrix:
    demands: tuple[Demand, ...]

    def __post_init__(self):
        ids = set()
        for d in self.demands:
            if d.origin == d.destination:
                raise InputDomainError(f"demand {d.id}: origin equals destination")
            if not d.offered_bps >= 0:
                raise InputDomainError(f"demand {d.id}: offered traffic must be >= 0")
            if d.id in ids:
                raise InputDomainError(f"duplicate demand id {d.id}")
            ids.add(d.id)

    @property
    def total_offered_bps(self) -> float:
        return sum(d.offered_bps for d in self.demands)

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int, float]]) -> "TrafficMatrix":
        return cls(tuple(Demand(i, int(o), int(t), float(v)) for i, (o, t, v) in enumerate(entries)))


def scale_traffic_matrix(matrix: TrafficMatrix, target_total_bps: float) -> TrafficMatrix:
    if target_total_bps < 0:
        raise InputDomainError(f"target total must be >= 0, got {target_total_bps}")
    current = matrix.total_offered_bps
    if current == 0:
        if target_total_bps > 0:
            raise InputDomainError("cannot scale an all-zero matrix to a positive total")
        return matrix
    factor = target_total_bps / current
    return TrafficMatrix(
        tuple(Demand(d.id, d.origin, d.destination, d.offered_bps * factor) for d in matrix.demands)
    )


def gravity_matrix(node_weights: Mapping[int, float], total_bps: float) -> TrafficMatrix:
    """All ordered node pairs with demand proportional to ``w_i * w_j``."""
    if len(node_weights) < 2:
        raise InputDomainError("gravity matrix needs at least 2 nodes")
    for node, w in node_weights.items():
        if not w > 0:
            raise InputDomainError(f"node {node}: weight must be > 0, got {w}")
    if total_bps < 0:
        raise InputDomainError(f"total must be >= 0, got {total_bps}")
    nodes = sorted(node_weights)
    pairs = [(i, j) for i in nodes for j in nodes if i != j]
    products = [node_weights[i] * node_weights[j] for i, j in pairs]
    norm = sum(products)
    return TrafficMatrix(
        tuple(
            Demand(idx, i, j, total_bps * p / norm)
            for idx, ((i, j), p) in enumerate(zip(pairs, products))
        )
    )


def default_matrix(topology: Topology, total_bps: float) -> TrafficMatrix:
    """Gravity matrix for ``topology``: population weights on spain7, uniform otherwise."""
    if topology.name == "spain7":
        weights = SPAIN7_NODE_WEIGHTS
    else:
        weights = {n: 1.0 for n in topology.node_ids}
    return gravity_matrix(weights, total_bps)
