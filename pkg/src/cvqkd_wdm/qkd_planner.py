"""Opaque CV-QKD routing over trusted relays.

Every node relays key hop by hop, so a link's QKD load is the sum of all
routes crossing it. Link capacities are taken with no classical channels
present, since QKD is planned before any lightpath exists.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cvqkd_model import QkdParams, link_key_capacity
from .errors import InputDomainError
from .network import DEFAULT_K, Path, Topology, TrafficMatrix, k_shortest_paths


@dataclass(frozen=True)
class QkdLinkState:
    link_id: int
    length_km: float
    capacity_bps: float
    effective_capacity_bps: float
    carried_bps: float


def residual_capacity(state: QkdLinkState) -> float:
    return max(0.0, state.effective_capacity_bps - state.carried_bps)


@dataclass(frozen=True)
class QkdRoute:
    demand_id: int
    path: Path
    carried_bps: float


@dataclass(frozen=True)
class QkdPlan:
    link_states: dict[int, QkdLinkState]
    routes: tuple[QkdRoute, ...]
    offered_bps: dict[int, float]
    per_demand_blocked_bps: dict[int, float]
    margin: float

    @property
    def total_offered_bps(self) -> float:
        return sum(self.offered_bps.values())

    @property
    def total_blocked_bps(self) -> float:
        return sum(self.per_demand_blocked_bps.values())

    @property
    def total_carried_bps(self) -> float:
        return sum(r.carried_bps for r in self.routes)

    def carried_on(self, link_id: int) -> float:
        return self.link_states[link_id].carried_bps


def plan_qkd(
    topology: Topology,
    demands: TrafficMatrix,
    params: QkdParams,
    margin: float = 0.0,
    k: int = DEFAULT_K,
) -> QkdPlan:
    """Greedy largest-unallocated-first routing with relay aggregation.

    Each step serves the demand with the most unallocated traffic on the one
    of its ``k`` shortest paths with the largest bottleneck residual, carrying
    as much as that bottleneck allows. Demands may split over several routes.
    """
    if not 0 <= margin < 1:
        raise InputDomainError(f"margin must lie in [0, 1), got {margin}")
    if k < 1:
        raise InputDomainError(f"k must be >= 1, got {k}")

    capacity = {}
    effective = {}
    carried = {}
    for link in topology.links:
        cap = link_key_capacity(link.scaled_length_km, 0, params)
        capacity[link.id] = cap
        effective[link.id] = (1.0 - margin) * cap
        carried[link.id] = 0.0

    def residual(link_id: int) -> float:
        return max(0.0, effective[link_id] - carried[link_id])

    unallocated = {d.id: d.offered_bps for d in demands.demands}
    by_id = {d.id: d for d in demands.demands}
    unservable: set[int] = set()
    routes: list[QkdRoute] = []

    while True:
        pending = [i for i, u in unallocated.items() if u > 0 and i not in unservable]
        if not pending:
            break
        demand = by_id[min(pending, key=lambda i: (-unallocated[i], i))]

        best_path, best_residual = None, 0.0
        # paths arrive shortest first, so strict '>' keeps the shorter on ties
        for path in k_shortest_paths(topology, demand.origin, demand.destination, k):
            bottleneck = min(residual(l) for l in path.links)
            if bottleneck > best_residual:
                best_path, best_residual = path, bottleneck
        if best_path is None:
            unservable.add(demand.id)
            continue

        want = unallocated[demand.id]
        amount = min(want, best_residual)
        for l in best_path.links:
            if residual(l) <= amount:
                carried[l] = effective[l]
            else:
                carried[l] += amount
        unallocated[demand.id] = 0.0 if amount >= want else want - amount
        routes.append(QkdRoute(demand.id, best_path, amount))

    states = {
        link.id: QkdLinkState(
            link.id, link.scaled_length_km, capacity[link.id], effective[link.id], carried[link.id]
        )
        for link in topology.links
    }
    offered = {d.id: d.offered_bps for d in demands.demands}
    return QkdPlan(states, tuple(routes), offered, dict(unallocated), margin)
