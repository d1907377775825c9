"""Transparent fixed-grid RWA under a CV-QKD feasibility constraint."""

from __future__ import annotations

from dataclasses import dataclass

from .cvqkd_model import QkdParams, sustains
from .errors import InputDomainError
from .network import DEFAULT_K, Path, Topology, TrafficMatrix, k_shortest_paths
from .qkd_planner import QkdPlan

CHANNEL_RATE_BPS = 100e9


class WdmOccupancy:
    """Per-link slot occupancy; ``slots[link_id][i]`` is True when slot ``i`` is lit."""

    def __init__(self, topology: Topology):
        self.slots: dict[int, list[bool]] = {
            link.id: [False] * link.wdm_slots for link in topology.links
        }

    def active(self, link_id: int) -> int:
        return sum(self.slots[link_id])

    def occupy(self, path: Path, slot: int) -> None:
        for l in path.links:
            if self.slots[l][slot]:
                raise InputDomainError(f"slot {slot} already lit on link {l}")
            self.slots[l][slot] = True

    def counts(self) -> dict[int, int]:
        return {l: sum(s) for l, s in self.slots.items()}


@dataclass(frozen=True)
class Lightpath:
    demand_id: int
    path: Path
    slot_index: int
    carried_bps: float = CHANNEL_RATE_BPS


@dataclass(frozen=True)
class RwaPlan:
    lightpaths: tuple[Lightpath, ...]
    occupancy: WdmOccupancy
    offered_bps: dict[int, float]
    per_demand_blocked_bps: dict[int, float]

    @property
    def total_offered_bps(self) -> float:
        return sum(self.offered_bps.values())

    @property
    def total_blocked_bps(self) -> float:
        return sum(self.per_demand_blocked_bps.values())

    def assignment(self) -> tuple[tuple[int, tuple[int, ...], int], ...]:
        """Lightpaths as plain ``(demand_id, nodes, slot)`` tuples, for comparisons."""
        return tuple((lp.demand_id, lp.path.nodes, lp.slot_index) for lp in self.lightpaths)


def first_fit_wavelength(path: Path, occupancy: WdmOccupancy) -> int | None:
    per_link = [occupancy.slots[l] for l in path.links]
    n_slots = min(len(s) for s in per_link)
    for i in range(n_slots):
        if not any(s[i] for s in per_link):
            return i
    return None


def qkd_feasible_after_add(
    path: Path,
    occupancy: WdmOccupancy,
    qkd_plan: QkdPlan,
    params: QkdParams,
) -> bool:
    """True when one more lit slot on every link of ``path`` keeps each link's
    key capacity at or above the QKD traffic it already carries."""
    for l in path.links:
        state = qkd_plan.link_states[l]
        if state.carried_bps <= 0:
            continue
        if not sustains(state.length_km, occupancy.active(l) + 1, state.carried_bps, params):
            return False
    return True


def plan_classical(
    topology: Topology,
    demands: TrafficMatrix,
    qkd_plan: QkdPlan,
    params: QkdParams,
    k: int = DEFAULT_K,
    channel_rate_bps: float = CHANNEL_RATE_BPS,
) -> RwaPlan:
    """Serve demands one lightpath at a time, most unallocated traffic first.

    A lightpath goes on the shortest of the ``k`` paths that has a common free
    slot and passes the QKD check; the lowest such slot is used. A residual
    smaller than one channel still takes a whole lightpath.
    """
    if k < 1:
        raise InputDomainError(f"k must be >= 1, got {k}")
    if not channel_rate_bps > 0:
        raise InputDomainError("channel rate must be > 0")

    occupancy = WdmOccupancy(topology)
    unallocated = {d.id: d.offered_bps for d in demands.demands}
    by_id = {d.id: d for d in demands.demands}
    # occupancy only grows, so a demand with no eligible path stays blocked
    stuck: set[int] = set()
    lightpaths: list[Lightpath] = []
    carried = {d.id: 0.0 for d in demands.demands}

    while True:
        pending = [i for i, u in unallocated.items() if u > 0 and i not in stuck]
        if not pending:
            break
        demand = by_id[min(pending, key=lambda i: (-unallocated[i], i))]

        chosen = None
        for path in k_shortest_paths(topology, demand.origin, demand.destination, k):
            slot = first_fit_wavelength(path, occupancy)
            if slot is None:
                continue
            if qkd_feasible_after_add(path, occupancy, qkd_plan, params):
                chosen = (path, slot)
                break
        if chosen is None:
            stuck.add(demand.id)
            continue

        path, slot = chosen
        occupancy.occupy(path, slot)
        lightpaths.append(Lightpath(demand.id, path, slot, channel_rate_bps))
        carried[demand.id] += channel_rate_bps
        unallocated[demand.id] = max(0.0, demand.offered_bps - carried[demand.id])

    offered = {d.id: d.offered_bps for d in demands.demands}
    blocked = {i: max(0.0, offered[i] - carried[i]) for i in offered}
    return RwaPlan(tuple(lightpaths), occupancy, offered, blocked)
