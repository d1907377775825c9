"""End-to-end scenarios (QKD first, then classical RWA) and parameter sweeps."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .cvqkd_model import QkdParams, link_key_capacity, sustains
from .errors import InputDomainError
from .network import (
    DEFAULT_K,
    DEFAULT_WDM_SLOTS,
    Topology,
    TrafficMatrix,
    build_topology,
    default_matrix,
    gravity_matrix,
    named_topology,
    scale_traffic_matrix,
)
from .qkd_planner import QkdPlan, plan_qkd
from .rwa import CHANNEL_RATE_BPS, RwaPlan, plan_classical

SWEEP_AXES = ("lam", "xi_r", "qkd_total_bps", "classical_total_bps", "margin")


@dataclass(frozen=True)
class TopologySpec:
    nodes: tuple[tuple[int, str], ...]
    connections: tuple[tuple[int, int, float], ...]


@dataclass(frozen=True)
class MatrixSpec:
    """Base traffic pattern: explicit ``(origin, destination, bps)`` entries or gravity weights."""

    entries: tuple[tuple[int, int, float], ...] | None = None
    weights: tuple[tuple[int, float], ...] | None = None

    def build(self, topology: Topology) -> TrafficMatrix:
        if self.entries is not None:
            matrix = TrafficMatrix.from_entries(self.entries)
        elif self.weights is not None:
            matrix = gravity_matrix(dict(self.weights), 1.0)
        else:
            return default_matrix(topology, 1.0)
        known = set(topology.node_ids)
        for d in matrix.demands:
            if d.origin not in known or d.destination not in known:
                raise InputDomainError(f"demand {d.id} references a node outside the topology")
        return matrix


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str = "scenario"
    topology: str | TopologySpec = "spain7"
    lam: float = 0.01
    wdm_slots: int = DEFAULT_WDM_SLOTS
    channel_rate_bps: float = CHANNEL_RATE_BPS
    k: int = DEFAULT_K
    margin: float = 0.0
    classical_total_bps: float = 10e12
    qkd_total_bps: float = 0.0
    classical_matrix: MatrixSpec = field(default_factory=MatrixSpec)
    qkd_matrix: MatrixSpec | None = None
    params: QkdParams = field(default_factory=QkdParams)

    def __post_init__(self):
        if not self.lam > 0:
            raise InputDomainError(f"lambda must be > 0, got {self.lam}")
        if self.k < 1:
            raise InputDomainError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.margin < 1:
            raise InputDomainError(f"margin must lie in [0, 1), got {self.margin}")
        if self.classical_total_bps < 0 or self.qkd_total_bps < 0:
            raise InputDomainError("offered totals must be >= 0")

    def with_axis(self, name: str, value: float) -> "ScenarioConfig":
        if name == "xi_r":
            return replace(self, params=replace(self.params, xi_r=value))
        if name not in SWEEP_AXES:
            raise InputDomainError(f"unknown sweep axis {name!r}")
        return replace(self, **{name: value})

    def build_topology(self) -> Topology:
        if isinstance(self.topology, TopologySpec):
            return build_topology(
                self.topology.nodes, self.topology.connections, self.lam, self.wdm_slots
            )
        return named_topology(self.topology, self.lam, self.wdm_slots)


@dataclass(frozen=True)
class LinkReport:
    link_id: int
    length_km: float
    n_slots_used: int
    carried_qkd_bps: float
    capacity_at_n_bps: float


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    lam: float
    xi_r: float
    margin: float
    offered_qkd_bps: float
    offered_classical_bps: float
    blocked_qkd_ratio: float | None
    blocked_classical_ratio: float | None
    unused_links: int | None
    avg_link_utilization: float | None
    links: tuple[LinkReport, ...] = ()
    runtime_ms: float = field(default=0.0, compare=False)
    error: str | None = None
    qkd_plan: QkdPlan | None = field(default=None, compare=False, repr=False)
    rwa_plan: RwaPlan | None = field(default=None, compare=False, repr=False)


def blocking_ratio(offered_bps: float, carried_bps: float) -> float:
    if offered_bps <= 0:
        return 0.0
    carried = min(max(carried_bps, 0.0), offered_bps)
    return (offered_bps - carried) / offered_bps


def _check_qkd_plan(plan: QkdPlan) -> None:
    for s in plan.link_states.values():
        assert 0 <= s.carried_bps <= s.effective_capacity_bps <= s.capacity_bps, s


def _check_rwa_plan(topology: Topology, rwa: RwaPlan, qkd: QkdPlan, params: QkdParams) -> None:
    counts = rwa.occupancy.counts()
    for lp in rwa.lightpaths:
        for l in lp.path.links:
            assert rwa.occupancy.slots[l][lp.slot_index], lp
    for s in qkd.link_states.values():
        assert counts[s.link_id] <= topology.link_by_id[s.link_id].wdm_slots
        assert sustains(s.length_km, counts[s.link_id], s.carried_bps, params), s


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    start = time.perf_counter()
    topology = config.build_topology()
    base_classical = config.classical_matrix.build(topology)
    base_qkd = (config.qkd_matrix or config.classical_matrix).build(topology)
    classical = scale_traffic_matrix(base_classical, config.classical_total_bps)
    qkd = scale_traffic_matrix(base_qkd, config.qkd_total_bps)
    params = config.params

    qkd_plan = plan_qkd(topology, qkd, params, config.margin, config.k)
    _check_qkd_plan(qkd_plan)
    rwa = plan_classical(topology, classical, qkd_plan, params, config.k, config.channel_rate_bps)
    _check_rwa_plan(topology, rwa, qkd_plan, params)

    counts = rwa.occupancy.counts()
    links = tuple(
        LinkReport(
            link.id,
            link.scaled_length_km,
            counts[link.id],
            qkd_plan.carried_on(link.id),
            link_key_capacity(link.scaled_length_km, counts[link.id], params),
        )
        for link in topology.links
    )
    utilization = sum(counts[l.id] / l.wdm_slots for l in topology.links) / len(topology.links)
    return ScenarioResult(
        scenario_id=config.scenario_id,
        lam=config.lam,
        xi_r=params.xi_r,
        margin=config.margin,
        offered_qkd_bps=qkd.total_offered_bps,
        offered_classical_bps=classical.total_offered_bps,
        # offered minus blocked, so a fully served plan gives exactly zero
        blocked_qkd_ratio=blocking_ratio(
            qkd_plan.total_offered_bps, qkd_plan.total_offered_bps - qkd_plan.total_blocked_bps
        ),
        blocked_classical_ratio=blocking_ratio(
            rwa.total_offered_bps, rwa.total_offered_bps - rwa.total_blocked_bps
        ),
        unused_links=sum(1 for l in topology.links if counts[l.id] == 0),
        avg_link_utilization=utilization,
        links=links,
        runtime_ms=(time.perf_counter() - start) * 1e3,
        qkd_plan=qkd_plan,
        rwa_plan=rwa,
    )


def _failed(base: ScenarioConfig, scenario_id: str, point: Mapping[str, float], exc: Exception):
    value = lambda name, default: point.get(name, default)  # noqa: E731
    return ScenarioResult(
        scenario_id=scenario_id,
        lam=value("lam", base.lam),
        xi_r=value("xi_r", base.params.xi_r),
        margin=value("margin", base.margin),
        offered_qkd_bps=value("qkd_total_bps", base.qkd_total_bps),
        offered_classical_bps=value("classical_total_bps", base.classical_total_bps),
        blocked_qkd_ratio=None,
        blocked_classical_ratio=None,
        unused_links=None,
        avg_link_utilization=None,
        error=f"{type(exc).__name__}: {exc}",
    )


def grid(axes: Mapping[str, Sequence[float]]) -> list[dict[str, float]]:
    """Cartesian product of ``axes`` in the given key order, last axis fastest."""
    if not axes:
        raise InputDomainError("sweep grid is empty")
    names = list(axes)
    for name in names:
        if name not in SWEEP_AXES:
            raise InputDomainError(f"unknown sweep axis {name!r}; known: {SWEEP_AXES}")
        if len(axes[name]) == 0:
            raise InputDomainError(f"sweep axis {name!r} has no values")
    return [dict(zip(names, values)) for values in itertools.product(*(axes[n] for n in names))]


def sweep(
    base: ScenarioConfig, axes: Mapping[str, Sequence[float]], threads: int = 1
) -> list[ScenarioResult]:
    """One result per grid point, in grid order. Failing points become error rows."""
    points = grid(axes)

    def evaluate(indexed: tuple[int, dict[str, float]]) -> ScenarioResult:
        idx, point = indexed
        scenario_id = f"{base.scenario_id}-{idx:04d}"
        try:
            cfg = replace(base, scenario_id=scenario_id)
            for name, value in point.items():
                cfg = cfg.with_axis(name, value)
            return run_scenario(cfg)
        except Exception as exc:  # recorded, the sweep goes on
            return _failed(base, scenario_id, point, exc)

    if threads <= 1:
        return [evaluate(p) for p in enumerate(points)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so output order is the grid order
        return list(pool.map(evaluate, enumerate(points)))


def load_at_blocking(
    results: Sequence[ScenarioResult], threshold: float, classical: bool = True
) -> float | None:
    """Smallest offered load whose blocking ratio exceeds ``threshold``, or None."""
    rows = sorted(
        (r for r in results if r.error is None),
        key=lambda r: r.offered_classical_bps if classical else r.offered_qkd_bps,
    )
    for r in rows:
        ratio = r.blocked_classical_ratio if classical else r.blocked_qkd_ratio
        if ratio > threshold:
            return r.offered_classical_bps if classical else r.offered_qkd_bps
    return None
