from dataclasses import replace

import numpy as np
import pytest

from cvqkd_wdm.cvqkd_model import QkdParams
from cvqkd_wdm.errors import InputDomainError
from cvqkd_wdm.sweep import (
    MatrixSpec,
    ScenarioConfig,
    TopologySpec,
    blocking_ratio,
    grid,
    load_at_blocking,
    run_scenario,
    sweep,
)


@pytest.mark.parametrize(
    "offered, carried, expected", [(0, 0, 0.0), (10, 10, 0.0), (4, 1, 0.75), (4, 9, 0.0)]
)
def test_blocking_ratio(offered, carried, expected):
    assert blocking_ratio(offered, carried) == expected


def test_empty_network():
    r = run_scenario(ScenarioConfig(classical_total_bps=0, qkd_total_bps=0))
    assert r.blocked_qkd_ratio == 0 and r.blocked_classical_ratio == 0
    assert r.unused_links == 16
    assert r.avg_link_utilization == 0
    assert len(r.links) == 16


def test_baseline_row():
    r = run_scenario(ScenarioConfig(classical_total_bps=10e12))
    assert r.blocked_classical_ratio < 0.01
    assert 0 <= r.avg_link_utilization <= 1
    assert r.error is None
    assert r.runtime_ms > 0


def test_utilization_matches_lightpaths():
    r = run_scenario(ScenarioConfig(classical_total_bps=12e12, qkd_total_bps=1e9))
    hops = sum(len(lp.path.links) for lp in r.rwa_plan.lightpaths)
    assert r.avg_link_utilization * 40 * 16 == pytest.approx(hops, rel=1e-12)
    assert sum(lr.n_slots_used for lr in r.links) == hops
    assert r.unused_links == sum(1 for lr in r.links if lr.n_slots_used == 0)


def test_run_is_pure():
    cfg = ScenarioConfig(classical_total_bps=15e12, qkd_total_bps=2e9, params=QkdParams(xi_r=10))
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a == b
    assert a.rwa_plan.assignment() == b.rwa_plan.assignment()


def test_qkd_plan_independent_of_downstream():
    base = ScenarioConfig(qkd_total_bps=3e9, classical_total_bps=5e12)
    ref = run_scenario(base).qkd_plan
    for cfg in (
        replace(base, classical_total_bps=25e12),
        replace(base, params=QkdParams(xi_r=10.0)),
        replace(base, channel_rate_bps=50e9),
    ):
        assert run_scenario(cfg).qkd_plan == ref


def test_custom_topology():
    topo = TopologySpec(((1, "a"), (2, "b"), (3, "c")), ((1, 2, 100.0), (2, 3, 100.0)))
    cfg = ScenarioConfig(topology=topo, classical_total_bps=600e9,
                         classical_matrix=MatrixSpec(entries=((1, 3, 1.0),)))
    r = run_scenario(cfg)
    assert r.blocked_classical_ratio == 0
    assert r.unused_links == 2  # reverse direction idle
    assert r.avg_link_utilization == pytest.approx(6 * 2 / (4 * 40))


def test_config_validation():
    with pytest.raises(InputDomainError):
        ScenarioConfig(lam=0)
    with pytest.raises(InputDomainError):
        ScenarioConfig(k=0)
    with pytest.raises(InputDomainError):
        ScenarioConfig(classical_total_bps=-1)
    with pytest.raises(InputDomainError):
        ScenarioConfig(margin=1)
    with pytest.raises(InputDomainError):
        ScenarioConfig().with_axis("wdm_slots", 3)


class TestGrid:
    def test_order(self):
        pts = grid({"lam": [1, 2], "margin": [0, 0.5, 0.7]})
        assert pts[:4] == [
            {"lam": 1, "margin": 0},
            {"lam": 1, "margin": 0.5},
            {"lam": 1, "margin": 0.7},
            {"lam": 2, "margin": 0},
        ]

    def test_errors(self):
        with pytest.raises(InputDomainError):
            grid({})
        with pytest.raises(InputDomainError):
            grid({"lam": []})
        with pytest.raises(InputDomainError):
            grid({"bogus": [1]})


AXES_100 = {
    "lam": [0.01],
    "xi_r": [1e-12, 10.0],
    "qkd_total_bps": list(np.logspace(6, 10, 5)),
    "classical_total_bps": list(np.linspace(2e12, 20e12, 10)),
}


def test_sweep_cardinality_and_ids():
    rows = sweep(ScenarioConfig(scenario_id="s"), AXES_100)
    assert len(rows) == 100
    assert [r.scenario_id for r in rows[:2]] == ["s-0000", "s-0001"]
    assert rows[0].xi_r == 1e-12 and rows[-1].xi_r == 10.0
    assert all(r.error is None for r in rows)


def test_threads_do_not_change_output():
    axes = {"xi_r": [1e-12, 10.0], "classical_total_bps": list(np.linspace(5e12, 25e12, 6))}
    base = ScenarioConfig(qkd_total_bps=1e9)
    serial = sweep(base, axes, threads=1)
    parallel = sweep(base, axes, threads=4)
    assert serial == parallel


def test_failed_point_becomes_error_row():
    rows = sweep(ScenarioConfig(), {"lam": [0.01, -1.0, 0.05], "classical_total_bps": [1e12]})
    assert len(rows) == 3
    assert rows[0].error is None and rows[2].error is None
    bad = rows[1]
    assert bad.error.startswith("InputDomainError")
    assert bad.lam == -1.0
    assert bad.blocked_classical_ratio is None and bad.unused_links is None


def test_load_at_blocking():
    rows = sweep(ScenarioConfig(), {"classical_total_bps": [10e12, 30e12, 20e12]})
    knee = load_at_blocking(rows, 0.05)
    ratios = {round(r.offered_classical_bps / 1e12): r.blocked_classical_ratio for r in rows}
    expected = min(t for t, b in ratios.items() if b > 0.05)
    assert knee == pytest.approx(expected * 1e12, rel=1e-12)
    assert load_at_blocking(rows, 1.0) is None


def test_higher_raman_never_helps():
    axes = {"xi_r": [1e-12, 1.0, 10.0, 100.0]}
    rows = sweep(ScenarioConfig(qkd_total_bps=1e9, classical_total_bps=15e12), axes)
    blocked = [r.blocked_classical_ratio for r in rows]
    assert blocked == sorted(blocked)


@pytest.mark.parametrize("lam", [0.01, 0.1])
def test_unused_links_non_decreasing_in_qkd(lam):
    base = ScenarioConfig(lam=lam, classical_total_bps=10e12, params=QkdParams(xi_r=1e-12))
    rows = sweep(base, {"qkd_total_bps": list(np.logspace(7, 10, 31))})
    unused = [r.unused_links for r in rows]
    assert all(isinstance(u, int) and 0 <= u <= 16 for u in unused)
    assert all(b >= a for a, b in zip(unused, unused[1:])), unused
