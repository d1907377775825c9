import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvqkd_wdm.cvqkd_model import QkdParams, link_key_capacity
from cvqkd_wdm.errors import InputDomainError
from cvqkd_wdm.network import TrafficMatrix, build_spanish_topology, default_matrix
from cvqkd_wdm.qkd_planner import QkdLinkState, plan_qkd, residual_capacity


def _check(plan, margin=0.0):
    load = {l: 0.0 for l in plan.link_states}
    for r in plan.routes:
        assert r.carried_bps > 0
        for l in r.path.links:
            load[l] += r.carried_bps
    for l, s in plan.link_states.items():
        assert 0 <= s.carried_bps <= s.effective_capacity_bps <= s.capacity_bps
        assert s.effective_capacity_bps == pytest.approx((1 - margin) * s.capacity_bps, rel=1e-15)
        assert s.carried_bps == pytest.approx(load[l], rel=1e-12, abs=1e-9)
    for d, offered in plan.offered_bps.items():
        carried = sum(r.carried_bps for r in plan.routes if r.demand_id == d)
        assert carried + plan.per_demand_blocked_bps[d] == pytest.approx(offered, rel=1e-12)


def test_residual_capacity():
    s = QkdLinkState(0, 3.91, 345e6, 0.99 * 345e6, 0.0)
    assert residual_capacity(s) == s.effective_capacity_bps
    full = QkdLinkState(0, 3.91, 345e6, 345e6, 345e6)
    assert residual_capacity(full) == 0.0
    s = QkdLinkState(0, 3.91, 345e6, 0.99 * 345e6, 100e6)
    assert residual_capacity(s) == pytest.approx(241.55e6, rel=1e-12)


def test_half_capacity_single_demand(spain, params):
    cap = link_key_capacity(spain.link_by_pair[(1, 2)].scaled_length_km, 0, params)
    plan = plan_qkd(spain, TrafficMatrix.from_entries([(1, 2, cap / 2)]), params)
    assert len(plan.routes) == 1
    assert plan.routes[0].path.nodes == (1, 2)
    assert plan.total_blocked_bps == 0
    _check(plan)


def test_saturating_single_path(spain, params):
    cap = link_key_capacity(spain.link_by_pair[(1, 2)].scaled_length_km, 0, params)
    plan = plan_qkd(spain, TrafficMatrix.from_entries([(1, 2, 3 * cap)]), params, k=1)
    assert plan.total_carried_bps == cap
    assert plan.total_blocked_bps == pytest.approx(2 * cap, rel=1e-12)
    assert plan.link_states[spain.link_by_pair[(1, 2)].id].carried_bps == cap
    _check(plan)


def test_split_over_alternative_paths(spain, params):
    # with k=5 the excess goes round the ring
    cap = link_key_capacity(spain.link_by_pair[(1, 2)].scaled_length_km, 0, params)
    plan = plan_qkd(spain, TrafficMatrix.from_entries([(1, 2, 1.5 * cap)]), params, k=5)
    assert len(plan.routes) == 2
    assert plan.total_blocked_bps == 0
    _check(plan)


def test_picks_largest_bottleneck(spain, params):
    # saturate the direct Madrid-Zaragoza link first, then route Madrid->Barcelona
    cap12 = link_key_capacity(spain.link_by_pair[(1, 2)].scaled_length_km, 0, params)
    m = TrafficMatrix.from_entries([(1, 2, cap12), (1, 3, 1e6)])
    plan = plan_qkd(spain, m, params, k=2)
    route13 = [r for r in plan.routes if r.demand_id == 1]
    assert [r.path.nodes for r in route13] == [(1, 4, 3)]


def test_margin_scales_capacity(spain, params):
    m = default_matrix(spain, 50e9)
    plan = plan_qkd(spain, m, params, margin=0.05)
    _check(plan, 0.05)
    assert plan.total_blocked_bps > 0


def test_zero_capacity_links(params):
    far = build_spanish_topology(1.0)
    plan = plan_qkd(far, default_matrix(far, 1e6), params)
    assert plan.routes == ()
    assert plan.total_blocked_bps == pytest.approx(1e6)


def test_ignores_raman(spain):
    m = default_matrix(spain, 3e9)
    a = plan_qkd(spain, m, QkdParams(xi_r=1e-12))
    b = plan_qkd(spain, m, QkdParams(xi_r=10.0))
    assert a == b


def test_deterministic(spain, params):
    m = default_matrix(spain, 4e9)
    assert plan_qkd(spain, m, params) == plan_qkd(spain, m, params)


def test_bad_arguments(spain, params):
    m = default_matrix(spain, 1e6)
    with pytest.raises(InputDomainError):
        plan_qkd(spain, m, params, margin=1.0)
    with pytest.raises(InputDomainError):
        plan_qkd(spain, m, params, k=0)


@settings(max_examples=25, deadline=None)
@given(
    lam=st.sampled_from([0.01, 0.05, 0.1]),
    total=st.floats(1e6, 2e10),
    margin=st.sampled_from([0.0, 0.01, 0.1]),
)
def test_plan_invariants(lam, total, margin):
    topo = build_spanish_topology(lam)
    _check(plan_qkd(topo, default_matrix(topo, total), QkdParams(), margin), margin)


@pytest.mark.parametrize("lam", [0.01, 0.1])
def test_carried_non_decreasing_under_scaling(lam):
    topo = build_spanish_topology(lam)
    p = QkdParams()
    totals = np.geomspace(1e7, 2e10, 120)
    carried = [plan_qkd(topo, default_matrix(topo, x), p).total_carried_bps for x in totals]
    drops = [(totals[i + 1], a, b) for i, (a, b) in enumerate(zip(carried, carried[1:])) if b < a * (1 - 1e-12)]
    assert not drops, f"{len(drops)} decreases, first at {drops[0][0]:.4g} bit/s: {drops[0][1]:.6g} -> {drops[0][2]:.6g}"
