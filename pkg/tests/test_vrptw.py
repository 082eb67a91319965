import math

import pytest

from transitfreight.backends import solve
from transitfreight.instance import Customer, Point, Truck
from transitfreight.validate import recompute_vrptw_cost, validate_vrptw_plan
from transitfreight.vrptw import build_vrptw, decode_vrptw

from conftest import MICRO1_VRPTW, make_micro1


def test_vrptw_micro1(backend, micro1):
    model = build_vrptw(micro1)
    result = solve(model, backend)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(MICRO1_VRPTW, abs=1e-4)
    plan = decode_vrptw(micro1, model, result)
    assert validate_vrptw_plan(micro1, plan) == []
    # the decoded plan recomputes the objective exactly from rounded routes
    assert plan.total_cost == pytest.approx(2 * math.sqrt(52**2 + 2**2), abs=1e-9)
    assert recompute_vrptw_cost(micro1, plan) == pytest.approx(plan.total_cost, abs=1e-9)
    assert len(plan.routes) == 1
    assert plan.routes[0].customers == ("c1",)
    assert 200.0 - 1e-6 <= plan.routes[0].times[0] <= 800.0 + 1e-6


def test_vrptw_no_customers_costs_nothing(backend):
    from dataclasses import replace
    empty = replace(make_micro1(), customers=())
    model = build_vrptw(empty)
    result = solve(model, backend)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(0.0, abs=1e-9)
    plan = decode_vrptw(empty, model, result)
    assert plan.routes == ()


def test_vrptw_window_packing(backend):
    """Two far-apart customers: one sweep when windows allow, two when not."""
    from dataclasses import replace

    def variant(win_u, win_v):
        base = make_micro1()
        return replace(base, customers=(
            Customer("u", Point(100, 0), 10.0, win_u[0], win_u[1], 0.0, frozenset({"B"})),
            Customer("v", Point(200, 0), 10.0, win_v[0], win_v[1], 0.0, frozenset({"B"})),
        ), trucks=(Truck("d1", 160.0), Truck("d2", 160.0)))

    relaxed = variant((60.0, 900.0), (60.0, 900.0))
    result = solve(build_vrptw(relaxed), backend)
    assert result.status == "optimal"
    # one truck out-and-back through both: 200 + 200
    assert result.objective == pytest.approx(400.0, abs=1e-4)

    # both windows so tight that neither visiting order can chain them
    clashing = variant((80.0, 90.0), (85.0, 95.0))
    result = solve(build_vrptw(clashing), backend)
    assert result.status == "optimal"
    # two dedicated round trips: 2*100 + 2*200
    assert result.objective == pytest.approx(600.0, abs=1e-4)


def test_vrptw_baseline_exceeds_three_tier_on_micro1(backend, micro1):
    from transitfreight.compat import derive_compatibility
    from transitfreight.model_full import build_full
    three_tier = solve(build_full(micro1, derive_compatibility(micro1)), backend)
    direct = solve(build_vrptw(micro1), backend)
    assert direct.objective > three_tier.objective  # 104.08 vs 22.83
