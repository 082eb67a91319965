from dataclasses import replace

import pytest

from transitfreight.backends import solve
from transitfreight.bruteforce import brute_force_optimum
from transitfreight.compat import derive_compatibility
from transitfreight.instance import (
    Customer,
    Freighter,
    Instance,
    Line,
    Point,
    Stop,
    Trip,
    Truck,
)
from transitfreight.milp import ModelError
from transitfreight.model_full import (
    DecodeError,
    FullOptions,
    build_full,
    decode_full,
)
from transitfreight.validate import validate_plan

from conftest import MICRO1_T1, MICRO1_T3, MICRO1_TOTAL, make_micro1


def test_full_micro1_optimum(backend, micro1):
    compat = derive_compatibility(micro1)
    model = build_full(micro1, compat)
    result = solve(model, backend)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(MICRO1_TOTAL, abs=1e-4)
    plan = decode_full(micro1, model, result)
    assert validate_plan(micro1, plan) == []
    assert plan.costs.t1_cost == pytest.approx(MICRO1_T1, abs=1e-6)
    assert plan.costs.t3_cost == pytest.approx(MICRO1_T3, abs=1e-6)
    assert plan.costs.total == pytest.approx(result.objective, abs=1e-6)

    it = plan.itinerary_of("c1")
    assert it.truck == "d1"
    assert it.drop_in_stop == "A"
    assert it.trip in ("p1", "p2")
    assert it.drop_out_stop == "B"
    assert it.drop_in_time <= 150.0 + 1e-6 or it.trip == "p2"
    assert 200.0 - 1e-6 <= it.delivery_time <= 800.0 + 1e-6


def test_full_micro1_narrow_window_infeasible(backend):
    narrow = make_micro1(window=(150.0, 160.0))
    model = build_full(narrow, derive_compatibility(narrow))
    result = solve(model, backend)
    assert result.status == "infeasible"
    assert not brute_force_optimum(narrow).feasible  # oracle agrees


def test_decode_requires_solution(backend, micro1):
    narrow = make_micro1(window=(150.0, 160.0))
    model = build_full(narrow, derive_compatibility(narrow))
    result = solve(model, backend)
    with pytest.raises(DecodeError):
        decode_full(narrow, model, result)


def test_decode_rejects_fractional(backend, micro1):
    model = build_full(micro1, derive_compatibility(micro1))
    result = solve(model, backend)
    key = next(name for name in result.values if name.startswith("r["))
    result.values[key] = 0.5
    with pytest.raises(DecodeError, match="fractional"):
        decode_full(micro1, model, result)


def test_idle_freighter_omitted(backend):
    two = make_micro1(freighters=2)
    model = build_full(two, derive_compatibility(two))
    result = solve(model, backend)
    plan = decode_full(two, model, result)
    assert len(plan.freighter_routes) == 1  # the second stays home, free self-loop
    assert validate_plan(two, plan) == []


def test_symmetry_toggle_preserves_optimum(backend, micro1):
    two = make_micro1(freighters=2)
    compat = derive_compatibility(two)
    on = solve(build_full(two, compat, FullOptions(symmetry_breaking=True)), backend)
    off = solve(build_full(two, compat, FullOptions(symmetry_breaking=False)), backend)
    assert on.status == off.status == "optimal"
    assert on.objective == pytest.approx(off.objective, abs=1e-6)


def test_tampered_solution_flagged_by_validator(backend, micro1):
    model = build_full(micro1, derive_compatibility(micro1))
    result = solve(model, backend)
    plan = decode_full(micro1, model, result)
    # inflate the load: claim the package weighs its way onto a second run
    fat = replace(micro1, customers=(
        replace(micro1.customers[0], demand=170.0),))
    codes = {v.code for v in validate_plan(fat, plan)}
    assert "TRUCK_CAPACITY" in codes


def test_dual_role_stop_never_both_ends(backend):
    # M is drop-in and drop-out; the package must not use it for both
    instance = Instance(
        cdc=Point(0, 0),
        stops=(Stop("M", Point(10, 0), True, True, 10.0, 300.0),
               Stop("B", Point(50, 0), False, True, 10.0, 300.0)),
        lines=(Line("L1", ("M", "B")),),
        trips=(Trip("p1", "L1", {"M": 150.0, "B": 158.0}, 60.0),
               Trip("p2", "L1", {"M": 180.0, "B": 188.0}, 60.0)),
        trucks=(Truck("d1", 160.0),),
        freighters=(Freighter("fM", "M", 20.0), Freighter("fB", "B", 20.0)),
        customers=(Customer("c1", Point(52, 2), 10.0, 200.0, 800.0, 0.0,
                            frozenset({"M", "B"})),),
    )
    instance.validate()
    model = build_full(instance, derive_compatibility(instance))
    result = solve(model)
    assert result.status == "optimal"
    plan = decode_full(instance, model, result)
    it = plan.itinerary_of("c1")
    assert it.drop_in_stop != it.drop_out_stop
    assert validate_plan(instance, plan) == []


def test_service_cost_consolidates_stops(backend):
    """With a large per-visit cost the truck uses one drop-in stop, not two."""
    instance = Instance(
        cdc=Point(0, 0),
        stops=(
            Stop("A1", Point(10, 6), True, False, 10.0, 300.0),
            Stop("A2", Point(10, -6), True, False, 10.0, 300.0),
            Stop("B", Point(50, 0), False, True, 10.0, 300.0),
        ),
        lines=(Line("L1", ("A1", "B")), Line("L2", ("A2", "B"))),
        trips=(
            Trip("p1", "L1", {"A1": 150.0, "B": 159.0}, 60.0),
            Trip("p2", "L2", {"A2": 150.0, "B": 159.5}, 60.0),
            Trip("p3", "L1", {"A1": 180.0, "B": 189.0}, 60.0),
            Trip("p4", "L2", {"A2": 180.0, "B": 189.5}, 60.0),
        ),
        trucks=(Truck("d1", 160.0),),
        freighters=(Freighter("f1", "B", 50.0), Freighter("f2", "B", 50.0)),
        customers=(
            Customer("u", Point(52, 4), 10.0, 200.0, 800.0, 0.0, frozenset({"B"})),
            Customer("v", Point(52, -4), 10.0, 200.0, 800.0, 0.0, frozenset({"B"})),
        ),
    )
    instance.validate()
    compat = derive_compatibility(instance)

    base = solve(build_full(instance, compat), backend)
    base_plan = decode_full(instance, build_full(instance, compat), base)
    base_stops = {it.drop_in_stop for it in base_plan.itineraries}

    lam = 10.0 * base_plan.costs.t1_cost
    priced = build_full(instance, compat, FullOptions(
        service_cost_mu=10.0, lambda1=lam, lambda3=10.0 * base_plan.costs.t3_cost))
    result = solve(priced, backend)
    assert result.status == "optimal"
    plan = decode_full(instance, priced, result)
    used = {it.drop_in_stop for it in plan.itineraries}
    assert len(used) <= len(base_stops)
    assert len(used) == 1
    assert plan.costs.service_cost > 0
    assert plan.costs.total == pytest.approx(result.objective, abs=1e-6)
    assert validate_plan(instance, plan) == []


def test_service_cost_needs_lambdas():
    with pytest.raises(ModelError, match="reference"):
        FullOptions(service_cost_mu=1.0)


def test_full_matches_oracle_on_dual_role(backend):
    instance = Instance(
        cdc=Point(0, 0),
        stops=(Stop("M", Point(10, 0), True, True, 10.0, 300.0),
               Stop("B", Point(50, 0), False, True, 10.0, 300.0)),
        lines=(Line("L1", ("M", "B")),),
        trips=(Trip("p1", "L1", {"M": 150.0, "B": 158.0}, 60.0),
               Trip("p2", "L1", {"M": 180.0, "B": 188.0}, 60.0)),
        trucks=(Truck("d1", 160.0),),
        freighters=(Freighter("fM", "M", 20.0), Freighter("fB", "B", 20.0)),
        customers=(Customer("c1", Point(52, 2), 10.0, 200.0, 800.0, 0.0,
                            frozenset({"M", "B"})),),
    )
    instance.validate()
    outcome = brute_force_optimum(instance)
    result = solve(build_full(instance, derive_compatibility(instance)), backend)
    assert outcome.feasible and result.status == "optimal"
    assert result.objective == pytest.approx(outcome.cost, abs=1e-4)
