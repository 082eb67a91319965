import math

import pytest
from hypothesis import given, strategies as st

from transitfreight.compat import (
    UnreachableCustomerError,
    derive_compatibility,
    stop_precedes,
)
from transitfreight.instance import (
    CostParams,
    Customer,
    Freighter,
    Instance,
    InstanceError,
    Line,
    Point,
    Stop,
    Trip,
    Truck,
    euclidean_distance,
    parse_instance,
    serialize_instance,
    travel_time,
)

from conftest import make_micro1

coords = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
points = st.builds(Point, coords, coords)


def test_distance_345_triangle():
    assert euclidean_distance(Point(0, 0), Point(3, 4)) == pytest.approx(5.0)


def test_distance_identity():
    p = Point(7.25, -3.5)
    assert euclidean_distance(p, p) == 0.0


def test_distance_hand_computed():
    assert euclidean_distance(Point(0, 0), Point(52, 2)) == pytest.approx(
        math.sqrt(52**2 + 2**2))


@given(points, points)
def test_distance_symmetry(a, b):
    assert euclidean_distance(a, b) == pytest.approx(euclidean_distance(b, a))
    assert euclidean_distance(a, b) >= 0.0


@given(points, points, points)
def test_distance_triangle_inequality(a, b, c):
    assert euclidean_distance(a, c) <= (
        euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-7)


def test_travel_time_examples():
    params = CostParams()
    assert travel_time(100.0, params) == pytest.approx(20.0)
    assert travel_time(0.0, params) == 0.0
    d = euclidean_distance(Point(0, 0), Point(52, 2))
    assert travel_time(d, params) == pytest.approx(0.2 * d)


def test_point_must_be_finite():
    with pytest.raises(InstanceError):
        Point(float("nan"), 0.0)


# ---- compatibility -----------------------------------------------------


def test_micro1_compatibility(micro1):
    compat = derive_compatibility(micro1)
    assert compat.s_in_of_customer["c1"] == frozenset({"A"})
    assert compat.trips_of_stop["A"] == ("p1", "p2")
    assert compat.customers_of_dropin["A"] == frozenset({"c1"})
    assert compat.customers_of_dropout["B"] == frozenset({"c1"})


def test_single_speed_average_times(micro1):
    compat = derive_compatibility(micro1)
    params = micro1.cost_params
    assert compat.avg_truck_time["A"] == pytest.approx(
        travel_time(euclidean_distance(micro1.cdc, micro1.stop("A").location), params))
    assert compat.avg_freighter_time[("B", "c1")] == pytest.approx(
        travel_time(euclidean_distance(micro1.stop("B").location,
                                       micro1.customer("c1").location), params))


def test_unreachable_customer_is_an_error():
    # the only candidate drop-out is the first stop of the line
    instance = Instance(
        cdc=Point(0, 0),
        stops=(Stop("B", Point(5, 0), False, True, 10.0, 300.0),
               Stop("A", Point(10, 0), True, False, 10.0, 300.0)),
        lines=(Line("L1", ("B", "A")),),
        trips=(Trip("p1", "L1", {"B": 150.0, "A": 155.0}, 60.0),),
        trucks=(Truck("d1", 160.0),),
        freighters=(Freighter("f1", "B", 20.0),),
        customers=(Customer("c1", Point(6, 1), 5.0, 200.0, 500.0, 0.0,
                            frozenset({"B"})),),
    )
    instance.validate()
    with pytest.raises(UnreachableCustomerError, match="unreachable"):
        derive_compatibility(instance)


def test_shared_stop_merges_trips_of_both_lines():
    shared = Stop("S", Point(20, 0), False, True, 10.0, 300.0)
    instance = Instance(
        cdc=Point(0, 0),
        stops=(Stop("A1", Point(5, 0), True, False, 10.0, 300.0),
               Stop("A2", Point(5, 5), True, False, 10.0, 300.0),
               shared),
        lines=(Line("L1", ("A1", "S")), Line("L2", ("A2", "S"))),
        trips=(Trip("p1", "L1", {"A1": 150.0, "S": 155.0}, 60.0),
               Trip("p2", "L2", {"A2": 160.0, "S": 166.0}, 60.0)),
        trucks=(Truck("d1", 160.0),),
        freighters=(Freighter("f1", "S", 20.0),),
        customers=(Customer("c1", Point(21, 1), 5.0, 200.0, 800.0, 0.0,
                            frozenset({"S"})),),
    )
    instance.validate()
    compat = derive_compatibility(instance)
    assert set(compat.trips_of_stop["S"]) == {"p1", "p2"}
    assert compat.s_in_of_customer["c1"] == frozenset({"A1", "A2"})


@given(st.integers(min_value=3, max_value=8), st.data())
def test_line_order_is_transitive(n, data):
    stop_ids = [f"s{i}" for i in range(n)]
    instance_line = Line("L", tuple(stop_ids))
    i, j, k = sorted(data.draw(
        st.lists(st.integers(0, n - 1), min_size=3, max_size=3, unique=True)))
    order = instance_line.ordered_stops

    def precedes(a, b):
        return order.index(a) < order.index(b)

    if precedes(stop_ids[i], stop_ids[j]) and precedes(stop_ids[j], stop_ids[k]):
        assert precedes(stop_ids[i], stop_ids[k])


def test_stop_precedes(micro1):
    assert stop_precedes(micro1, "L1", "A", "B")
    assert not stop_precedes(micro1, "L1", "B", "A")
    assert not stop_precedes(micro1, "L1", "A", "A")


# ---- serialization -----------------------------------------------------


def test_round_trip_is_identity(micro1):
    text = serialize_instance(micro1)
    again = parse_instance(text)
    assert again == micro1
    assert serialize_instance(again) == text


def test_missing_trips_field():
    import json
    doc = json.loads(serialize_instance(make_micro1()))
    del doc["trips"]
    with pytest.raises(InstanceError, match="missing field trips"):
        parse_instance(json.dumps(doc))


def test_decreasing_stop_times_rejected():
    import json
    doc = json.loads(serialize_instance(make_micro1()))
    doc["trips"][0]["stop_times"] = {"A": 150.0, "B": 140.0}
    with pytest.raises(InstanceError, match="stop_times not increasing"):
        parse_instance(json.dumps(doc))


def test_schema_tag_checked():
    import json
    doc = json.loads(serialize_instance(make_micro1()))
    doc["schema"] = "something-else"
    with pytest.raises(InstanceError, match="unsupported schema"):
        parse_instance(json.dumps(doc))


def test_invariant_messages():
    with pytest.raises(InstanceError, match="neither drop-in nor drop-out"):
        Instance(
            cdc=Point(0, 0),
            stops=(Stop("A", Point(1, 0), False, False, 0.0, 0.0),
                   Stop("B", Point(2, 0), False, True, 0.0, 0.0)),
            lines=(Line("L", ("A", "B")),),
            trips=(Trip("p", "L", {"A": 1.0, "B": 2.0}, 10.0),),
            trucks=(Truck("d", 10.0),),
            freighters=(Freighter("f", "B", 10.0),),
            customers=(Customer("c", Point(0, 0), 1.0, 0.0, 10.0, 0.0,
                                frozenset({"B"})),),
        ).validate()

    bad_window = make_micro1()
    from dataclasses import replace
    broken = replace(bad_window, customers=(
        replace(bad_window.customers[0], window_lo=500.0, window_hi=400.0),))
    with pytest.raises(InstanceError, match="window_lo"):
        broken.validate()

    no_freighter = replace(make_micro1(), freighters=())
    with pytest.raises(InstanceError, match="no freighter"):
        no_freighter.validate()
