"""Tier models for the three decomposition pipelines.

Pipelines differ in which tier commits first:
  * transit-first: assign stops/trips in one transit model, then route trucks
    to the fixed drop-in times and freighters from the fixed drop-out times
    (the drop-out side separates into one routing model per stop);
  * truck-first: route trucks under approximate delivery-deadline cuts and a
    half-day split, then pick trips and drop-out stops, then freighters;
  * freighter-first: pick drop-out stops and freighter routes seeded by each
    stop's first trip arrival, repair the visit times backward from the
    window closings, then pick trips, then route trucks.

The transit model supports three surrogate objectives: used-stop count,
distance proxies, and an estimated freighter count per period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .compat import Compatibility
from .instance import Instance, euclidean_distance
from .milp import MilpModel, ModelBuilder, ModelError, SolveResult, big_M
from .model_full import (
    CDC_NODE,
    add_freighter_routing,
    add_transit_flow,
    add_truck_routing,
    freighter_cost,
    truck_cost,
    _binary_value,
)
from .plan import FreighterRoute, TierHandoff, TruckRoute

OBJ1, OBJ2, OBJ3 = "obj1", "obj2", "obj3"
DEADLINE_SLACK_FACTOR = 1.3  # stretches the direct-access time estimate into a journey estimate


class ModelBuildError(ModelError):
    """A tier model cannot be built because its inputs admit no solution."""


@dataclass(frozen=True)
class T2Objective:
    tag: str
    # resolved lazily for the freighter-count estimate
    mean_freighter_capacity: float | None = None
    period_length: float | None = None
    period_count: int | None = None

    def __post_init__(self) -> None:
        if self.tag not in (OBJ1, OBJ2, OBJ3):
            raise ModelError(f"unknown transit objective {self.tag!r}")

    @classmethod
    def parse(cls, tag: str) -> "T2Objective":
        return cls(tag=tag.lower())


@dataclass(frozen=True)
class TransitChoice:
    """Decoded transit decision for one package."""

    trip: str
    drop_in: str
    pickup_time: float
    drop_out: str
    drop_time: float


# ---- shared surrogate-objective machinery ------------------------------


def _attach_used_stop_flags(mb: ModelBuilder, M: float,
                            pickup_side: bool, drop_side: bool) -> list:
    """Binary flags that switch on when any package touches a stop."""
    terms = []
    if pickup_side:
        by_stop: dict[str, list] = {}
        for (i, s, p), var in mb.family_items("y1"):
            by_stop.setdefault(s, []).append(var)
        for s in sorted(by_stop):
            flag = mb.binary("phi1", s)
            mb.add([(v, 1.0) for v in by_stop[s]] + [(flag, -M)],
                   "<=", 0.0, f"used_in[{s}]")
            terms.append((flag, 1.0))
    if drop_side:
        by_stop = {}
        for (i, s, p), var in mb.family_items("y2"):
            by_stop.setdefault(s, []).append(var)
        for s in sorted(by_stop):
            flag = mb.binary("phi2", s)
            mb.add([(v, 1.0) for v in by_stop[s]] + [(flag, -M)],
                   "<=", 0.0, f"used_out[{s}]")
            terms.append((flag, 1.0))
    return terms


def _attach_freighter_estimate(mb: ModelBuilder, instance: Instance,
                               objective: T2Objective) -> list:
    """Integer per-period freighter counts covering dropped volume."""
    params = instance.cost_params
    qf = objective.mean_freighter_capacity
    if qf is None:
        qf = sum(k.capacity for k in instance.freighters) / len(instance.freighters)
    length = objective.period_length or params.period_length
    count = objective.period_count or params.period_count
    total_demand = sum(c.demand for c in instance.customers)
    h_ub = math.ceil(total_demand / qf) + 1

    dropped: dict[tuple[str, int], list] = {}
    for (i, s, p), var in mb.family_items("y2"):
        t = instance.trip(p).stop_times[s]
        period = min(int(t // length), count - 1)
        dropped.setdefault((s, period), []).append((i, var))
    terms = []
    for (s, period), entries in sorted(dropped.items()):
        h = mb.integer("h", s, period, lb=0.0, ub=float(h_ub))
        mb.add([(var, instance.customer(i).demand) for i, var in entries]
               + [(h, -qf)],
               "<=", 0.0, f"freighters_needed[{s},{period}]")
        terms.append((h, 1.0))
    return terms


def _distance_proxy_terms(mb: ModelBuilder, instance: Instance,
                          pickup_side: bool, drop_side: bool) -> list:
    terms = []
    if pickup_side:
        for (i, s, p), var in mb.family_items("y1"):
            terms.append((var, euclidean_distance(instance.cdc, instance.stop(s).location)))
    if drop_side:
        for (i, s, p), var in mb.family_items("y2"):
            terms.append((var, euclidean_distance(
                instance.customer(i).location, instance.stop(s).location)))
    return terms


def _set_transit_objective(mb: ModelBuilder, instance: Instance, objective: T2Objective,
                           M: float, pickup_side: bool, drop_side: bool) -> None:
    if objective.tag == OBJ1:
        mb.set_objective(_attach_used_stop_flags(mb, M, pickup_side, drop_side))
    elif objective.tag == OBJ2:
        mb.set_objective(_distance_proxy_terms(mb, instance, pickup_side, drop_side))
    else:
        mb.set_objective(_attach_freighter_estimate(mb, instance, objective))


# ---- transit-first: the transit model ----------------------------------


def build_d2_t2(instance: Instance, compat: Compatibility,
                objective: T2Objective) -> MilpModel:
    """Assign stops/trips to every package before either road tier is solved.

    Pickups are restricted to trips a truck could feed in time; drops are
    restricted so a freighter can still meet the window's closing.
    """
    params = instance.cost_params
    M = big_M(params)
    mb = ModelBuilder("d2-t2")

    def in_ok(cust, stop, trip) -> bool:
        lead = compat.avg_truck_time[stop.id] + stop.service_time
        return trip.stop_times[stop.id] >= lead - 1e-9

    def out_ok(cust, stop, trip) -> bool:
        eta = (trip.stop_times[stop.id] + compat.avg_freighter_time[(stop.id, cust.id)]
               + stop.service_time + cust.service_time)
        return eta <= cust.window_hi + 1e-9

    add_transit_flow(mb, instance, compat, M, in_ok=in_ok, out_ok=out_ok,
                     infeasible_tag="T2 infeasible")
    _set_transit_objective(mb, instance, objective, M, pickup_side=True, drop_side=True)
    return mb.build(objective_tag=objective.tag)


def decode_transit(instance: Instance, model: MilpModel,
                   result: SolveResult) -> dict[str, TransitChoice]:
    picked: dict[str, tuple[str, str]] = {}
    dropped: dict[str, tuple[str, str]] = {}
    for (i, s, p), var in model.family("y1").items():
        if _binary_value(result.values, var):
            picked[i] = (s, p)
    for (i, s, p), var in model.family("y2").items():
        if _binary_value(result.values, var):
            dropped[i] = (s, p)
    choices = {}
    for cust in instance.customers:
        s_in, p_in = picked[cust.id]
        s_out, p_out = dropped[cust.id]
        trip = instance.trip(p_in)
        choices[cust.id] = TransitChoice(
            trip=p_in, drop_in=s_in, pickup_time=trip.stop_times[s_in],
            drop_out=s_out, drop_time=instance.trip(p_out).stop_times[s_out])
    return choices


def handoff_from_transit(choices: dict[str, TransitChoice]) -> TierHandoff:
    return TierHandoff(
        b_in={c: ch.drop_in for c, ch in choices.items()},
        t_in={c: ch.pickup_time for c, ch in choices.items()},
        b_out={c: ch.drop_out for c, ch in choices.items()},
        t_out={c: ch.drop_time for c, ch in choices.items()},
    )


# ---- truck model fed by a handoff --------------------------------------


def build_t1_from_handoff(instance: Instance, handoff: TierHandoff) -> MilpModel:
    """Route trucks so every package reaches its fixed stop by its fixed time."""
    params = instance.cost_params
    M = big_M(params)
    for cust in instance.customers:
        stop = instance.stop(handoff.b_in[cust.id])
        earliest = (instance.travel_minutes(instance.cdc, stop.location)
                    + stop.service_time)
        if handoff.t_in[cust.id] < earliest - 1e-9:
            raise ModelBuildError(
                f"customer {cust.id}: pickup at {handoff.t_in[cust.id]:g} precedes the "
                f"earliest truck arrival {earliest:g} at stop {stop.id}")

    mb = ModelBuilder("t1-handoff")
    ctx = add_truck_routing(mb, instance, M, symmetry=True)
    dropins, tails = ctx["dropins"], ctx["tails"]

    for cust in instance.customers:
        for d in instance.trucks:
            mb.binary("r", cust.id, d.id)
    for d in instance.trucks:
        for v in dropins:
            mb.binary("g", d.id, v)

    for cust in instance.customers:
        mb.add([(mb.get("r", cust.id, d.id), 1.0) for d in instance.trucks],
               "=", 1.0, f"assign[{cust.id}]")
    for d in instance.trucks:
        mb.add([(mb.get("r", c.id, d.id), c.demand) for c in instance.customers],
               "<=", d.capacity, f"truck_cap[{d.id}]")
        for v in dropins:
            # g mirrors the incoming arcs and dominates the assignments
            mb.add([(mb.get("g", d.id, v), 1.0)]
                   + [(mb.get("w", u, v, d.id), -1.0) for u in tails if u != v],
                   "=", 0.0, f"visit_link[{v},{d.id}]")
    for cust in instance.customers:
        v = handoff.b_in[cust.id]
        t_in = handoff.t_in[cust.id]
        dwell = instance.stop(v).max_dwell
        for d in instance.trucks:
            mb.add([(mb.get("g", d.id, v), 1.0), (mb.get("r", cust.id, d.id), -1.0)],
                   ">=", 0.0, f"visit_if_carrying[{cust.id},{d.id}]")
            # arrive before the pickup, and not more than the dwell cap earlier
            mb.add([(mb.get("t1", v, d.id), 1.0), (mb.get("r", cust.id, d.id), M)],
                   "<=", t_in + M, f"before_pickup[{cust.id},{d.id}]")
            mb.add([(mb.get("g", d.id, v), t_in), (mb.get("t1", v, d.id), -1.0),
                    (mb.get("r", cust.id, d.id), M)],
                   "<=", dwell + M, f"dwell_in[{cust.id},{d.id}]")

    mb.set_objective(_truck_arc_costs(mb, instance))
    return mb.build()


def _truck_arc_costs(mb: ModelBuilder, instance: Instance) -> list:
    from .model_full import CDC_SINK
    terms = []
    for (u, v, _d), var in mb.family_items("w"):
        a = instance.cdc if u in (CDC_NODE, CDC_SINK) else instance.stop(u).location
        b = instance.cdc if v in (CDC_NODE, CDC_SINK) else instance.stop(v).location
        cost = truck_cost(instance, a, b)
        if cost:
            terms.append((var, cost))
    return terms


def _freighter_arc_costs(mb: ModelBuilder, instance: Instance) -> list:
    stop_ids = {s.id for s in instance.stops}
    terms = []
    for (i, j, _k), var in mb.family_items("x"):
        if i == j:
            continue
        loc_i = instance.stop(i).location if i in stop_ids else instance.customer(i).location
        loc_j = instance.stop(j).location if j in stop_ids else instance.customer(j).location
        cost = freighter_cost(instance, loc_i, loc_j)
        if cost:
            terms.append((var, cost))
    return terms


def decode_t1(instance: Instance, model: MilpModel, result: SolveResult,
              handoff: TierHandoff) -> tuple[list[TruckRoute], dict[str, str], dict[str, float]]:
    """Returns (routes, customer->truck, customer->time at its drop-in stop)."""
    from .model_full import decode_truck_routes
    routes = decode_truck_routes(instance, model, result.values)
    truck_of: dict[str, str] = {}
    family = model.family("r")
    for (i, d), var in family.items():
        if _binary_value(result.values, var):
            truck_of[i] = d
    stop_time = {(r.truck, s): t for r in routes for s, t in zip(r.stops, r.times)}
    time_at_stop = {
        i: stop_time[(truck_of[i], handoff.b_in[i])] for i in truck_of
    }
    return routes, truck_of, time_at_stop


# ---- per-stop freighter model fed by a handoff --------------------------


def build_t3_stopwise(instance: Instance, stop_id: str, customers_of_stop: list[str],
                      handoff: TierHandoff) -> MilpModel:
    """Route one stop's freighters for its already-fixed drop-off times."""
    params = instance.cost_params
    M = big_M(params)
    stop = instance.stop(stop_id)
    for cid in customers_of_stop:
        cust = instance.customer(cid)
        t_out = handoff.t_out[cid]
        eta = (t_out + stop.service_time
               + instance.travel_minutes(stop.location, cust.location)
               + cust.service_time)
        if eta > cust.window_hi + 1e-9:
            raise ModelBuildError(
                f"stop {stop_id}: customer {cid} cannot be reached before its window "
                f"closes (earliest arrival {eta:g} > {cust.window_hi:g})")

    mb = ModelBuilder("t3-stopwise")
    # only this stop's freighters take part
    add_freighter_routing(mb, instance, M, symmetry=True,
                          customers_of_stop={stop_id: sorted(customers_of_stop)})

    fleet = instance.freighters_of_stop(stop_id)
    for cid in sorted(customers_of_stop):
        mb.add([(mb.get("z", cid, k.id), 1.0) for k in fleet],
               "=", 1.0, f"serve_once[{cid}]")
        t_out = handoff.t_out[cid]
        for k in fleet:
            # leave only after the package is on hand, within the dwell cap
            mb.add([(mb.get("t3", stop_id, k.id), 1.0),
                    (mb.get("z", cid, k.id), -t_out)],
                   ">=", stop.service_time, f"load_first[{cid},{k.id}]")
            mb.add([(mb.get("t3", stop_id, k.id), 1.0), (mb.get("z", cid, k.id), M)],
                   "<=", stop.max_dwell + t_out + M, f"dwell_out[{cid},{k.id}]")

    mb.set_objective(_freighter_arc_costs(mb, instance))
    return mb.build(stop=stop_id)


def decode_t3_stopwise(instance: Instance, model: MilpModel,
                       result: SolveResult) -> list[FreighterRoute]:
    from .model_full import decode_freighter_routes
    return decode_freighter_routes(instance, model, result.values)


# ---- truck-first pipeline ----------------------------------------------


def preprocess_midday(instance: Instance, compat: Compatibility) -> dict[tuple[str, str], int]:
    """Half-of-day tag per (customer, drop-in stop) pair.

    A package must start in the first half when, working back from the
    window's closing through the dwell allowance and the stretched direct
    travel estimate, it could not otherwise arrive in time.
    """
    params = instance.cost_params
    tau: dict[tuple[str, str], int] = {}
    for cust in instance.customers:
        for sid in sorted(compat.s_in_of_customer[cust.id]):
            stop = instance.stop(sid)
            journey = DEADLINE_SLACK_FACTOR * instance.travel_minutes(stop.location, cust.location)
            latest_start = cust.window_hi - stop.max_dwell - journey
            tau[(cust.id, sid)] = 1 if latest_start <= params.t_mid_day else 2
    return tau


def build_d1_t1(instance: Instance, compat: Compatibility,
                tau: dict[tuple[str, str], int]) -> MilpModel:
    """Truck routing committed first, under deadline cuts and a half-day split."""
    params = instance.cost_params
    M = big_M(params)
    mb = ModelBuilder("d1-t1")
    ctx = add_truck_routing(mb, instance, M, symmetry=True)
    dropins, tails = ctx["dropins"], ctx["tails"]

    cut_bound: dict[tuple[str, str], float] = {}
    for cust in instance.customers:
        t_avg = (cust.window_lo + cust.window_hi) / 2.0
        any_usable = False
        for sid in sorted(compat.s_in_of_customer[cust.id]):
            stop = instance.stop(sid)
            bound = t_avg - DEADLINE_SLACK_FACTOR * instance.travel_minutes(
                stop.location, cust.location)
            cut_bound[(cust.id, sid)] = bound
            earliest = instance.travel_minutes(instance.cdc, stop.location) + stop.service_time
            lo = params.t_mid_day if tau[(cust.id, sid)] == 2 else earliest
            if bound >= lo - 1e-9:
                any_usable = True
        if not any_usable:
            raise ModelBuildError(
                f"customer {cust.id}: every drop-in stop misses the deadline cut")

    for cust in instance.customers:
        for sid in sorted(compat.s_in_of_customer[cust.id]):
            for d in instance.trucks:
                mb.binary("r", cust.id, sid, d.id)
    for cust in instance.customers:
        mb.add([(mb.get("r", cust.id, s, d.id), 1.0)
                for s in sorted(compat.s_in_of_customer[cust.id])
                for d in instance.trucks],
               "=", 1.0, f"assign[{cust.id}]")
    for d in instance.trucks:
        terms = []
        for cust in instance.customers:
            for s in sorted(compat.s_in_of_customer[cust.id]):
                terms.append((mb.get("r", cust.id, s, d.id), cust.demand))
        mb.add(terms, "<=", d.capacity, f"truck_cap[{d.id}]")
    for d in instance.trucks:
        for v in dropins:
            carried = [(mb.get("r", c.id, v, d.id), -1.0 / M)
                       for c in instance.customers
                       if mb.get("r", c.id, v, d.id) is not None]
            if not carried:
                continue
            mb.add([(mb.get("w", u, v, d.id), 1.0) for u in tails if u != v] + carried,
                   ">=", 0.0, f"visit_if_assigned[{v},{d.id}]")

    for cust in instance.customers:
        for sid in sorted(compat.s_in_of_customer[cust.id]):
            bound = cut_bound[(cust.id, sid)]
            for d in instance.trucks:
                r_var = mb.get("r", cust.id, sid, d.id)
                mb.add([(mb.get("t1", sid, d.id), 1.0), (r_var, M)],
                       "<=", bound + M, f"deadline_cut[{cust.id},{sid},{d.id}]")
                if tau[(cust.id, sid)] == 1:
                    mb.add([(mb.get("t1", sid, d.id), 1.0), (r_var, M)],
                           "<=", params.t_mid_day + M, f"first_half[{cust.id},{sid},{d.id}]")
                else:
                    mb.add([(mb.get("t1", sid, d.id), 1.0), (r_var, -M)],
                           ">=", params.t_mid_day - M, f"second_half[{cust.id},{sid},{d.id}]")

    mb.set_objective(_truck_arc_costs(mb, instance))
    return mb.build()


def decode_d1_t1(instance: Instance, model: MilpModel,
                 result: SolveResult) -> tuple[list[TruckRoute], TierHandoff, dict[str, str]]:
    """Returns (routes, handoff with b_in/t_in, customer->truck)."""
    from .model_full import decode_truck_routes
    routes = decode_truck_routes(instance, model, result.values)
    stop_time = {(r.truck, s): t for r in routes for s, t in zip(r.stops, r.times)}
    handoff = TierHandoff()
    truck_of: dict[str, str] = {}
    for (i, s, d), var in model.family("r").items():
        if _binary_value(result.values, var):
            handoff.b_in[i] = s
            handoff.t_in[i] = stop_time[(d, s)]
            truck_of[i] = d
    return routes, handoff, truck_of


def build_d1_t2(instance: Instance, compat: Compatibility, handoff: TierHandoff,
                objective: T2Objective) -> MilpModel:
    """Pick a trip through each package's fixed drop-in stop, and a drop-out."""
    params = instance.cost_params
    M = big_M(params)
    mb = ModelBuilder("d1-t2")

    usable_trips: dict[str, list[str]] = {}
    drops: dict[tuple[str, str], list[str]] = {}
    for cust in instance.customers:
        s_in = handoff.b_in[cust.id]
        t_in = handoff.t_in[cust.id]
        dwell = instance.stop(s_in).max_dwell
        feasible = []
        for pid in compat.trips_of_stop.get(s_in, ()):
            trip = instance.trip(pid)
            t_pick = trip.stop_times[s_in]
            if not (t_in - 1e-9 <= t_pick <= t_in + dwell + 1e-9):
                continue
            order = instance.line(trip.line).ordered_stops
            pos_in = order.index(s_in)
            outs = []
            for v in order[pos_in + 1:]:
                if v not in cust.dropout_candidates:
                    continue
                eta = (trip.stop_times[v] + compat.avg_freighter_time[(v, cust.id)]
                       + instance.stop(v).service_time + cust.service_time)
                if eta <= cust.window_hi + 1e-9:
                    outs.append(v)
            if outs:
                feasible.append(pid)
                drops[(cust.id, pid)] = outs
        if not feasible:
            raise ModelBuildError(
                f"stranded package: customer {cust.id} has no trip through stop {s_in} "
                f"within [{t_in:g}, {t_in + dwell:g}] that can still meet its window")
        usable_trips[cust.id] = feasible

    for cust in instance.customers:
        for pid in usable_trips[cust.id]:
            mb.binary("gamma1", cust.id, pid)
            for v in drops[(cust.id, pid)]:
                if mb.get("y2", cust.id, v, pid) is None:
                    mb.binary("y2", cust.id, v, pid)
    for cust in instance.customers:
        mb.add([(mb.get("gamma1", cust.id, pid), 1.0) for pid in usable_trips[cust.id]],
               "=", 1.0, f"ride_once[{cust.id}]")
        drop_terms = []
        for pid in usable_trips[cust.id]:
            terms = [(mb.get("y2", cust.id, v, pid), 1.0) for v in drops[(cust.id, pid)]]
            mb.add(terms + [(mb.get("gamma1", cust.id, pid), -1.0)],
                   "=", 0.0, f"drop_with_ride[{cust.id},{pid}]")
            drop_terms.extend(terms)
        mb.add(drop_terms, "=", 1.0, f"drop_once[{cust.id}]")

    _add_assigned_loads(mb, instance,
                        pickups={c.id: (handoff.b_in[c.id], usable_trips[c.id])
                                 for c in instance.customers},
                        pickup_family="gamma1")

    _set_transit_objective(mb, instance, objective, M, pickup_side=False, drop_side=True)
    return mb.build(objective_tag=objective.tag)


def _add_assigned_loads(mb: ModelBuilder, instance: Instance,
                        pickups: dict[str, tuple[str, list[str]]],
                        pickup_family: str) -> None:
    """Load propagation when the pickup stop is fixed per customer.

    pickups: customer -> (fixed pickup stop, trips it may ride). Drops come
    from the y2 family already present on the builder.
    """
    pick_at: dict[tuple[str, str], list[tuple[str, object]]] = {}
    for cid, (stop_id, trips) in pickups.items():
        for pid in trips:
            var = mb.get(pickup_family, cid, pid)
            pick_at.setdefault((pid, stop_id), []).append((cid, var))
    drop_at: dict[tuple[str, str], list[tuple[str, object]]] = {}
    for (cid, v, pid), var in mb.family_items("y2"):
        drop_at.setdefault((pid, v), []).append((cid, var))

    trips_used = {pid for pid, _ in pick_at} | {pid for pid, _ in drop_at}
    for pid in sorted(trips_used):
        trip = instance.trip(pid)
        order = instance.line(trip.line).ordered_stops
        prev = None
        for sid in order:
            mb.continuous("l2", sid, pid, lb=0.0, ub=trip.capacity)
        for sid in order:
            terms = [(mb.get("l2", sid, pid), 1.0)]
            if prev is not None:
                terms.append((mb.get("l2", prev, pid), -1.0))
            for cid, var in pick_at.get((pid, sid), []):
                terms.append((var, -instance.customer(cid).demand))
            for cid, var in drop_at.get((pid, sid), []):
                terms.append((var, instance.customer(cid).demand))
            mb.add(terms, "=", 0.0, f"load[{sid},{pid}]")
            prev = sid


def decode_d1_t2(instance: Instance, model: MilpModel, result: SolveResult,
                 handoff: TierHandoff) -> dict[str, TransitChoice]:
    choices = {}
    for (i, v, pid), var in model.family("y2").items():
        if _binary_value(result.values, var):
            trip = instance.trip(pid)
            s_in = handoff.b_in[i]
            choices[i] = TransitChoice(
                trip=pid, drop_in=s_in, pickup_time=trip.stop_times[s_in],
                drop_out=v, drop_time=trip.stop_times[v])
    for cust in instance.customers:
        if cust.id not in choices:
            raise ModelError(f"customer {cust.id}: no drop decoded")
    return choices


# ---- freighter-first pipeline -------------------------------------------


def first_trip_times(instance: Instance) -> dict[str, float]:
    """Earliest scheduled arrival at each drop-out stop."""
    t_first: dict[str, float] = {}
    for trip in instance.trips:
        for sid, t in trip.stop_times.items():
            if instance.stop(sid).is_drop_out:
                t_first[sid] = min(t_first.get(sid, math.inf), t)
    return t_first


def build_d3_t3(instance: Instance, compat: Compatibility,
                t_first: dict[str, float]) -> MilpModel:
    """Choose drop-out stops and freighter routes before any transit decision.

    Every freighter is seeded to start no earlier than its stop's first
    scheduled trip arrival plus handling.
    """
    params = instance.cost_params
    M = big_M(params)
    mb = ModelBuilder("d3-t3")

    customers_of_stop = {
        s.id: sorted(compat.customers_of_dropout.get(s.id, ()))
        for s in instance.drop_out_stops()
    }
    add_freighter_routing(mb, instance, M, symmetry=True,
                          customers_of_stop=customers_of_stop)

    for cust in instance.customers:
        for sid in sorted(cust.dropout_candidates):
            mb.binary("gamma2", cust.id, sid)
        mb.add([(mb.get("gamma2", cust.id, sid), 1.0)
                for sid in sorted(cust.dropout_candidates)],
               "=", 1.0, f"dropout_once[{cust.id}]")
        for sid in sorted(cust.dropout_candidates):
            fleet = instance.freighters_of_stop(sid)
            mb.add([(mb.get("z", cust.id, k.id), 1.0) for k in fleet]
                   + [(mb.get("gamma2", cust.id, sid), -1.0)],
                   "=", 0.0, f"stop_serve[{cust.id},{sid}]")

    for stop in instance.drop_out_stops():
        members = customers_of_stop.get(stop.id, [])
        if not members or stop.id not in t_first:
            continue
        seed = t_first[stop.id] + stop.service_time
        for k in instance.freighters_of_stop(stop.id):
            for cid in members:
                mb.add([(mb.get("t3", stop.id, k.id), 1.0),
                        (mb.get("x", stop.id, cid, k.id), -M)],
                       ">=", seed - M, f"start_seed[{cid},{k.id}]")

    mb.set_objective(_freighter_arc_costs(mb, instance))
    return mb.build()


def decode_d3_t3(instance: Instance, model: MilpModel,
                 result: SolveResult) -> tuple[dict[str, str], list[FreighterRoute]]:
    from .model_full import decode_freighter_routes
    b_out: dict[str, str] = {}
    for (i, sid), var in model.family("gamma2").items():
        if _binary_value(result.values, var):
            b_out[i] = sid
    routes = decode_freighter_routes(instance, model, result.values)
    return b_out, routes


def repair_d3_times(routes: list[FreighterRoute], instance: Instance
                    ) -> tuple[dict[str, float], list[str]]:
    """Back-propagate visit times from the window closings, order intact.

    The last customer on each route is pinned to its closing time; each
    earlier one to min(own closing, successor's time minus the travel
    between them). Times only move later, so the routing cost is untouched.
    """
    t_out: dict[str, float] = {}
    warnings: list[str] = []
    for route in routes:
        if not route.customers:
            continue
        times: dict[str, float] = {}
        last = route.customers[-1]
        times[last] = instance.customer(last).window_hi
        for idx in range(len(route.customers) - 2, -1, -1):
            cid = route.customers[idx]
            nxt = route.customers[idx + 1]
            hop = instance.travel_minutes(
                instance.customer(cid).location, instance.customer(nxt).location)
            times[cid] = min(instance.customer(cid).window_hi, times[nxt] - hop)
        for cid, t in times.items():
            if t < instance.customer(cid).window_lo - 1e-9:
                warnings.append(
                    f"customer {cid}: repaired time {t:g} is before its window opens "
                    f"({instance.customer(cid).window_lo:g}); waiting will absorb it")
            t_out[cid] = t
    return t_out, warnings


def build_d3_t2(instance: Instance, compat: Compatibility, handoff: TierHandoff,
                objective: T2Objective) -> MilpModel:
    """Pick trips and pickup stops that feed the fixed drop-out schedule."""
    if objective.tag == OBJ3:
        raise ModelError("the freighter-count objective is moot once freighters are fixed")
    params = instance.cost_params
    M = big_M(params)
    mb = ModelBuilder("d3-t2")

    usable_trips: dict[str, list[str]] = {}
    pickup_stops: dict[tuple[str, str], list[str]] = {}
    for cust in instance.customers:
        s_out = handoff.b_out[cust.id]
        t_out = handoff.t_out[cust.id]
        dwell = instance.stop(s_out).max_dwell
        feasible = []
        for pid in compat.trips_of_stop.get(s_out, ()):
            trip = instance.trip(pid)
            t_drop = trip.stop_times[s_out]
            # the package must be on hand at the repaired time, not staler than the dwell cap
            if not (t_out - dwell - 1e-9 <= t_drop <= t_out + 1e-9):
                continue
            order = instance.line(trip.line).ordered_stops
            pos_out = order.index(s_out)
            ins = []
            for u in order[:pos_out]:
                if u not in compat.s_in_of_customer[cust.id]:
                    continue
                lead = compat.avg_truck_time[u] + instance.stop(u).service_time
                if trip.stop_times[u] >= lead - 1e-9:
                    ins.append(u)
            if ins:
                feasible.append(pid)
                pickup_stops[(cust.id, pid)] = ins
        if not feasible:
            raise ModelBuildError(
                f"customer {cust.id}: no trip reaches stop {s_out} within "
                f"[{t_out - dwell:g}, {t_out:g}] with a reachable pickup stop")
        usable_trips[cust.id] = feasible

    for cust in instance.customers:
        for pid in usable_trips[cust.id]:
            mb.binary("gamma2p", cust.id, pid)
            for u in pickup_stops[(cust.id, pid)]:
                if mb.get("y1", cust.id, u, pid) is None:
                    mb.binary("y1", cust.id, u, pid)
    for cust in instance.customers:
        mb.add([(mb.get("gamma2p", cust.id, pid), 1.0) for pid in usable_trips[cust.id]],
               "=", 1.0, f"ride_once[{cust.id}]")
        pick_terms = []
        for pid in usable_trips[cust.id]:
            terms = [(mb.get("y1", cust.id, u, pid), 1.0)
                     for u in pickup_stops[(cust.id, pid)]]
            mb.add(terms + [(mb.get("gamma2p", cust.id, pid), -1.0)],
                   "=", 0.0, f"pick_with_ride[{cust.id},{pid}]")
            pick_terms.extend(terms)
        mb.add(pick_terms, "=", 1.0, f"pick_once[{cust.id}]")

    _add_assigned_drops_loads(mb, instance, handoff, usable_trips)

    _set_transit_objective(mb, instance, objective, M, pickup_side=True, drop_side=False)
    return mb.build(objective_tag=objective.tag)


def _add_assigned_drops_loads(mb: ModelBuilder, instance: Instance,
                              handoff: TierHandoff,
                              usable_trips: dict[str, list[str]]) -> None:
    pick_at: dict[tuple[str, str], list[tuple[str, object]]] = {}
    for (cid, u, pid), var in mb.family_items("y1"):
        pick_at.setdefault((pid, u), []).append((cid, var))
    drop_at: dict[tuple[str, str], list[tuple[str, object]]] = {}
    for cid, trips in usable_trips.items():
        s_out = handoff.b_out[cid]
        for pid in trips:
            drop_at.setdefault((pid, s_out), []).append(
                (cid, mb.get("gamma2p", cid, pid)))

    trips_used = {pid for pid, _ in pick_at} | {pid for pid, _ in drop_at}
    for pid in sorted(trips_used):
        trip = instance.trip(pid)
        order = instance.line(trip.line).ordered_stops
        for sid in order:
            mb.continuous("l2", sid, pid, lb=0.0, ub=trip.capacity)
        prev = None
        for sid in order:
            terms = [(mb.get("l2", sid, pid), 1.0)]
            if prev is not None:
                terms.append((mb.get("l2", prev, pid), -1.0))
            for cid, var in pick_at.get((pid, sid), []):
                terms.append((var, -instance.customer(cid).demand))
            for cid, var in drop_at.get((pid, sid), []):
                terms.append((var, instance.customer(cid).demand))
            mb.add(terms, "=", 0.0, f"load[{sid},{pid}]")
            prev = sid


def decode_d3_t2(instance: Instance, model: MilpModel, result: SolveResult,
                 handoff: TierHandoff) -> dict[str, TransitChoice]:
    choices = {}
    for (i, u, pid), var in model.family("y1").items():
        if _binary_value(result.values, var):
            trip = instance.trip(pid)
            s_out = handoff.b_out[i]
            choices[i] = TransitChoice(
                trip=pid, drop_in=u, pickup_time=trip.stop_times[u],
                drop_out=s_out, drop_time=trip.stop_times[s_out])
    for cust in instance.customers:
        if cust.id not in choices:
            raise ModelError(f"customer {cust.id}: no pickup decoded")
    return choices
