"""Monolithic MILP over all three delivery tiers.

Variable families (structured names carry the index tuples):
  r[i,s,d]   package i brought to drop-in stop s by truck d
  w[u,v,d]   truck d traverses arc (u,v); the CDC is node ``o`` and its
             route-sink copy ``o~``; the (o,o~) arc is free so idle trucks
             satisfy the departure constraints at no cost
  t1[u,d]    minute truck d leaves node u
  y1[i,s,p]  trip p picks package i up at drop-in stop s
  y2[i,s,p]  trip p drops package i at drop-out stop s
  l2[u,p]    load of trip p leaving stop u
  z[i,k]     freighter k delivers package i
  x[i,j,k]   freighter k traverses arc (i,j); idle freighters take a free
             self-loop at their home stop
  t3[i,k]    minute freighter k leaves node i

Conditional constraints bracketed by data (line order, candidate sets) are
expanded at build time: variables exist only for index tuples the data
allows, and load propagation is generated per consecutive stop pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from .compat import Compatibility
from .instance import Instance, euclidean_distance
from .milp import MilpModel, ModelBuilder, ModelError, SolveResult, big_M
from .plan import CostBreakdown, CustomerItinerary, FreighterRoute, Plan, TruckRoute

CDC_NODE = "o"
CDC_SINK = "o~"

INTEGRALITY_TOL = 1e-6


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class FullOptions:
    symmetry_breaking: bool = True
    service_cost_mu: float = 0.0
    lambda1: float = 0.0  # per traversal of a truck arc into a drop-in stop
    lambda3: float = 0.0  # per freighter departure from its home stop to a customer

    def __post_init__(self) -> None:
        if self.service_cost_mu < 0:
            raise ModelError("service_cost_mu must be nonnegative")
        if self.service_cost_mu > 0 and self.lambda1 == 0.0 and self.lambda3 == 0.0:
            raise ModelError(
                "service-cost objective needs lambda1/lambda3 derived from a reference solve")


def transit_pairs(instance: Instance, compat: Compatibility, customer_id: str,
                  trip_id: str, in_ok=None, out_ok=None) -> tuple[list[str], list[str]]:
    """Usable (pickup stops, drop stops) for one customer on one trip.

    Optional predicates narrow the raw line-order domains; the two sides are
    then cross-pruned so every pickup stop still precedes some usable drop
    stop and vice versa.
    """
    cust = instance.customer(customer_id)
    trip = instance.trip(trip_id)
    order = instance.line(trip.line).ordered_stops
    pos_of = {sid: pos for pos, sid in enumerate(order)}
    usable_in = compat.s_in_of_customer[customer_id]

    ins = [sid for sid in order
           if sid in usable_in
           and (in_ok is None or in_ok(cust, instance.stop(sid), trip))]
    outs = [sid for sid in order
            if sid in cust.dropout_candidates
            and (out_ok is None or out_ok(cust, instance.stop(sid), trip))]
    while True:
        ins2 = [s for s in ins if any(pos_of[v] > pos_of[s] for v in outs)]
        outs2 = [v for v in outs if any(pos_of[s] < pos_of[v] for s in ins2)]
        if ins2 == ins and outs2 == outs:
            return ins, outs
        ins, outs = ins2, outs2


def truck_cost(instance: Instance, a, b) -> float:
    return instance.cost_params.truck_cost_per_distance * euclidean_distance(a, b)


def freighter_cost(instance: Instance, a, b) -> float:
    return (instance.cost_params.freighter_cost_scale
            * instance.cost_params.truck_cost_per_distance
            * euclidean_distance(a, b))


def _homogeneous(capacities: list[float]) -> bool:
    return len(set(capacities)) <= 1


def add_truck_routing(mb: ModelBuilder, instance: Instance, M: float,
                      symmetry: bool) -> dict:
    """Shared tier-1 structure: arc variables, degree balance, times.

    Returns the node list and helpers used by callers to attach their own
    linking constraints.
    """
    dropins = [s.id for s in instance.drop_in_stops()]
    tails = [CDC_NODE] + dropins
    heads = dropins + [CDC_SINK]

    def loc(node: str):
        if node in (CDC_NODE, CDC_SINK):
            return instance.cdc
        return instance.stop(node).location

    for d in instance.trucks:
        for u in tails:
            for v in heads:
                if u == v:
                    continue
                mb.binary("w", u, v, d.id)
        for u in [CDC_NODE] + dropins:
            mb.continuous("t1", u, d.id, lb=0.0, ub=M)

    for d in instance.trucks:
        # leave the CDC once, return to its copy once
        mb.add([(mb.get("w", CDC_NODE, v, d.id), 1.0) for v in heads],
               "=", 1.0, f"truck_start[{d.id}]")
        mb.add([(mb.get("w", u, CDC_SINK, d.id), 1.0) for u in tails],
               "=", 1.0, f"truck_end[{d.id}]")
        for u in dropins:
            terms = [(mb.get("w", u, v, d.id), 1.0) for v in heads if v != u]
            terms += [(mb.get("w", v, u, d.id), -1.0) for v in tails if v != u]
            mb.add(terms, "=", 0.0, f"truck_balance[{u},{d.id}]")
        # time propagation along traversed arcs
        for u in tails:
            for v in dropins:
                if u == v:
                    continue
                hop = (instance.travel_minutes(loc(u), loc(v))
                       + instance.stop(v).service_time)
                mb.add([(mb.get("t1", v, d.id), 1.0),
                        (mb.get("t1", u, d.id), -1.0),
                        (mb.get("w", u, v, d.id), -M)],
                       ">=", hop - M, f"truck_time[{u},{v},{d.id}]")

    if symmetry and _homogeneous([d.capacity for d in instance.trucks]):
        trucks = instance.trucks
        for a, b in zip(trucks, trucks[1:]):
            mb.add([(mb.get("w", CDC_NODE, v, a.id), 1.0) for v in dropins]
                   + [(mb.get("w", CDC_NODE, v, b.id), -1.0) for v in dropins],
                   ">=", 0.0, f"truck_sym_first[{a.id}]")
            terms = []
            for u in tails:
                for v in heads:
                    if u == v:
                        continue
                    terms.append((mb.get("w", u, v, a.id), 1.0))
                    terms.append((mb.get("w", u, v, b.id), -1.0))
            mb.add(terms, ">=", 0.0, f"truck_sym_size[{a.id}]")

    return {"dropins": dropins, "tails": tails, "heads": heads, "loc": loc}


def add_freighter_routing(mb: ModelBuilder, instance: Instance, M: float,
                          symmetry: bool,
                          customers_of_stop: dict[str, list[str]]) -> None:
    """Shared tier-3 structure: z/x/t3 with per-stop node sets.

    ``customers_of_stop`` lists, per drop-out stop, the customers its
    freighters may serve; a customer may be listed at several stops, in
    which case the once-visited constraint spans all of them. Stops absent
    from the map contribute no variables (their freighters stay out of the
    model entirely).
    """
    stops_of_customer: dict[str, list[str]] = {}
    for stop_id in sorted(customers_of_stop):
        stop = instance.stop(stop_id)
        members = customers_of_stop.get(stop.id, [])
        fleet = instance.freighters_of_stop(stop.id)
        nodes = [stop.id] + list(members)
        for i in members:
            stops_of_customer.setdefault(i, []).append(stop.id)
        for k in fleet:
            for i in members:
                mb.binary("z", i, k.id)
            for i in nodes:
                for j in nodes:
                    if i != j or i == stop.id:  # customer self-loops are meaningless
                        mb.binary("x", i, j, k.id)
                mb.continuous("t3", i, k.id, lb=0.0, ub=M)

        for k in fleet:
            # capacity over assigned packages
            if members:
                mb.add([(mb.get("z", i, k.id), instance.customer(i).demand) for i in members],
                       "<=", k.capacity, f"freighter_cap[{k.id}]")
            # leave home once, return once (self-loop = stay idle)
            mb.add([(mb.get("x", stop.id, j, k.id), 1.0) for j in nodes],
                   "=", 1.0, f"freighter_start[{k.id}]")
            mb.add([(mb.get("x", j, stop.id, k.id), 1.0) for j in nodes],
                   "=", 1.0, f"freighter_end[{k.id}]")
            for i in members:
                # incoming arc exactly when the freighter serves the customer
                mb.add([(mb.get("x", j, i, k.id), 1.0) for j in nodes if j != i]
                       + [(mb.get("z", i, k.id), -1.0)],
                       "=", 0.0, f"freighter_serve[{i},{k.id}]")
                mb.add([(mb.get("x", i, j, k.id), 1.0) for j in nodes if j != i]
                       + [(mb.get("x", j, i, k.id), -1.0) for j in nodes if j != i],
                       "=", 0.0, f"freighter_balance[{i},{k.id}]")
            # travel-time propagation into customers
            for i in nodes:
                for j in members:
                    if i == j:
                        continue
                    loc_i = instance.stop(i).location if i == stop.id else instance.customer(i).location
                    hop = (instance.travel_minutes(loc_i, instance.customer(j).location)
                           + instance.customer(j).service_time)
                    mb.add([(mb.get("t3", j, k.id), 1.0),
                            (mb.get("t3", i, k.id), -1.0),
                            (mb.get("x", i, j, k.id), -M)],
                           ">=", hop - M, f"freighter_time[{i},{j},{k.id}]")
            for i in members:
                cust = instance.customer(i)
                mb.add([(mb.get("t3", i, k.id), 1.0), (mb.get("z", i, k.id), -M)],
                       ">=", cust.window_lo - M, f"window_lo[{i},{k.id}]")
                mb.add([(mb.get("t3", i, k.id), 1.0), (mb.get("z", i, k.id), M)],
                       "<=", cust.window_hi + M, f"window_hi[{i},{k.id}]")

        if symmetry and _homogeneous([k.capacity for k in fleet]):
            for a, b in zip(fleet, fleet[1:]):
                mb.add([(mb.get("x", stop.id, j, a.id), 1.0) for j in members]
                       + [(mb.get("x", stop.id, j, b.id), -1.0) for j in members],
                       ">=", 0.0, f"freighter_sym_first[{a.id}]")
                terms = []
                for i in nodes:
                    for j in members:
                        if i == j:
                            continue
                        terms.append((mb.get("x", i, j, a.id), 1.0))
                        terms.append((mb.get("x", i, j, b.id), -1.0))
                mb.add(terms, ">=", 0.0, f"freighter_sym_size[{a.id}]")

    # every customer departs on exactly one freighter arc, across all stops
    for i, stop_ids in sorted(stops_of_customer.items()):
        terms = []
        for sid in stop_ids:
            nodes = [sid] + list(customers_of_stop[sid])
            for k in instance.freighters_of_stop(sid):
                for j in nodes:
                    if j != i:
                        terms.append((mb.get("x", i, j, k.id), 1.0))
        mb.add(terms, "=", 1.0, f"customer_once[{i}]")


def add_transit_flow(mb: ModelBuilder, instance: Instance, compat: Compatibility,
                     M: float, in_ok=None, out_ok=None,
                     infeasible_tag: str = "no carrying trip",
                     ) -> dict[str, dict[str, tuple[list[str], list[str]]]]:
    """Shared tier-2 structure: y1/y2 domains, same-vehicle link, order, loads.

    Returns per-customer, per-trip usable (pickup, drop) stop lists.
    """
    domains: dict[str, dict[str, tuple[list[str], list[str]]]] = {}
    for cust in instance.customers:
        per_trip: dict[str, tuple[list[str], list[str]]] = {}
        for trip in instance.trips:
            ins, outs = transit_pairs(instance, compat, cust.id, trip.id,
                                      in_ok=in_ok, out_ok=out_ok)
            if ins and outs:
                per_trip[trip.id] = (ins, outs)
                for s in ins:
                    mb.binary("y1", cust.id, s, trip.id)
                for s in outs:
                    mb.binary("y2", cust.id, s, trip.id)
        if not per_trip:
            raise ModelError(f"{infeasible_tag}: customer {cust.id}")
        domains[cust.id] = per_trip

    for cust in instance.customers:
        per_trip = domains[cust.id]
        # picked up exactly once, dropped exactly once
        mb.add([(mb.get("y1", cust.id, s, p), 1.0)
                for p, (ins, _) in per_trip.items() for s in ins],
               "=", 1.0, f"pick_once[{cust.id}]")
        mb.add([(mb.get("y2", cust.id, s, p), 1.0)
                for p, (_, outs) in per_trip.items() for s in outs],
               "=", 1.0, f"drop_once[{cust.id}]")
        for p, (ins, outs) in per_trip.items():
            trip = instance.trip(p)
            # same vehicle picks and drops
            mb.add([(mb.get("y1", cust.id, s, p), 1.0) for s in ins]
                   + [(mb.get("y2", cust.id, s, p), -1.0) for s in outs],
                   "=", 0.0, f"same_vehicle[{cust.id},{p}]")
            # a dual-role stop cannot serve both ends for one package
            for s in set(ins) & set(outs):
                mb.add([(mb.get("y1", cust.id, s, p), 1.0),
                        (mb.get("y2", cust.id, s, p), 1.0)],
                       "<=", 1.0, f"distinct_stop[{cust.id},{s},{p}]")
            # pickup no later than the drop-off it pairs with
            for u in ins:
                for v in outs:
                    if u == v:
                        continue
                    mb.add([(mb.get("y1", cust.id, u, p), trip.stop_times[u]),
                            (mb.get("y2", cust.id, v, p), M - trip.stop_times[v])],
                           "<=", M, f"pick_before_drop[{cust.id},{u},{v},{p}]")

    # load propagation per consecutive stop pair, seeded empty
    for trip in instance.trips:
        order = instance.line(trip.line).ordered_stops
        relevant = False
        for cust_id, per_trip in domains.items():
            if trip.id in per_trip:
                relevant = True
        if not relevant:
            continue
        for sid in order:
            mb.continuous("l2", sid, trip.id, lb=0.0, ub=trip.capacity)
        prev: str | None = None
        for sid in order:
            terms = [(mb.get("l2", sid, trip.id), 1.0)]
            if prev is not None:
                terms.append((mb.get("l2", prev, trip.id), -1.0))
            for cust_id, per_trip in domains.items():
                if trip.id not in per_trip:
                    continue
                ins, outs = per_trip[trip.id]
                q = instance.customer(cust_id).demand
                if sid in ins:
                    terms.append((mb.get("y1", cust_id, sid, trip.id), -q))
                if sid in outs:
                    terms.append((mb.get("y2", cust_id, sid, trip.id), q))
            mb.add(terms, "=", 0.0, f"load[{sid},{trip.id}]")
            prev = sid
    return domains


def build_full(instance: Instance, compat: Compatibility,
               options: FullOptions | None = None) -> MilpModel:
    """Complete three-tier model; minimizes truck plus freighter routing cost."""
    options = options or FullOptions()
    params = instance.cost_params
    max_hop = max((instance.travel_minutes(instance.cdc, s.location)
                   for s in instance.stops), default=0.0) * 2
    M = big_M(params, extra_time=max_hop)
    mb = ModelBuilder("full")

    domains = add_transit_flow(mb, instance, compat, M)
    ctx = add_truck_routing(mb, instance, M, options.symmetry_breaking)
    dropins, tails = ctx["dropins"], ctx["tails"]

    # r: assignment of packages to trucks and drop-in stops
    for cust in instance.customers:
        for s in sorted(compat.s_in_of_customer[cust.id]):
            for d in instance.trucks:
                mb.binary("r", cust.id, s, d.id)
    for cust in instance.customers:
        stops_in = sorted(compat.s_in_of_customer[cust.id])
        mb.add([(mb.get("r", cust.id, s, d.id), 1.0)
                for s in stops_in for d in instance.trucks],
               "=", 1.0, f"assign[{cust.id}]")
    for d in instance.trucks:
        terms = []
        for cust in instance.customers:
            for s in sorted(compat.s_in_of_customer[cust.id]):
                terms.append((mb.get("r", cust.id, s, d.id), cust.demand))
        mb.add(terms, "<=", d.capacity, f"truck_cap[{d.id}]")

    # if a truck carries a package to a stop it must route through the stop
    for d in instance.trucks:
        for v in dropins:
            carried = [(mb.get("r", c.id, v, d.id), -1.0 / M)
                       for c in instance.customers
                       if mb.get("r", c.id, v, d.id) is not None]
            if not carried:
                continue
            mb.add([(mb.get("w", u, v, d.id), 1.0) for u in tails if u != v] + carried,
                   ">=", 0.0, f"visit_if_assigned[{v},{d.id}]")

    # drop-off by the truck pairs with pickup by a transit vehicle at that stop
    for cust in instance.customers:
        for s in sorted(compat.s_in_of_customer[cust.id]):
            y_terms = [(mb.get("y1", cust.id, s, p), -1.0)
                       for p, (ins, _) in domains[cust.id].items() if s in ins]
            mb.add([(mb.get("r", cust.id, s, d.id), 1.0) for d in instance.trucks] + y_terms,
                   "=", 0.0, f"handover[{cust.id},{s}]")

    # truck reaches the stop before the scheduled pickup, and within the dwell cap
    for cust in instance.customers:
        for s in sorted(compat.s_in_of_customer[cust.id]):
            pickup_terms = [(mb.get("y1", cust.id, s, p), instance.trip(p).stop_times[s])
                            for p, (ins, _) in domains[cust.id].items() if s in ins]
            dwell = instance.stop(s).max_dwell
            for d in instance.trucks:
                r_var = mb.get("r", cust.id, s, d.id)
                mb.add([(mb.get("t1", s, d.id), 1.0), (r_var, M)]
                       + [(v, -c) for v, c in pickup_terms],
                       "<=", M, f"truck_before_pickup[{cust.id},{s},{d.id}]")
                mb.add([(v, c) for v, c in pickup_terms]
                       + [(mb.get("t1", s, d.id), -1.0), (r_var, M)],
                       "<=", dwell + M, f"dwell_in[{cust.id},{s},{d.id}]")

    customers_of_stop = {
        s.id: sorted(compat.customers_of_dropout.get(s.id, ()))
        for s in instance.drop_out_stops()
    }
    add_freighter_routing(mb, instance, M, options.symmetry_breaking,
                          customers_of_stop)

    # handover to freighters: served from a stop exactly when dropped there
    for cust in instance.customers:
        for s in sorted(cust.dropout_candidates):
            fleet = instance.freighters_of_stop(s)
            y_terms = [(mb.get("y2", cust.id, s, p), -1.0)
                       for p, (_, outs) in domains[cust.id].items() if s in outs]
            z_terms = [(mb.get("z", cust.id, k.id), 1.0) for k in fleet
                       if mb.get("z", cust.id, k.id) is not None]
            if not y_terms and not z_terms:
                continue
            mb.add(z_terms + y_terms, "=", 0.0, f"freighter_handover[{cust.id},{s}]")

    # freighter leaves only after its packages arrive, and within the dwell cap
    for cust in instance.customers:
        for s in sorted(cust.dropout_candidates):
            drop_terms = [(mb.get("y2", cust.id, s, p), instance.trip(p).stop_times[s])
                          for p, (_, outs) in domains[cust.id].items() if s in outs]
            if not drop_terms:
                continue
            stop = instance.stop(s)
            for k in instance.freighters_of_stop(s):
                z_var = mb.get("z", cust.id, k.id)
                mb.add([(mb.get("t3", s, k.id), 1.0), (z_var, -M)]
                       + [(v, -c) for v, c in drop_terms],
                       ">=", stop.service_time - M, f"load_first[{cust.id},{s},{k.id}]")
                mb.add([(mb.get("t3", s, k.id), 1.0), (z_var, M)]
                       + [(v, -c) for v, c in drop_terms],
                       "<=", stop.max_dwell + M, f"dwell_out[{cust.id},{s},{k.id}]")

    mb.set_objective(_routing_objective(mb, instance, options))
    return mb.build(
        mu=options.service_cost_mu,
        lambda1=options.lambda1,
        lambda3=options.lambda3,
        symmetry_breaking=options.symmetry_breaking,
    )


def _routing_objective(mb: ModelBuilder, instance: Instance,
                       options: FullOptions) -> list:
    """Arc costs, with per-visit service costs folded in when mu > 0."""
    terms = []
    use_service = options.service_cost_mu > 0
    stop_ids = {s.id for s in instance.stops}
    for (u, v, _d), var in mb.family_items("w"):
        a = instance.cdc if u in (CDC_NODE, CDC_SINK) else instance.stop(u).location
        b = instance.cdc if v in (CDC_NODE, CDC_SINK) else instance.stop(v).location
        cost = truck_cost(instance, a, b)
        if use_service and v not in (CDC_NODE, CDC_SINK):
            cost += options.lambda1
        if cost:
            terms.append((var, cost))
    for (i, j, _k), var in mb.family_items("x"):
        if i == j:
            continue  # free self-loop for idle freighters
        loc_i = instance.stop(i).location if i in stop_ids else instance.customer(i).location
        loc_j = instance.stop(j).location if j in stop_ids else instance.customer(j).location
        cost = freighter_cost(instance, loc_i, loc_j)
        if use_service and i in stop_ids and j not in stop_ids:
            cost += options.lambda3
        if cost:
            terms.append((var, cost))
    return terms


def _binary_value(values: dict[str, float], var) -> bool:
    v = values[var.name]
    if abs(v - round(v)) > INTEGRALITY_TOL:
        raise DecodeError(f"{var.name} = {v} is fractional beyond tolerance")
    return round(v) >= 1


def decode_full(instance: Instance, model: MilpModel, result: SolveResult) -> Plan:
    """Turn a FULL solution into a plan; raises on fractional binaries."""
    if not result.has_solution():
        raise DecodeError(f"no solution to decode (status {result.status})")
    values = result.values

    truck_routes = decode_truck_routes(instance, model, values)
    stop_time: dict[tuple[str, str], float] = {}
    for route in truck_routes:
        for s, t in zip(route.stops, route.times):
            stop_time[(route.truck, s)] = t

    freighter_routes = decode_freighter_routes(instance, model, values)
    delivery: dict[str, tuple[str, float]] = {}
    for route in freighter_routes:
        for c, t in zip(route.customers, route.times):
            delivery[c] = (route.freighter, t)

    itineraries = []
    for cust in instance.customers:
        truck_id, stop_in = None, None
        for (i, s, d), var in model.family("r").items():
            if i == cust.id and _binary_value(values, var):
                truck_id, stop_in = d, s
        trip_id, stop_out = None, None
        for (i, s, p), var in model.family("y2").items():
            if i == cust.id and _binary_value(values, var):
                trip_id, stop_out = p, s
        if truck_id is None or trip_id is None or cust.id not in delivery:
            raise DecodeError(f"customer {cust.id}: incomplete assignment in solution")
        freighter_id, t_delivery = delivery[cust.id]
        itineraries.append(CustomerItinerary(
            customer=cust.id,
            truck=truck_id,
            drop_in_stop=stop_in,
            drop_in_time=stop_time.get((truck_id, stop_in), 0.0),
            trip=trip_id,
            drop_out_stop=stop_out,
            drop_out_time=instance.trip(trip_id).stop_times[stop_out],
            freighter=freighter_id,
            delivery_time=t_delivery,
        ))

    plan = Plan(
        itineraries=tuple(itineraries),
        truck_routes=tuple(truck_routes),
        freighter_routes=tuple(freighter_routes),
        costs=_decoded_costs(instance, model, truck_routes, freighter_routes),
        service_lambda1=float(model.metadata.get("lambda1", 0.0)) if model.metadata.get("mu") else 0.0,
        service_lambda3=float(model.metadata.get("lambda3", 0.0)) if model.metadata.get("mu") else 0.0,
    )
    return plan


def _decoded_costs(instance: Instance, model: MilpModel, truck_routes, freighter_routes) -> CostBreakdown:
    t1 = 0.0
    for route in truck_routes:
        loc = instance.cdc
        for sid in route.stops:
            t1 += truck_cost(instance, loc, instance.stop(sid).location)
            loc = instance.stop(sid).location
        t1 += truck_cost(instance, loc, instance.cdc)
    t3 = 0.0
    for route in freighter_routes:
        home = instance.stop(route.home_stop).location
        loc = home
        for cid in route.customers:
            t3 += freighter_cost(instance, loc, instance.customer(cid).location)
            loc = instance.customer(cid).location
        if route.customers:
            t3 += freighter_cost(instance, loc, home)
    mu = float(model.metadata.get("mu", 0.0) or 0.0)
    service = 0.0
    if mu > 0:
        lam1 = float(model.metadata.get("lambda1", 0.0))
        lam3 = float(model.metadata.get("lambda3", 0.0))
        visits = sum(len(r.stops) for r in truck_routes)
        departures = sum(1 for r in freighter_routes if r.customers)
        service = lam1 * visits + lam3 * departures
    return CostBreakdown(t1_cost=t1, t3_cost=t3, service_cost=service)


def decode_truck_routes(instance: Instance, model: MilpModel,
                        values: dict[str, float]) -> list[TruckRoute]:
    routes = []
    for d in instance.trucks:
        succ: dict[str, str] = {}
        for (u, v, dd), var in model.family("w").items():
            if dd == d.id and _binary_value(values, var):
                succ[u] = v
        stops: list[str] = []
        node = CDC_NODE
        for _ in range(len(succ) + 1):
            node = succ.get(node)
            if node is None or node == CDC_SINK:
                break
            stops.append(node)
        if not stops:
            continue  # idle truck
        times = [values[model.family("t1")[(s, d.id)].name] for s in stops]
        departure = values[model.family("t1")[(CDC_NODE, d.id)].name]
        routes.append(TruckRoute(truck=d.id, departure=departure,
                                 stops=tuple(stops), times=tuple(times)))
    return routes


def decode_freighter_routes(instance: Instance, model: MilpModel,
                            values: dict[str, float]) -> list[FreighterRoute]:
    routes = []
    for k in instance.freighters:
        succ: dict[str, str] = {}
        for (i, j, kk), var in model.family("x").items():
            if kk == k.id and i != j and _binary_value(values, var):
                succ[i] = j
        customers: list[str] = []
        node = k.home_stop
        for _ in range(len(succ) + 1):
            node = succ.get(node)
            if node is None or node == k.home_stop:
                break
            customers.append(node)
        if not customers:
            continue  # idle freighter
        t3 = model.family("t3")
        times = [values[t3[(c, k.id)].name] for c in customers]
        departure = values[t3[(k.home_stop, k.id)].name]
        routes.append(FreighterRoute(freighter=k.id, home_stop=k.home_stop,
                                     departure=departure,
                                     customers=tuple(customers), times=tuple(times)))
    return routes
