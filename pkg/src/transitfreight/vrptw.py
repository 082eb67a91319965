"""Direct-truck baseline: capacitated vehicle routing with time windows.

Trucks leave the CDC, serve customers inside their windows, and return.
The transit network plays no part; this exists to quantify what the
three-tier system saves in dedicated-vehicle distance.
"""

from __future__ import annotations

from .instance import Instance
from .milp import MilpModel, ModelBuilder, SolveResult, big_M
from .model_full import CDC_NODE, CDC_SINK, _binary_value, truck_cost
from .plan import VrptwPlan, VrptwRoute


def build_vrptw(instance: Instance) -> MilpModel:
    params = instance.cost_params
    max_hop = max((instance.travel_minutes(instance.cdc, c.location)
                   for c in instance.customers), default=0.0) * 2
    M = big_M(params, extra_time=max_hop)
    mb = ModelBuilder("vrptw")

    customers = [c.id for c in instance.customers]
    tails = [CDC_NODE] + customers
    heads = customers + [CDC_SINK]

    def loc(node: str):
        if node in (CDC_NODE, CDC_SINK):
            return instance.cdc
        return instance.customer(node).location

    for d in instance.trucks:
        for i in customers:
            mb.binary("r", i, d.id)
        for u in tails:
            for v in heads:
                if u != v:
                    mb.binary("w", u, v, d.id)
        for u in tails:
            mb.continuous("t", u, d.id, lb=0.0, ub=M)

    for i in customers:
        mb.add([(mb.get("r", i, d.id), 1.0) for d in instance.trucks],
               "=", 1.0, f"assign[{i}]")
    for d in instance.trucks:
        mb.add([(mb.get("r", c.id, d.id), c.demand) for c in instance.customers],
               "<=", d.capacity, f"cap[{d.id}]")
        mb.add([(mb.get("w", CDC_NODE, v, d.id), 1.0) for v in heads],
               "=", 1.0, f"start[{d.id}]")
        mb.add([(mb.get("w", u, CDC_SINK, d.id), 1.0) for u in tails],
               "=", 1.0, f"end[{d.id}]")
        for u in customers:
            mb.add([(mb.get("w", u, v, d.id), 1.0) for v in heads if v != u]
                   + [(mb.get("w", v, u, d.id), -1.0) for v in tails if v != u],
                   "=", 0.0, f"balance[{u},{d.id}]")
            # visited exactly when assigned
            mb.add([(mb.get("w", v, u, d.id), 1.0) for v in tails if v != u]
                   + [(mb.get("r", u, d.id), -1.0)],
                   "=", 0.0, f"visit[{u},{d.id}]")
        for u in tails:
            for v in customers:
                if u == v:
                    continue
                cust = instance.customer(v)
                hop = instance.travel_minutes(loc(u), loc(v)) + cust.service_time
                mb.add([(mb.get("t", v, d.id), 1.0), (mb.get("t", u, d.id), -1.0),
                        (mb.get("w", u, v, d.id), -M)],
                       ">=", hop - M, f"time[{u},{v},{d.id}]")
        for i in customers:
            cust = instance.customer(i)
            mb.add([(mb.get("t", i, d.id), 1.0), (mb.get("r", i, d.id), -M)],
                   ">=", cust.window_lo - M, f"window_lo[{i},{d.id}]")
            mb.add([(mb.get("t", i, d.id), 1.0), (mb.get("r", i, d.id), M)],
                   "<=", cust.window_hi + M, f"window_hi[{i},{d.id}]")

    trucks = instance.trucks
    if len({d.capacity for d in trucks}) <= 1:
        for a, b in zip(trucks, trucks[1:]):
            mb.add([(mb.get("w", CDC_NODE, v, a.id), 1.0) for v in customers]
                   + [(mb.get("w", CDC_NODE, v, b.id), -1.0) for v in customers],
                   ">=", 0.0, f"sym_first[{a.id}]")
            terms = []
            for u in tails:
                for v in heads:
                    if u == v:
                        continue
                    terms.append((mb.get("w", u, v, a.id), 1.0))
                    terms.append((mb.get("w", u, v, b.id), -1.0))
            mb.add(terms, ">=", 0.0, f"sym_size[{a.id}]")

    terms = []
    for (u, v, _d), var in mb.family_items("w"):
        cost = truck_cost(instance, loc(u), loc(v))
        if cost:
            terms.append((var, cost))
    mb.set_objective(terms)
    return mb.build()


def decode_vrptw(instance: Instance, model: MilpModel, result: SolveResult) -> VrptwPlan:
    routes = []
    total = 0.0
    for d in instance.trucks:
        succ: dict[str, str] = {}
        for (u, v, dd), var in model.family("w").items():
            if dd == d.id and _binary_value(result.values, var):
                succ[u] = v
        order: list[str] = []
        node = CDC_NODE
        for _ in range(len(succ) + 1):
            node = succ.get(node)
            if node is None or node == CDC_SINK:
                break
            order.append(node)
        if not order:
            continue
        t = model.family("t")
        times = [result.values[t[(c, d.id)].name] for c in order]
        departure = result.values[t[(CDC_NODE, d.id)].name]
        routes.append(VrptwRoute(truck=d.id, departure=departure,
                                 customers=tuple(order), times=tuple(times)))
        loc = instance.cdc
        for c in order:
            total += truck_cost(instance, loc, instance.customer(c).location)
            loc = instance.customer(c).location
        total += truck_cost(instance, loc, instance.cdc)
    return VrptwPlan(routes=tuple(routes), total_cost=total)
