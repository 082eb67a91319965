"""End-to-end runs: the monolithic model, the three decomposition pipelines,
and the direct-truck baseline, stitched into validated plans with metrics.

Stages inside one run are sequential (each feeds the next through a handoff);
distinct runs are independent. Failures carry the failing stage and cause and
never poison a comparison sweep.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .backends import Backend, ScipyHighsBackend
from .compat import derive_compatibility
from .instance import Instance, serialize_instance, with_beta
from .milp import ModelError, SolveLimits, SolveResult
from .model_full import FullOptions, build_full, decode_full
from .plan import (
    CostBreakdown,
    CustomerItinerary,
    FreighterRoute,
    Plan,
    TierHandoff,
    VrptwPlan,
    serialize_handoff,
    serialize_plan,
)
from .tiers import (
    T2Objective,
    TransitChoice,
    build_d1_t1,
    build_d1_t2,
    build_d2_t2,
    build_d3_t2,
    build_d3_t3,
    build_t1_from_handoff,
    build_t3_stopwise,
    decode_d1_t1,
    decode_d1_t2,
    decode_d3_t2,
    decode_d3_t3,
    decode_t1,
    decode_t3_stopwise,
    decode_transit,
    first_trip_times,
    handoff_from_transit,
    preprocess_midday,
    repair_d3_times,
)
from .validate import recompute_costs, recompute_vrptw_cost, validate_plan, validate_vrptw_plan

METHODS = ("full", "d1", "d2", "d3", "vrptw")

DEFAULT_STAGE_SECONDS = {
    "full": 120.0,
    "first": 60.0,   # opening stage of the truck-first / freighter-first pipelines
    "other": 30.0,
    "per_stop": 10.0,
}


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: str):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    method: str
    t2_obj: str | None = None
    beta: float | None = None
    mu: float = 0.0
    seed: int = 0
    symmetry_breaking: bool = True
    rel_gap: float = 1e-6
    stage_seconds: dict | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ModelError(f"unknown method {self.method!r}")
        if self.method in ("d1", "d2", "d3"):
            if not self.t2_obj:
                raise ModelError(f"method {self.method} needs a transit objective")
            if self.method == "d3" and self.t2_obj == "obj3":
                raise ModelError(
                    "freighter-count objective is unavailable when freighters are fixed first")
        if self.mu and self.method != "full":
            raise ModelError("service costs apply to the monolithic model only")
        if self.mu < 0:
            raise ModelError("mu must be nonnegative")

    def label(self) -> str:
        return self.method if not self.t2_obj else f"{self.method}-{self.t2_obj}"

    def seconds(self, stage_kind: str) -> float:
        table = dict(DEFAULT_STAGE_SECONDS)
        if self.stage_seconds:
            table.update(self.stage_seconds)
        return table[stage_kind]


@dataclass
class StageMetrics:
    stage: str
    status: str
    objective: float | None
    wall_time: float


@dataclass
class RunMetrics:
    method: str
    t2_obj: str | None
    stages: list[StageMetrics] = field(default_factory=list)
    t1_cost: float = 0.0
    t3_cost: float = 0.0
    service_cost: float = 0.0
    total: float = 0.0
    stops_in_used: int = 0
    stops_out_used: int = 0
    trucks_used: int = 0
    freighters_used: int = 0
    trips_used: int = 0
    packages_per_truck: float = 0.0
    packages_per_freighter: float = 0.0
    packages_per_trip: float = 0.0
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


_reference_cache: dict[str, tuple[float, float]] = {}


def _instance_key(instance: Instance) -> str:
    return hashlib.sha1(serialize_instance(instance).encode()).hexdigest()


def reference_routing_costs(instance: Instance, backend: Backend,
                            config: RunConfig) -> tuple[float, float]:
    """Tier-1/tier-3 routing costs of the plain-objective solve, cached."""
    key = _instance_key(instance)
    if key in _reference_cache:
        return _reference_cache[key]
    compat = derive_compatibility(instance)
    model = build_full(instance, compat,
                       FullOptions(symmetry_breaking=config.symmetry_breaking))
    result = backend.solve(model, SolveLimits(config.seconds("full"), config.rel_gap))
    if not result.has_solution():
        raise PipelineError("reference", f"plain-objective solve ended {result.status}")
    plan = decode_full(instance, model, result)
    costs = (plan.costs.t1_cost, plan.costs.t3_cost)
    _reference_cache[key] = costs
    return costs


def _solve_stage(stage: str, model, backend: Backend, seconds: float,
                 rel_gap: float, metrics: RunMetrics) -> SolveResult:
    result = backend.solve(model, SolveLimits(seconds, rel_gap))
    metrics.stages.append(StageMetrics(
        stage=stage, status=result.status, objective=result.objective,
        wall_time=result.wall_time))
    if result.status == "infeasible":
        raise PipelineError(stage, "model infeasible")
    if result.status == "timeout":
        raise PipelineError(stage, "stage timeout, no incumbent")
    if result.status == "error":
        raise PipelineError(stage, f"backend error: {result.message}")
    return result


def _build_stage(stage: str, build, *args, **kwargs):
    try:
        return build(*args, **kwargs)
    except ModelError as exc:
        raise PipelineError(stage, str(exc)) from exc


def _dump(artifacts_dir: Path | None, name: str, text: str) -> None:
    if artifacts_dir is not None:
        artifacts_dir.mkdir(parents=True, exist_ok=True)
        (artifacts_dir / name).write_text(text, encoding="utf-8")


def run_method(instance: Instance, config: RunConfig, backend: Backend | None = None,
               artifacts_dir: Path | None = None) -> tuple[Plan | VrptwPlan, RunMetrics]:
    backend = backend or ScipyHighsBackend()
    if config.beta is not None:
        instance = with_beta(instance, config.beta)
    metrics = RunMetrics(method=config.method, t2_obj=config.t2_obj)
    started = time.perf_counter()
    _dump(artifacts_dir, "instance.json", serialize_instance(instance))

    if config.method == "vrptw":
        plan = _run_vrptw(instance, config, backend, metrics)
    elif config.method == "full":
        plan = _run_full(instance, config, backend, metrics)
    elif config.method == "d2":
        plan = _run_d2(instance, config, backend, metrics, artifacts_dir)
    elif config.method == "d1":
        plan = _run_d1(instance, config, backend, metrics, artifacts_dir)
    else:
        plan = _run_d3(instance, config, backend, metrics, artifacts_dir)

    metrics.wall_time = time.perf_counter() - started
    _fill_plan_metrics(instance, plan, metrics)
    _dump(artifacts_dir, "plan.json", serialize_plan(plan))
    _dump(artifacts_dir, "metrics.json", metrics.to_json())
    return plan, metrics


def _fill_plan_metrics(instance: Instance, plan: Plan | VrptwPlan,
                       metrics: RunMetrics) -> None:
    n = len(instance.customers)
    if isinstance(plan, VrptwPlan):
        violations = validate_vrptw_plan(instance, plan)
        if violations:
            raise PipelineError("validate", "; ".join(str(v) for v in violations[:5]))
        total = recompute_vrptw_cost(instance, plan)
        if abs(total - plan.total_cost) > 1e-6:
            raise PipelineError("validate", "route cost drifted from reported total")
        metrics.t1_cost = total
        metrics.total = total
        metrics.trucks_used = len(plan.routes)
        metrics.packages_per_truck = n / len(plan.routes) if plan.routes else 0.0
        return
    violations = validate_plan(instance, plan)
    if violations:
        raise PipelineError("validate", "; ".join(str(v) for v in violations[:5]))
    costs = recompute_costs(instance, plan)
    if abs(costs.total - plan.costs.total) > 1e-6:
        raise PipelineError("validate", "recomputed cost drifted from decoded cost")
    metrics.t1_cost = costs.t1_cost
    metrics.t3_cost = costs.t3_cost
    metrics.service_cost = costs.service_cost
    metrics.total = costs.total
    metrics.stops_in_used = len({it.drop_in_stop for it in plan.itineraries})
    metrics.stops_out_used = len({it.drop_out_stop for it in plan.itineraries})
    metrics.trucks_used = len({it.truck for it in plan.itineraries})
    metrics.freighters_used = len({it.freighter for it in plan.itineraries})
    metrics.trips_used = len({it.trip for it in plan.itineraries})
    metrics.packages_per_truck = n / metrics.trucks_used if metrics.trucks_used else 0.0
    metrics.packages_per_freighter = n / metrics.freighters_used if metrics.freighters_used else 0.0
    metrics.packages_per_trip = n / metrics.trips_used if metrics.trips_used else 0.0


def _run_full(instance, config, backend, metrics) -> Plan:
    compat = derive_compatibility(instance)
    mu = config.mu or instance.cost_params.service_cost_mu
    options = FullOptions(symmetry_breaking=config.symmetry_breaking)
    if mu > 0:
        t1_ref, t3_ref = reference_routing_costs(instance, backend, config)
        options = FullOptions(
            symmetry_breaking=config.symmetry_breaking, service_cost_mu=mu,
            lambda1=mu * t1_ref, lambda3=mu * t3_ref)
    model = _build_stage("full", build_full, instance, compat, options)
    result = _solve_stage("full", model, backend, config.seconds("full"),
                          config.rel_gap, metrics)
    plan = decode_full(instance, model, result)
    if mu == 0 and result.status == "optimal":
        # a plain optimal solve doubles as the service-cost reference
        _reference_cache.setdefault(
            _instance_key(instance), (plan.costs.t1_cost, plan.costs.t3_cost))
    return plan


def _run_vrptw(instance, config, backend, metrics) -> VrptwPlan:
    from .vrptw import build_vrptw, decode_vrptw
    model = _build_stage("vrptw", build_vrptw, instance)
    result = _solve_stage("vrptw", model, backend, config.seconds("full"),
                          config.rel_gap, metrics)
    return decode_vrptw(instance, model, result)


def _solve_t3_stopwise(instance, config, backend, metrics, handoff,
                       customers_by_stop) -> list[FreighterRoute]:
    routes: list[FreighterRoute] = []
    for stop_id in sorted(customers_by_stop):
        members = customers_by_stop[stop_id]
        if not members:
            continue
        model = _build_stage(f"t3[{stop_id}]", build_t3_stopwise,
                             instance, stop_id, members, handoff)
        result = _solve_stage(f"t3[{stop_id}]", model, backend,
                              config.seconds("per_stop"), config.rel_gap, metrics)
        routes.extend(decode_t3_stopwise(instance, model, result))
    return routes


def _assemble(instance, choices: dict[str, TransitChoice],
              truck_of: dict[str, str], stop_time: dict[str, float],
              truck_routes, freighter_routes) -> Plan:
    serving: dict[str, tuple[str, float]] = {}
    for route in freighter_routes:
        for cid, t in zip(route.customers, route.times):
            serving[cid] = (route.freighter, t)
    itineraries = []
    for cust in instance.customers:
        ch = choices[cust.id]
        freighter_id, t_delivery = serving[cust.id]
        itineraries.append(CustomerItinerary(
            customer=cust.id, truck=truck_of[cust.id],
            drop_in_stop=ch.drop_in, drop_in_time=stop_time[cust.id],
            trip=ch.trip, drop_out_stop=ch.drop_out, drop_out_time=ch.drop_time,
            freighter=freighter_id, delivery_time=t_delivery))
    draft = Plan(
        itineraries=tuple(itineraries),
        truck_routes=tuple(truck_routes),
        freighter_routes=tuple(freighter_routes),
        costs=CostBreakdown(0.0, 0.0),
    )
    return replace(draft, costs=recompute_costs(instance, draft))


def _run_d2(instance, config, backend, metrics, artifacts_dir) -> Plan:
    compat = derive_compatibility(instance)
    objective = T2Objective.parse(config.t2_obj)
    t2_model = _build_stage("t2", build_d2_t2, instance, compat, objective)
    t2_result = _solve_stage("t2", t2_model, backend, config.seconds("other"),
                             config.rel_gap, metrics)
    choices = decode_transit(instance, t2_model, t2_result)
    handoff = handoff_from_transit(choices)
    _dump(artifacts_dir, "handoff-t2.json", serialize_handoff(handoff))

    t1_model = _build_stage("t1", build_t1_from_handoff, instance, handoff)
    t1_result = _solve_stage("t1", t1_model, backend, config.seconds("other"),
                             config.rel_gap, metrics)
    truck_routes, truck_of, stop_time = decode_t1(instance, t1_model, t1_result, handoff)

    customers_by_stop: dict[str, list[str]] = {}
    for cid, ch in choices.items():
        customers_by_stop.setdefault(ch.drop_out, []).append(cid)
    freighter_routes = _solve_t3_stopwise(instance, config, backend, metrics,
                                          handoff, customers_by_stop)
    return _assemble(instance, choices, truck_of, stop_time,
                     truck_routes, freighter_routes)


def _run_d1(instance, config, backend, metrics, artifacts_dir) -> Plan:
    compat = derive_compatibility(instance)
    objective = T2Objective.parse(config.t2_obj)
    tau = preprocess_midday(instance, compat)
    t1_model = _build_stage("t1", build_d1_t1, instance, compat, tau)
    t1_result = _solve_stage("t1", t1_model, backend, config.seconds("first"),
                             config.rel_gap, metrics)
    truck_routes, handoff, truck_of = decode_d1_t1(instance, t1_model, t1_result)
    handoff.tau = tau
    _dump(artifacts_dir, "handoff-t1.json", serialize_handoff(handoff))

    t2_model = _build_stage("t2", build_d1_t2, instance, compat, handoff, objective)
    t2_result = _solve_stage("t2", t2_model, backend, config.seconds("other"),
                             config.rel_gap, metrics)
    choices = decode_d1_t2(instance, t2_model, t2_result, handoff)
    full_handoff = handoff_from_transit(choices)
    full_handoff.tau = tau
    _dump(artifacts_dir, "handoff-t2.json", serialize_handoff(full_handoff))

    stop_time = {cid: handoff.t_in[cid] for cid in handoff.t_in}
    customers_by_stop: dict[str, list[str]] = {}
    for cid, ch in choices.items():
        customers_by_stop.setdefault(ch.drop_out, []).append(cid)
    freighter_routes = _solve_t3_stopwise(instance, config, backend, metrics,
                                          full_handoff, customers_by_stop)
    return _assemble(instance, choices, truck_of, stop_time,
                     truck_routes, freighter_routes)


def _run_d3(instance, config, backend, metrics, artifacts_dir) -> Plan:
    compat = derive_compatibility(instance)
    objective = T2Objective.parse(config.t2_obj)
    t_first = first_trip_times(instance)
    t3_model = _build_stage("t3", build_d3_t3, instance, compat, t_first)
    t3_result = _solve_stage("t3", t3_model, backend, config.seconds("first"),
                             config.rel_gap, metrics)
    b_out, raw_routes = decode_d3_t3(instance, t3_model, t3_result)
    t_out, _warnings = repair_d3_times(raw_routes, instance)
    handoff = TierHandoff(b_out=b_out, t_out=t_out, t_first=t_first)
    _dump(artifacts_dir, "handoff-t3.json", serialize_handoff(handoff))

    t2_model = _build_stage("t2", build_d3_t2, instance, compat, handoff, objective)
    t2_result = _solve_stage("t2", t2_model, backend, config.seconds("other"),
                             config.rel_gap, metrics)
    choices = decode_d3_t2(instance, t2_model, t2_result, handoff)
    t1_handoff = handoff_from_transit(choices)
    _dump(artifacts_dir, "handoff-t2.json", serialize_handoff(t1_handoff))

    t1_model = _build_stage("t1", build_t1_from_handoff, instance, t1_handoff)
    t1_result = _solve_stage("t1", t1_model, backend, config.seconds("other"),
                             config.rel_gap, metrics)
    truck_routes, truck_of, stop_time = decode_t1(instance, t1_model, t1_result, t1_handoff)

    freighter_routes = _retime_d3_routes(instance, raw_routes, choices)
    return _assemble(instance, choices, truck_of, stop_time,
                     truck_routes, freighter_routes)


def _retime_d3_routes(instance, raw_routes, choices) -> list[FreighterRoute]:
    """Forward re-timing after trips are known: orders and costs unchanged.

    The freighter-first routes were planned against estimated start times;
    once actual drop-offs exist the visit times are recomputed earliest-first
    along the same orders. Any window this breaks is a pipeline failure.
    """
    out = []
    for route in raw_routes:
        if not route.customers:
            continue
        stop = instance.stop(route.home_stop)
        drops = [choices[cid].drop_time for cid in route.customers]
        departure = max(drops) + stop.service_time
        if departure > min(drops) + stop.max_dwell + 1e-9:
            raise PipelineError(
                "d3-stitch",
                f"freighter {route.freighter}: packages arrive too far apart "
                f"({min(drops):g} vs {max(drops):g}) for the dwell cap")
        t_prev = departure
        loc_prev = stop.location
        times = []
        for cid in route.customers:
            cust = instance.customer(cid)
            arrival = (t_prev + instance.travel_minutes(loc_prev, cust.location)
                       + cust.service_time)
            t_here = max(arrival, cust.window_lo)
            if t_here > cust.window_hi + 1e-9:
                raise PipelineError(
                    "d3-stitch",
                    f"customer {cid}: retimed delivery {t_here:g} misses the window "
                    f"closing {cust.window_hi:g}")
            times.append(t_here)
            t_prev, loc_prev = t_here, cust.location
        out.append(FreighterRoute(
            freighter=route.freighter, home_stop=route.home_stop,
            departure=departure, customers=route.customers, times=tuple(times)))
    return out


def compare_methods(instances: list[tuple[str, Instance]], configs: list[RunConfig],
                    backend: Backend | None = None,
                    artifacts_root: Path | None = None) -> list:
    """One row per (instance, config); failures are recorded, never raised."""
    from .report import ReportRow

    backend = backend or ScipyHighsBackend()
    rows: list[ReportRow] = []
    for name, instance in instances:
        for config in configs:
            art = None
            if artifacts_root is not None:
                art = Path(artifacts_root) / f"{name}__{config.label()}"
            try:
                _plan, metrics = run_method(instance, config, backend, art)
                rows.append(ReportRow(
                    instance=name, method=config.method, t2_obj=config.t2_obj or "",
                    status="ok", t1_cost=metrics.t1_cost, t3_cost=metrics.t3_cost,
                    service_cost=metrics.service_cost, total=metrics.total,
                    runtime=metrics.wall_time,
                    stops_in_used=metrics.stops_in_used,
                    stops_out_used=metrics.stops_out_used,
                    trucks_used=metrics.trucks_used,
                    freighters_used=metrics.freighters_used,
                    trips_used=metrics.trips_used,
                    packages_per_truck=metrics.packages_per_truck,
                    packages_per_freighter=metrics.packages_per_freighter,
                    packages_per_trip=metrics.packages_per_trip,
                    error=""))
            except (PipelineError, ModelError) as exc:
                rows.append(ReportRow(
                    instance=name, method=config.method, t2_obj=config.t2_obj or "",
                    status="failed", error=str(exc)))
    _fill_deviations(rows)
    return rows


def _fill_deviations(rows) -> None:
    best: dict[str, float] = {}
    for row in rows:
        if row.status == "ok":
            best[row.instance] = min(best.get(row.instance, float("inf")), row.total)
    for row in rows:
        if row.status == "ok" and row.instance in best and best[row.instance] > 0:
            row.deviation_pct = 100.0 * (row.total - best[row.instance]) / best[row.instance]
