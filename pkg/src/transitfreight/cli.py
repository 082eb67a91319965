"""Command-line interface.

Verbs: gen, solve, validate, compare, export-lp, report. Machine-readable
outputs go to the paths given by --out / --out-dir; diagnostics go to
stderr as JSON. Exit codes: 0 success, 1 runtime failure (including plans
that fail validation), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import BackendError, get_backend
from .compat import derive_compatibility
from .generate import GenParams, generate_instance
from .instance import InstanceError, parse_instance, serialize_instance
from .milp import ModelError, write_lp
from .model_full import FullOptions, build_full
from .pipeline import (
    DEFAULT_STAGE_SECONDS,
    PipelineError,
    RunConfig,
    compare_methods,
    run_method,
)
from .plan import Plan, parse_plan, serialize_plan
from .report import emit_report, rows_from_csv, rows_to_csv
from .validate import (
    ValidationInputError,
    validate_plan,
    validate_vrptw_plan,
)


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", default=None,
                        help="solver backend: highs (default), subprocess[:path]")
    parser.add_argument("--time-limit", type=float, default=None,
                        help="seconds per stage (overrides the per-stage defaults)")
    parser.add_argument("--gap", type=float, default=1e-6,
                        help="relative MIP gap tolerance")


def _stage_seconds(time_limit: float | None) -> dict | None:
    if time_limit is None:
        return None
    return {k: time_limit for k in DEFAULT_STAGE_SECONDS}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transitfreight",
        description="Three-tier freight-on-transit delivery planning toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--customers", type=int, required=True)
    p.add_argument("--lines", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stops-per-line", default="4:6", help="MIN:MAX stops per line")
    p.add_argument("--box", default="100x100", help="WxH bounding box")
    p.add_argument("--trips-per-line", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="solve one instance with one method")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", required=True,
                   choices=["full", "d1", "d2", "d3", "vrptw"])
    p.add_argument("--t2-obj", default=None, choices=["obj1", "obj2", "obj3"])
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--out", required=True, help="plan document path")
    p.add_argument("--metrics", default=None, help="metrics JSON path")
    p.add_argument("--artifacts", default=None, help="per-stage artifact directory")
    _add_backend_flags(p)

    p = sub.add_parser("validate", help="check a plan against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", default=None, help="violation report path")

    p = sub.add_parser("compare", help="run several methods over an instance directory")
    p.add_argument("--instances", required=True, help="directory of instance documents")
    p.add_argument("--methods", required=True,
                   help="comma list, e.g. full,d1,d2,d3,vrptw")
    p.add_argument("--t2-obj", default="obj2", choices=["obj1", "obj2", "obj3"])
    p.add_argument("--betas", default=None, help="comma list of freighter cost scales")
    p.add_argument("--mus", default=None, help="comma list of service-cost scales (full only)")
    p.add_argument("--out", required=True, help="rows CSV path")
    p.add_argument("--report-dir", default=None, help="also emit aggregate/series files here")
    p.add_argument("--artifacts", default=None, help="per-run artifact root")
    _add_backend_flags(p)

    p = sub.add_parser("export-lp", help="write a model as LP text")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", default="full", choices=["full", "vrptw"])
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="emit aggregates and series from a rows CSV")
    p.add_argument("--rows", required=True)
    p.add_argument("--out-dir", required=True)
    return parser


def _parse_range(text: str, sep: str) -> tuple[int, int]:
    lo, hi = text.split(sep, 1)
    return int(lo), int(hi)


def _cmd_gen(args) -> int:
    lo, hi = _parse_range(args.stops_per_line, ":")
    w, h = args.box.lower().split("x", 1)
    params = GenParams(
        n_customers=args.customers, n_lines=args.lines, seed=args.seed,
        stops_per_line=(lo, hi), box=(float(w), float(h)),
        trips_per_line=args.trips_per_line)
    instance = generate_instance(params)
    Path(args.out).write_text(serialize_instance(instance), encoding="utf-8")
    print(f"wrote {args.out}: {len(instance.customers)} customers, "
          f"{len(instance.lines)} lines, {len(instance.stops)} stops, "
          f"{len(instance.trips)} trips")
    return 0


def _cmd_solve(args) -> int:
    instance = parse_instance(Path(args.instance).read_text(encoding="utf-8"))
    config = RunConfig(
        method=args.method, t2_obj=args.t2_obj, beta=args.beta, mu=args.mu,
        rel_gap=args.gap, stage_seconds=_stage_seconds(args.time_limit))
    backend = get_backend(args.backend)
    artifacts = Path(args.artifacts) if args.artifacts else None
    plan, metrics = run_method(instance, config, backend, artifacts)
    Path(args.out).write_text(serialize_plan(plan), encoding="utf-8")
    if args.metrics:
        Path(args.metrics).write_text(metrics.to_json(), encoding="utf-8")
    print(f"{config.label()}: total={metrics.total:.4f} "
          f"(t1={metrics.t1_cost:.4f}, t3={metrics.t3_cost:.4f}) "
          f"in {metrics.wall_time:.2f}s")
    return 0


def _cmd_validate(args) -> int:
    instance = parse_instance(Path(args.instance).read_text(encoding="utf-8"))
    plan = parse_plan(Path(args.plan).read_text(encoding="utf-8"))
    if isinstance(plan, Plan):
        violations = validate_plan(instance, plan)
    else:
        violations = validate_vrptw_plan(instance, plan)
    report = {
        "violations": [
            {"code": v.code, "subjects": list(v.subjects),
             "measured": v.measured, "bound": v.bound, "detail": v.detail}
            for v in violations
        ],
        "ok": not violations,
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0 if not violations else 1


def _cmd_compare(args) -> int:
    directory = Path(args.instances)
    instance_files = sorted(directory.glob("*.json"))
    if not instance_files:
        raise InstanceError(f"no instance documents in {directory}")
    instances = [
        (path.stem, parse_instance(path.read_text(encoding="utf-8")))
        for path in instance_files
    ]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    betas = [float(b) for b in args.betas.split(",")] if args.betas else [None]
    mus = [float(m) for m in args.mus.split(",")] if args.mus else [0.0]
    configs = []
    stage_seconds = _stage_seconds(args.time_limit)
    for method in methods:
        t2 = args.t2_obj if method in ("d1", "d2", "d3") else None
        if method == "d3" and t2 == "obj3":
            t2 = "obj2"
        for beta in betas:
            for mu in mus:
                if mu and method != "full":
                    continue
                configs.append(RunConfig(
                    method=method, t2_obj=t2, beta=beta, mu=mu,
                    rel_gap=args.gap, stage_seconds=stage_seconds))
    backend = get_backend(args.backend)
    artifacts = Path(args.artifacts) if args.artifacts else None
    rows = compare_methods(instances, configs, backend, artifacts)
    Path(args.out).write_text(rows_to_csv(rows), encoding="utf-8")
    if args.report_dir:
        emit_report(rows, Path(args.report_dir))
    solved = sum(1 for r in rows if r.status == "ok")
    print(f"{solved}/{len(rows)} runs succeeded; rows written to {args.out}")
    return 0


def _cmd_export_lp(args) -> int:
    instance = parse_instance(Path(args.instance).read_text(encoding="utf-8"))
    if args.method == "full":
        model = build_full(instance, derive_compatibility(instance), FullOptions())
    else:
        from .vrptw import build_vrptw
        model = build_vrptw(instance)
    Path(args.out).write_text(write_lp(model), encoding="utf-8")
    print(f"wrote {args.out}: {len(model.variables)} variables, "
          f"{len(model.constraints)} constraints")
    return 0


def _cmd_report(args) -> int:
    rows = rows_from_csv(Path(args.rows).read_text(encoding="utf-8"))
    files = emit_report(rows, Path(args.out_dir))
    print(f"wrote {len(files)} report files to {args.out_dir}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "validate": _cmd_validate,
    "compare": _cmd_compare,
    "export-lp": _cmd_export_lp,
    "report": _cmd_report,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except (InstanceError, ModelError, PipelineError, BackendError,
            ValidationInputError, OSError, ValueError) as exc:
        diagnostic = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(diagnostic), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
