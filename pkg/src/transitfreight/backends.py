"""MILP solve backends.

Two adapters satisfy the same contract: an in-process one built on
scipy's HiGHS interface (the default), and a subprocess one that writes an
LP file, invokes an external solver binary, and parses its solution file.
The subprocess command comes from the TRANSITFREIGHT_SOLVER environment
variable or an explicit path; solution parsing tolerates both plain
``name value`` listings and structured solver reports.
"""

from __future__ import annotations

import os
import re
import subprocess
import tempfile
import time
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint
from scipy.optimize import milp as scipy_milp

from .milp import (
    BINARY,
    EQUAL,
    GREATER_EQUAL,
    INF,
    INTEGER,
    LESS_EQUAL,
    MilpModel,
    SolveLimits,
    SolveResult,
    _sanitize_names,
    write_lp,
)

SOLVER_ENV_VAR = "TRANSITFREIGHT_SOLVER"


class BackendError(RuntimeError):
    pass


class Backend(Protocol):
    def solve(self, model: MilpModel, limits: SolveLimits) -> SolveResult: ...


class ScipyHighsBackend:
    """In-process solve via scipy.optimize.milp (HiGHS)."""

    name = "highs"

    def solve(self, model: MilpModel, limits: SolveLimits) -> SolveResult:
        n = len(model.variables)
        if n == 0:
            raise BackendError("empty model")
        c = np.zeros(n)
        for var, coeff in model.objective:
            c[var.index] += coeff
        lb = np.array([v.lb for v in model.variables])
        ub = np.array([min(v.ub, 1e30) if v.ub != INF else np.inf for v in model.variables])
        integrality = np.array(
            [1 if v.kind in (BINARY, INTEGER) else 0 for v in model.variables])

        constraints = []
        if model.constraints:
            rows, cols, vals = [], [], []
            lo = np.empty(len(model.constraints))
            hi = np.empty(len(model.constraints))
            for i, con in enumerate(model.constraints):
                for var, coeff in con.terms:
                    rows.append(i)
                    cols.append(var.index)
                    vals.append(coeff)
                if con.sense == LESS_EQUAL:
                    lo[i], hi[i] = -np.inf, con.rhs
                elif con.sense == GREATER_EQUAL:
                    lo[i], hi[i] = con.rhs, np.inf
                elif con.sense == EQUAL:
                    lo[i], hi[i] = con.rhs, con.rhs
            matrix = sparse.csc_array(
                (vals, (rows, cols)), shape=(len(model.constraints), n))
            constraints = [LinearConstraint(matrix, lo, hi)]

        started = time.perf_counter()
        res = scipy_milp(
            c=c,
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(lb, ub),
            options={
                "time_limit": limits.time_limit,
                "mip_rel_gap": limits.rel_gap,
                "presolve": True,
                "disp": False,
            },
        )
        wall = time.perf_counter() - started

        values: dict[str, float] = {}
        if res.x is not None:
            values = {v.name: float(res.x[v.index]) for v in model.variables}
        best_bound = getattr(res, "mip_dual_bound", None)
        objective = float(res.fun) if res.fun is not None else None
        if res.status == 0:
            status = "optimal"
            if best_bound is None:
                best_bound = objective
        elif res.status == 1:
            status = "feasible" if values else "timeout"
        elif res.status == 2:
            status = "infeasible"
            values, objective = {}, None
        else:
            status = "error"
            values, objective = {}, None
        return SolveResult(
            status=status,
            values=values,
            objective=objective,
            best_bound=float(best_bound) if best_bound is not None else None,
            wall_time=wall,
            message=str(res.message),
        )


_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_OBJECTIVE_LINE = re.compile(r"objective(?:\s+value)?\s*[:=]?\s*([+-]?[0-9.eE+-]+)", re.IGNORECASE)


def parse_solution_text(text: str, model: MilpModel) -> tuple[str, dict[str, float], float | None]:
    """Extract (status, values, objective) from a solver's solution report.

    Accepts structured documents (status header plus column sections) and
    bare ``name value`` pair listings; variable names are matched through the
    same sanitization used by write_lp. Missing variables default to zero.
    """
    sanitized = _sanitize_names(model.variables)
    back = {v: k for k, v in sanitized.items()}
    status = ""
    objective: float | None = None
    values: dict[str, float] = {}

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        lowered = line.lower()
        if not status:
            if "infeasible" in lowered:
                status = "infeasible"
            elif "unbounded" in lowered:
                status = "error"
            elif "optimal" in lowered:
                status = "optimal"
            elif "time" in lowered and ("limit" in lowered or "stopped" in lowered):
                status = "feasible"
        if objective is None:
            match = _OBJECTIVE_LINE.search(line)
            if match:
                try:
                    objective = float(match.group(1))
                except ValueError:
                    pass
        if line.startswith(("#", "//")):
            continue
        tokens = line.split()
        for i, tok in enumerate(tokens):
            if tok in back and i + 1 < len(tokens) and _NUMBER.match(tokens[i + 1]):
                values[back[tok]] = float(tokens[i + 1])
                break

    if status == "infeasible":
        return "infeasible", {}, None
    if values:
        full = {v.name: values.get(v.name, 0.0) for v in model.variables}
        return (status or "feasible"), full, objective
    if status == "optimal":
        # status line without values is a malformed report
        return "error", {}, objective
    return (status or "error"), {}, objective


class SubprocessBackend:
    """Write LP, run an external solver executable, parse its solution file."""

    name = "subprocess"

    def __init__(self, command: str | None = None):
        command = command or os.environ.get(SOLVER_ENV_VAR)
        if not command:
            raise BackendError(
                f"no solver binary configured; set {SOLVER_ENV_VAR} or pass a path")
        self.command = command

    def _argv(self, lp_path: str, sol_path: str, limits: SolveLimits) -> list[str]:
        stem = Path(self.command.split()[0]).name.lower()
        head = self.command.split()
        if "cbc" in stem:
            return head + [lp_path, "-seconds", str(limits.time_limit),
                           "-ratioGap", str(limits.rel_gap), "-solve",
                           "-solution", sol_path]
        if "highs" in stem:
            return head + [lp_path, "--time_limit", str(limits.time_limit),
                           "--solution_file", sol_path]
        return head + [lp_path, sol_path]

    def solve(self, model: MilpModel, limits: SolveLimits) -> SolveResult:
        started = time.perf_counter()
        with tempfile.TemporaryDirectory(prefix="tfsolve_") as tmp:
            lp_path = os.path.join(tmp, "model.lp")
            sol_path = os.path.join(tmp, "model.sol")
            Path(lp_path).write_text(write_lp(model), encoding="utf-8")
            argv = self._argv(lp_path, sol_path, limits)
            try:
                proc = subprocess.run(
                    argv, capture_output=True, text=True,
                    timeout=limits.time_limit + 60)
            except (OSError, subprocess.TimeoutExpired) as exc:
                return SolveResult(
                    status="error", values={}, objective=None, best_bound=None,
                    wall_time=time.perf_counter() - started,
                    message=f"solver invocation failed: {exc}")
            report = ""
            if os.path.exists(sol_path):
                report = Path(sol_path).read_text(encoding="utf-8")
            if not report.strip():
                report = proc.stdout
            if not report.strip():
                return SolveResult(
                    status="error", values={}, objective=None, best_bound=None,
                    wall_time=time.perf_counter() - started,
                    message=f"solver produced no solution output "
                            f"(rc={proc.returncode}, stderr={proc.stderr[-500:]})")
            status, values, objective = parse_solution_text(report, model)
            if values and objective is None:
                objective = model.objective_value(values)
            return SolveResult(
                status=status,
                values=values,
                objective=objective,
                best_bound=objective if status == "optimal" else None,
                wall_time=time.perf_counter() - started,
                message=f"rc={proc.returncode}")


def get_backend(spec: str | None = None) -> Backend:
    """Resolve a backend from a CLI-style spec string."""
    if spec in (None, "", "highs", "scipy", "default"):
        return ScipyHighsBackend()
    if spec == "subprocess":
        return SubprocessBackend()
    if spec.startswith("subprocess:"):
        return SubprocessBackend(spec.split(":", 1)[1])
    raise BackendError(f"unknown backend {spec!r}")


def solve(model: MilpModel, backend: Backend | None = None,
          limits: SolveLimits | None = None) -> SolveResult:
    """Solve a model, never returning a silently-empty result."""
    backend = backend or ScipyHighsBackend()
    limits = limits or SolveLimits()
    result = backend.solve(model, limits)
    if result.status not in ("optimal", "feasible", "infeasible", "timeout", "error"):
        raise BackendError(f"backend returned unknown status {result.status!r}")
    return result
