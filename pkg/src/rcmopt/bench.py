"""Benchmark harness: run one problem or a suite, emit result tables and
performance-profile data.

Suites are fixed problem-id lists; individual failures are recorded in the
report rather than aborting the run. Profiles follow the usual
cumulative-distribution convention: per problem, each solver's metric is
divided by the best metric across solvers, and failed runs get the sentinel
ratio 999.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import GcnmtrConfig, RcmConfig, RunRecord, Status, validate_problem
from .problems import NamedProblem, UnknownProblemError, get_problem
from .solver import solve

log = logging.getLogger(__name__)

FAILURE_RATIO = 999.0

_ACCEPTANCE_BASES = (
    "trid",
    "rosenbrock",
    "broyden-tridiagonal",
    "discrete-boundary-value",
    "extended-powell-singular",
)


def _constructed_ids(n: int, m_values: tuple[int, ...]) -> list[str]:
    ids = [f"ackley:n={n}"]
    for base in _ACCEPTANCE_BASES:
        ids.extend(f"ackley-{base}:n={n},m={m}" for m in m_values if m > 0)
    return ids


SUITES: dict[str, tuple[str, ...]] = {
    "hs": ("hs007", "hs008", "hs009", "hs046", "hs100lnp"),
    "constructed-small": tuple(_constructed_ids(50, (0, 10, 25, 49))),
    "constructed-medium": tuple(_constructed_ids(200, (10, 100, 199))),
}
SUITES["all"] = SUITES["hs"] + SUITES["constructed-small"] + SUITES["constructed-medium"]


@dataclass
class SuiteReport:
    suite_id: str
    records: list[RunRecord]
    rcm_config: RcmConfig = field(default_factory=RcmConfig)
    gcnmtr_config: GcnmtrConfig = field(default_factory=GcnmtrConfig)
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(
        _dt.timezone.utc).isoformat())


def run_single(problem_id: str, overrides: dict | None = None,
               trace: list | None = None) -> RunRecord:
    """Instantiate, validate and solve one problem by id.

    ``overrides`` maps RcmConfig field names to values (e.g. {"eps": 1e-4});
    the feasibility tolerance follows eps0 unless pinned explicitly.
    """
    named = get_problem(problem_id)
    cfg = RcmConfig(**(overrides or {}))
    issues = validate_problem(named.problem, fd_eps=cfg.fd_eps)
    for issue in issues:
        log.warning("%s: validation: %s", problem_id, issue)
    return solve(named.problem, cfg=cfg, trace=trace)


def run_suite(suite_id: str, parallelism: int = 1,
              overrides: dict | None = None) -> SuiteReport:
    """Run every problem of a suite; failures never abort the run.

    With parallelism > 1 the independent solves run on a thread pool; the
    record order (and, solves being deterministic, everything but wall time)
    matches the sequential run.
    """
    if suite_id not in SUITES:
        raise UnknownProblemError(
            f"unknown suite {suite_id!r}; choose from {sorted(SUITES)}")
    ids = SUITES[suite_id]
    cfg = RcmConfig(**(overrides or {}))

    def one(pid: str) -> RunRecord:
        try:
            return run_single(pid, overrides)
        except Exception as exc:  # noqa: BLE001 - a suite never aborts
            log.error("%s: %s", pid, exc)
            named = get_problem(pid)
            return RunRecord(
                problem=pid, n=named.problem.n, m=named.problem.m,
                status=Status.NUMERICAL_BREAKDOWN,
                x_final=np.asarray(named.problem.start_point, float),
                f_final=float("nan"), kkt_residual=float("inf"),
                constraint_violation=float("inf"),
                itc_feasibility=0, itc_main=0, wall_time=0.0,
            )

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(one, ids))
    else:
        records = [one(pid) for pid in ids]
    return SuiteReport(suite_id=suite_id, records=records, rcm_config=cfg)


# ---------------------------------------------------------------------------
# Tables


_COLUMNS = ("problem", "n", "m", "itc", "time", "kkt", "cons", "status")


def _row_values(rec: RunRecord) -> dict:
    return {
        "problem": rec.problem,
        "n": rec.n,
        "m": rec.m,
        "itc": f"{rec.itc_feasibility}+{rec.itc_main}",
        "time": rec.wall_time,
        "kkt": rec.kkt_residual,
        "cons": rec.constraint_violation,
        "status": rec.status.value,
    }


def emit_table(report: SuiteReport, fmt: str = "text") -> str:
    """Render a suite report as text, csv or json.

    Text mode uses 2-decimal scientific notation; csv and json keep full
    precision (17 significant digits) so floats round-trip exactly.
    """
    if fmt == "text":
        lines = [f"{'problem':<34} {'n':>5} {'m':>5} {'itc':>9} "
                 f"{'time':>9} {'kkt':>9} {'cons':>9}  status"]
        for rec in report.records:
            row = _row_values(rec)
            lines.append(
                f"{row['problem']:<34} {row['n']:>5} {row['m']:>5} "
                f"{row['itc']:>9} {row['time']:>9.2e} {row['kkt']:>9.2e} "
                f"{row['cons']:>9.2e}  {row['status']}"
            )
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(_COLUMNS)
        for rec in report.records:
            row = _row_values(rec)
            writer.writerow([
                row["problem"], row["n"], row["m"], row["itc"],
                f"{row['time']:.17g}", f"{row['kkt']:.17g}",
                f"{row['cons']:.17g}", row["status"],
            ])
        return buf.getvalue()
    if fmt == "json":
        payload = {
            "suite_id": report.suite_id,
            "timestamp": report.timestamp,
            "rcm_config": asdict(report.rcm_config),
            "gcnmtr_config": asdict(report.gcnmtr_config),
            "records": [_record_json(rec) for rec in report.records],
        }
        return json.dumps(payload, indent=2) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def _record_json(rec: RunRecord) -> dict:
    out = asdict(rec)
    out["status"] = rec.status.value
    out["x_final"] = [float(v) for v in rec.x_final]
    return out


# ---------------------------------------------------------------------------
# Performance profiles


def profile_knots(reports: list[SuiteReport], metric: str = "time",
                  ) -> dict[str, list[tuple[float, float]]]:
    """Per report label, the (tau, fraction) knots of the cumulative
    distribution of metric ratios against the best report on each problem.

    Failed runs (any non-Converged status) get ratio 999 exactly. All
    reports must cover the same problem sequence.
    """
    if not reports:
        raise ValueError("need at least one report")
    if metric not in ("time", "iterations"):
        raise ValueError(f"unknown metric {metric!r}")
    base_ids = [rec.problem for rec in reports[0].records]
    for rep in reports[1:]:
        if [rec.problem for rec in rep.records] != base_ids:
            raise ValueError("reports cover different problem sets")
    n_problems = len(base_ids)
    if n_problems == 0:
        raise ValueError("reports are empty")

    def value(rec: RunRecord) -> float:
        if rec.status is not Status.CONVERGED:
            return float("inf")
        if metric == "time":
            return max(rec.wall_time, 1e-12)
        return max(float(rec.itc_feasibility + rec.itc_main), 1.0)

    labels = []
    counts: dict[str, int] = {}
    for rep in reports:
        counts[rep.suite_id] = counts.get(rep.suite_id, 0) + 1
        labels.append(rep.suite_id if counts[rep.suite_id] == 1
                      else f"{rep.suite_id}#{counts[rep.suite_id]}")

    table = np.array([[value(rec) for rec in rep.records] for rep in reports])
    best = table.min(axis=0)
    knots: dict[str, list[tuple[float, float]]] = {}
    for row, label in zip(table, labels):
        ratios = np.where(
            np.isfinite(row),
            np.divide(row, best, out=np.full_like(row, FAILURE_RATIO),
                      where=np.isfinite(best) & (best > 0)),
            FAILURE_RATIO,
        )
        taus = np.sort(ratios)
        steps: list[tuple[float, float]] = []
        for i, tau in enumerate(taus, start=1):
            frac = i / n_problems
            if steps and steps[-1][0] == tau:
                steps[-1] = (float(tau), frac)
            else:
                steps.append((float(tau), frac))
        knots[label] = steps
    return knots


def emit_performance_profile(reports: list[SuiteReport], metric: str = "time") -> str:
    """CSV with columns solver, tau, fraction; one row per knot."""
    knots = profile_knots(reports, metric)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["solver", "tau", "fraction"])
    for label, steps in knots.items():
        for tau, frac in steps:
            writer.writerow([label, f"{tau:.17g}", f"{frac:.17g}"])
    return buf.getvalue()
