import json

import numpy as np
import pytest

from rcmopt.bench import (
    SUITES,
    SuiteReport,
    emit_performance_profile,
    emit_table,
    profile_knots,
    run_single,
    run_suite,
)
from rcmopt.model import RunRecord, Status
from rcmopt.problems import UnknownProblemError


def record(problem="p1", status=Status.CONVERGED, time=1.0, itc=(1, 5)):
    return RunRecord(
        problem=problem, n=4, m=2, status=status,
        x_final=np.zeros(4), f_final=0.5, kkt_residual=1.25e-7,
        constraint_violation=3.5e-9, itc_feasibility=itc[0], itc_main=itc[1],
        wall_time=time,
    )


def report(records, suite_id="synthetic"):
    return SuiteReport(suite_id=suite_id, records=records)


class TestRunSingle:
    def test_hs008_converges(self):
        rec = run_single("hs008")
        assert rec.status is Status.CONVERGED
        assert rec.itc_feasibility + rec.itc_main <= 30

    def test_loose_tolerance_takes_fewer_iterations(self):
        tight = run_single("hs008")
        loose = run_single("hs008", {"eps": 1e-2})
        assert loose.status is Status.CONVERGED
        total_loose = loose.itc_feasibility + loose.itc_main
        total_tight = tight.itc_feasibility + tight.itc_main
        assert total_loose < total_tight

    def test_unknown_id_raises(self):
        with pytest.raises(UnknownProblemError):
            run_single("nosuch")


class TestRunSuite:
    def test_hs_suite_mostly_converges(self):
        rep = run_suite("hs")
        assert len(rep.records) == len(SUITES["hs"]) == 5
        converged = sum(r.status is Status.CONVERGED for r in rep.records)
        assert converged >= 4
        # Failures stay in the report instead of being dropped.
        assert [r.problem for r in rep.records] == list(SUITES["hs"])

    def test_parallel_run_matches_sequential(self):
        seq = run_suite("hs")
        par = run_suite("hs", parallelism=4)
        for a, b in zip(seq.records, par.records):
            assert a.problem == b.problem
            assert a.status is b.status
            assert a.itc_feasibility == b.itc_feasibility
            assert a.itc_main == b.itc_main
            assert a.kkt_residual == b.kkt_residual

    def test_unknown_suite_raises(self):
        with pytest.raises(UnknownProblemError):
            run_suite("nosuch")


class TestEmitTable:
    def test_empty_report_is_header_only(self):
        out = emit_table(report([]), "text")
        assert len(out.strip().splitlines()) == 1

    def test_iteration_column_format(self):
        out = emit_table(report([record(itc=(3, 17))]), "text")
        assert "3+17" in out

    def test_json_round_trip(self):
        rec = record(time=0.123456789012345678)
        payload = json.loads(emit_table(report([rec]), "json"))
        got = payload["records"][0]
        assert got["wall_time"] == rec.wall_time
        assert got["kkt_residual"] == rec.kkt_residual
        assert got["constraint_violation"] == rec.constraint_violation
        assert got["status"] == "Converged"

    def test_csv_round_trip_of_floats(self):
        import csv
        import io

        rec = record(time=1.0 / 3.0)
        rows = list(csv.reader(io.StringIO(emit_table(report([rec]), "csv"))))
        header, data = rows
        idx = {name: i for i, name in enumerate(header)}
        assert float(data[idx["time"]]) == rec.wall_time
        assert float(data[idx["kkt"]]) == rec.kkt_residual
        assert float(data[idx["cons"]]) == rec.constraint_violation

    def test_unknown_format_raises(self):
        with pytest.raises(ValueError):
            emit_table(report([]), "xml")


class TestPerformanceProfile:
    def test_single_solver_is_constant_one_at_tau_one(self):
        rep = report([record(f"p{i}") for i in range(6)])
        knots = profile_knots([rep])
        assert knots["synthetic"] == [(1.0, 1.0)]

    def test_uniformly_slower_solver_reaches_one_at_two(self):
        fast = report([record(f"p{i}", time=1.0) for i in range(5)], "fast")
        slow = report([record(f"p{i}", time=2.0) for i in range(5)], "slow")
        knots = profile_knots([fast, slow])
        assert knots["fast"] == [(1.0, 1.0)]
        assert knots["slow"] == [(2.0, 1.0)]

    def test_failure_gets_sentinel_ratio(self):
        recs = [record(f"p{i}") for i in range(9)]
        recs.append(record("p9", status=Status.MAX_ITERATIONS))
        knots = profile_knots([report(recs)])
        assert knots["synthetic"] == [(1.0, 0.9), (999.0, 1.0)]

    def test_iterations_metric(self):
        a = report([record("p0", itc=(1, 4)), record("p1", itc=(0, 10))], "a")
        b = report([record("p0", itc=(1, 9)), record("p1", itc=(0, 5))], "b")
        knots = profile_knots([a, b], metric="iterations")
        assert knots["a"] == [(1.0, 0.5), (2.0, 1.0)]
        assert knots["b"] == [(1.0, 0.5), (2.0, 1.0)]

    def test_profiles_are_monotone_and_bounded(self):
        rng = np.random.default_rng(107)
        reports = []
        for s in range(3):
            recs = []
            for i in range(12):
                status = Status.CONVERGED if rng.random() > 0.2 else Status.MAX_ITERATIONS
                recs.append(record(f"p{i}", status=status,
                                   time=float(rng.uniform(0.1, 5.0))))
            reports.append(report(recs, f"s{s}"))
        for steps in profile_knots(reports).values():
            fracs = [f for _, f in steps]
            taus = [t for t, _ in steps]
            assert all(b >= a for a, b in zip(fracs, fracs[1:]))
            assert all(b > a for a, b in zip(taus, taus[1:]))
            assert fracs[-1] <= 1.0

    def test_mismatched_problem_sets_rejected(self):
        a = report([record("p0")], "a")
        b = report([record("other")], "b")
        with pytest.raises(ValueError):
            profile_knots([a, b])

    def test_csv_emission(self):
        rep = report([record(f"p{i}") for i in range(3)])
        out = emit_performance_profile([rep])
        lines = out.strip().splitlines()
        assert lines[0] == "solver,tau,fraction"
        assert lines[1].startswith("synthetic,1,")
