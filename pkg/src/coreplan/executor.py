"""Execute a plan: preprocessing, then barrier-separated slots on at most k workers.

Virtual-time runs use exact rational clocks and are pure functions of their
inputs. Real-time runs execute the engine on threads and time each query
with a monotonic clock.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .dispatch import MonotonicClock, list_schedule, run_threaded, worker_cap
from .errors import ValidationError
from .planner import IDEAL, REAL, Plan, PlanConfig, hoeffding_from_stats, plan_ideal, plan_real
from .workload import TimingStats, preprocess

VIRTUAL = "virtual_time"
REAL_TIME = "real_time"


@dataclass(frozen=True)
class TraceRow:
    query: int
    slot: int
    worker: int
    start: float
    end: float


@dataclass
class ExecutionReport:
    mode: str
    plan_mode: str
    deadline: float
    preprocessing_cores: int
    preprocessing_elapsed: float
    t_pre: float
    t_max_observed: float
    per_slot: list
    worker_totals: list
    T_max: float
    total_elapsed: float
    check_value: float
    feasible: bool
    cores_used: int
    attempts: int = 1
    worker_cap: int | None = None
    notes: list = field(default_factory=list)
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        del out["trace"]
        return out

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["query", "slot", "worker", "start", "end"])
        for row in self.trace:
            writer.writerow([row.query, row.slot, row.worker, repr(row.start), repr(row.end)])
        return buf.getvalue()


def _sum(values):
    values = list(values)
    if values and isinstance(values[0], Fraction):
        return sum(values, Fraction(0))
    return math.fsum(values)


def _assemble(plan: Plan, mode: str, pre, pre_cores: int, slots, notes=(), cap=None) -> ExecutionReport:
    """Build a report from the preprocessing schedule and per-slot schedules.

    ``pre`` is (durations, elapsed); ``slots`` is a list of (queries, Schedule).
    Numbers may be Fractions (virtual) or floats (real); the feasibility
    comparison happens before conversion to float.
    """
    pre_durations, pre_elapsed, pre_records = pre
    t_pre = _sum(pre_durations)
    t_max = max(pre_durations)
    totals = [0] * max((len(s.worker_totals) for _, s in slots), default=0)
    per_slot = []
    trace = [TraceRow(r.position, -1, r.worker, float(r.start), float(r.end)) for r in pre_records]
    clock = pre_elapsed
    for index, (queries, sched) in enumerate(slots):
        for j, t in enumerate(sched.worker_totals):
            totals[j] = totals[j] + t
        per_slot.append({
            "slot": index,
            "worker_totals": [float(t) for t in sched.worker_totals],
            "duration": float(sched.makespan),
        })
        trace.extend(
            TraceRow(queries[r.position], index, r.worker, float(clock + r.start), float(clock + r.end))
            for r in sched.records
        )
        clock = clock + sched.makespan
    t_big = max(totals, default=0)
    head = t_max if plan.mode == IDEAL else t_pre
    check = head + t_big
    deadline = Fraction(plan.deadline) if isinstance(check, Fraction) else plan.deadline
    return ExecutionReport(
        mode=mode,
        plan_mode=plan.mode,
        deadline=plan.deadline,
        preprocessing_cores=pre_cores,
        preprocessing_elapsed=float(pre_elapsed),
        t_pre=float(t_pre),
        t_max_observed=float(t_max),
        per_slot=per_slot,
        worker_totals=[float(t) for t in totals],
        T_max=float(t_big),
        total_elapsed=float(clock),
        check_value=float(check),
        feasible=bool(check <= deadline),
        cores_used=max((sum(1 for t in s.worker_totals if t > 0) for _, s in slots), default=0),
        worker_cap=cap,
        notes=list(notes),
        trace=trace,
    )


def simulate(plan: Plan, durations, c: int) -> ExecutionReport:
    """Virtual-time execution of ``plan`` with the given per-query durations.

    Queries 0..s-1 are the preprocessing sample, run on ``c`` workers.
    """
    if len(durations) < plan.total_queries:
        raise ValidationError(
            f"durations cover {len(durations)} queries, plan has {plan.total_queries}"
        )
    exact = [Fraction(float(t)) for t in durations[: plan.total_queries]]
    pre_durations = exact[: plan.s]
    pre_sched = list_schedule(pre_durations, c)
    slots = [(queries, list_schedule([exact[q] for q in queries], plan.k))
             for queries in plan.assignment if queries]
    return _assemble(plan, VIRTUAL, (pre_durations, pre_sched.makespan, pre_sched.records), c, slots)


def run_slot(queries, k: int, engine, attempt: int = 0, *, virtual: bool = True,
             clock=None, max_workers: int | None = None):
    """Run one slot on at most k workers and return its Schedule.

    ``worker_totals`` holds T_j for each worker; record positions index
    into ``queries``.
    """
    if not queries:
        raise ValidationError("slot is empty")
    if k < 1:
        raise ValidationError("k must be >= 1")
    if virtual:
        return list_schedule([Fraction(engine.duration(q, attempt)) for q in queries], k)
    clock = clock or MonotonicClock()
    cap = worker_cap(max_workers)
    workers = k if cap is None else min(k, cap)
    return run_threaded(list(queries), workers, lambda q: engine.execute(q, attempt, clock), clock)


def _real_slots(plan: Plan, engine, attempt, clock, max_workers):
    return [(queries, run_slot(queries, plan.k, engine, attempt, virtual=False,
                               clock=clock, max_workers=max_workers))
            for queries in plan.assignment if queries]


def _real_pre(stats: TimingStats):
    # Records are rebuilt from durations only; real preprocessing keeps no per-worker trace.
    return (list(stats.durations), stats.elapsed, [])


def run_ideal(config: PlanConfig, engine, *, virtual: bool = True, clock=None,
              max_workers: int | None = None, sample: int | None = None):
    """Unbounded-machine loop: preprocess on s cores, plan, execute, retry on overshoot.

    Returns (plan, report). After ``max_retries`` failed re-runs the last
    report comes back with feasible=False.
    """
    x, deadline = config.total_queries, config.deadline
    s = sample if sample is not None else config.sample_count()
    cap = worker_cap(max_workers)
    for attempt in range(config.max_retries + 1):
        if virtual:
            durations = [engine.duration(i, attempt) for i in range(x)]
            plan = plan_ideal(x, deadline, s, max(durations[:s]))
            report = simulate(plan, durations, s)
        else:
            clock = clock or MonotonicClock()
            cores = min(s, os.cpu_count() or 1, cap or s)
            stats = preprocess(engine, s, cores, attempt=attempt, virtual=False, clock=clock,
                               t_hat=config.t_hat, t_hat_factor=config.t_hat_factor)
            plan = plan_ideal(x, deadline, s, stats.t_max)
            notes = [f"preprocessed {s} samples on {cores} threads instead of {s} cores"] if cores < s else []
            report = _assemble(plan, REAL_TIME, _real_pre(stats), cores,
                               _real_slots(plan, engine, attempt, clock, max_workers), notes, cap)
        sample_stats = TimingStats.from_durations(
            durations[:s] if virtual else stats.durations, c=s,
            t_hat=config.t_hat, t_hat_factor=config.t_hat_factor)
        plan.bounds["hoeffding"] = hoeffding_from_stats(x, deadline, sample_stats, config.p_f)
        report.attempts = attempt + 1
        if report.feasible:
            break
    return plan, report


def run_real(config: PlanConfig, engine, *, virtual: bool = True, clock=None,
             max_workers: int | None = None, sample: int | None = None, stats: TimingStats | None = None):
    """Bounded-machine single pass: preprocess on c cores, gate, plan with d, execute.

    Raises ResourceError when the gate fails. A deadline miss after execution
    is reported through ``report.feasible`` rather than raised.
    """
    x = config.total_queries
    s = sample if sample is not None else config.sample_count()
    cap = worker_cap(max_workers)
    if virtual:
        durations = [engine.duration(i, 0) for i in range(x)]
        if stats is None:
            stats = TimingStats.from_durations(durations[:s], c=config.c, t_hat=config.t_hat,
                                               t_hat_factor=config.t_hat_factor)
        plan = plan_real(config, stats)
        report = simulate(plan, durations, config.c)
    else:
        clock = clock or MonotonicClock()
        if stats is None:
            stats = preprocess(engine, s, config.c, virtual=False, clock=clock,
                               t_hat=config.t_hat, t_hat_factor=config.t_hat_factor)
        plan = plan_real(config, stats)
        report = _assemble(plan, REAL_TIME, _real_pre(stats), config.c,
                           _real_slots(plan, engine, 0, clock, max_workers), (), cap)
    return plan, report, stats


def execute_plan(plan: Plan, engine, c: int, *, virtual: bool = True, attempt: int = 0,
                 clock=None, max_workers: int | None = None, stats: TimingStats | None = None):
    """Execute a previously computed plan (for example one loaded from JSON)."""
    if virtual:
        durations = [engine.duration(i, attempt) for i in range(plan.total_queries)]
        return simulate(plan, durations, c)
    clock = clock or MonotonicClock()
    if stats is None:
        stats = preprocess(engine, plan.s, c, attempt=attempt, virtual=False, clock=clock)
    return _assemble(plan, REAL_TIME, _real_pre(stats), c,
                     _real_slots(plan, engine, attempt, clock, max_workers), (), worker_cap(max_workers))
