"""Greedy list scheduling, in virtual time and on real threads.

Both paths share one rule: an idle worker takes the next unassigned item in
order. Among workers that become idle at the same instant, the one whose
previous item was handed out first goes first. At time zero worker j takes
item j.
"""
from __future__ import annotations

import heapq
import os
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence


@dataclass(frozen=True)
class Record:
    position: int
    worker: int
    start: float
    end: float

    @property
    def elapsed(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Schedule:
    records: list
    worker_totals: list
    makespan: object


def list_schedule(durations: Sequence, workers: int) -> Schedule:
    """Virtual-time greedy schedule; exact when given Fractions."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = len(durations)
    zero = Fraction(0)
    if n <= workers:
        records = [Record(i, i, zero, durations[i]) for i in range(n)]
        totals = list(durations) + [zero] * (workers - n)
        return Schedule(records, totals, max(totals, default=zero))
    totals = [zero] * workers
    records = []
    heap = []
    for j in range(workers):
        records.append(Record(j, j, zero, durations[j]))
        totals[j] = durations[j]
        heapq.heappush(heap, (durations[j], j, j))
    seq = workers
    for i in range(workers, n):
        free_at, _, j = heapq.heappop(heap)
        end = free_at + durations[i]
        records.append(Record(i, j, free_at, end))
        totals[j] += durations[i]
        heapq.heappush(heap, (end, seq, j))
        seq += 1
    makespan = max(r.end for r in records)
    return Schedule(records, totals, makespan)


class MonotonicClock:
    """Wall clock for real-time runs; the hooks used by test clocks are no-ops."""

    def now(self) -> float:
        return time.perf_counter_ns() / 1e9

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)

    def begin(self, workers: int) -> None:
        pass

    def enter(self) -> None:
        pass

    def leave(self) -> None:
        pass


def worker_cap(requested: int | None = None) -> int | None:
    """Upper bound on real-mode threads: explicit value, else COREPLAN_THREADS."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("COREPLAN_THREADS")
    if env:
        return max(1, int(env))
    return None


def run_threaded(
    items: Sequence,
    workers: int,
    execute: Callable,
    clock=None,
) -> Schedule:
    """Run ``execute(item)`` for every item on at most ``workers`` threads.

    Record times are relative to the clock reading taken before the threads
    start. The first failure stops further dispatch and is re-raised after
    the join, annotated with the number of completed items.
    """
    from .errors import QueryFailure

    clock = clock or MonotonicClock()
    count = len(items)
    width = workers
    workers = max(1, min(workers, count))
    lock = threading.Lock()
    state = {"cursor": 0, "next_id": 0}
    records: list[Record] = []
    errors: list[BaseException] = []
    origin = clock.now()

    def loop():
        clock.enter()
        wid = None
        try:
            while True:
                with lock:
                    if errors or state["cursor"] >= count:
                        return
                    pos = state["cursor"]
                    state["cursor"] += 1
                    if wid is None:
                        wid = state["next_id"]
                        state["next_id"] += 1
                start = clock.now()
                try:
                    execute(items[pos])
                except BaseException as exc:  # noqa: BLE001 - reported after join
                    with lock:
                        errors.append(exc)
                    return
                end = clock.now()
                with lock:
                    records.append(Record(pos, wid, start - origin, end - origin))
        finally:
            clock.leave()

    clock.begin(workers)
    threads = [threading.Thread(target=loop, name=f"coreplan-worker-{i}") for i in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise QueryFailure(f"query failed: {errors[0]!r}", completed=len(records)) from errors[0]
    records.sort(key=lambda r: r.position)
    # idle workers still report a zero total
    totals = [0.0] * max(width, workers)
    for r in records:
        totals[r.worker] += r.elapsed
    makespan = max((r.end for r in records), default=0.0)
    return Schedule(records, totals, makespan)
