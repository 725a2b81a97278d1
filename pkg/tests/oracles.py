"""Reference implementations that share no code with the package."""
from __future__ import annotations

import threading
from fractions import Fraction

import numpy as np


def walk_enumeration_ppr(offsets, targets, source, alpha, max_len=2000, tol=1e-15):
    """PPR by summing over walk lengths.

    Tracks where the walk is after i steps; a live vertex stops the walk with
    probability alpha, a dead end stops it with certainty.
    """
    n = len(offsets) - 1
    at = {source: 1.0}
    pi = np.zeros(n)
    for _ in range(max_len):
        nxt = {}
        for v, mass in at.items():
            lo, hi = offsets[v], offsets[v + 1]
            if hi == lo:
                pi[v] += mass
                continue
            pi[v] += alpha * mass
            share = (1 - alpha) * mass / (hi - lo)
            for e in range(lo, hi):
                u = int(targets[e])
                nxt[u] = nxt.get(u, 0.0) + share
        at = nxt
        if sum(at.values()) < tol:
            break
    return pi


def brute_force_schedule(durations, workers):
    """Step the clock from event to event and hand items to idle workers.

    Idle workers are served in the order their previous item was handed out;
    at time zero that is worker 0, 1, 2, ...
    Returns (per-worker totals, makespan, [(item, worker, start, end)]).
    """
    durations = [Fraction(d) for d in durations]
    busy_until = [Fraction(0)] * workers
    handed = [j - workers for j in range(workers)]
    totals = [Fraction(0)] * workers
    log = []
    nxt, seq, now = 0, 0, Fraction(0)
    while nxt < len(durations):
        idle = sorted((j for j in range(workers) if busy_until[j] <= now), key=lambda j: handed[j])
        for j in idle:
            if nxt == len(durations):
                break
            d = durations[nxt]
            log.append((nxt, j, now, now + d))
            busy_until[j] = now + d
            totals[j] += d
            handed[j] = seq
            seq += 1
            nxt += 1
        pending = [b for b in busy_until if b > now]
        if nxt < len(durations):
            now = min(pending)
    makespan = max((end for *_, end in log), default=Fraction(0))
    return totals, makespan, log


class LockstepClock:
    """Fake clock that makes threaded dispatch follow virtual time.

    ``sleep(d)`` advances the calling thread's clock by d but returns only
    once every live worker is asleep and the caller holds the earliest wake
    time (ties: whoever fell asleep first). Between wake-up and its next sleep
    a worker is the only one running, so it takes the next item exactly as
    the virtual scheduler would.
    """

    def __init__(self):
        self._cond = threading.Condition()
        self._local = threading.local()
        self._expected = 0
        self._entered = 0
        self._live = 0
        self._seq = 0
        self._sleepers = {}
        self.max_concurrent = 0

    def begin(self, workers):
        with self._cond:
            self._expected, self._entered, self._live = workers, 0, 0
            self._sleepers.clear()

    def enter(self):
        with self._cond:
            self._local.t = Fraction(0)
            self._entered += 1
            self._live += 1
            self.max_concurrent = max(self.max_concurrent, self._live)
            self._cond.notify_all()

    def leave(self):
        with self._cond:
            self._live -= 1
            self._cond.notify_all()

    def now(self):
        return float(getattr(self._local, "t", Fraction(0)))

    def sleep(self, seconds):
        me = threading.get_ident()
        with self._cond:
            wake = (self._local.t + Fraction(seconds), self._seq)
            self._seq += 1
            self._sleepers[me] = wake
            self._cond.notify_all()
            self._cond.wait_for(
                lambda: self._entered == self._expected
                and len(self._sleepers) == self._live
                and min(self._sleepers.values()) == wake
            )
            del self._sleepers[me]
            self._local.t = wake[0]
            self._cond.notify_all()
