"""Query sets, per-query timing, and synthetic workloads with known durations."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .dispatch import MonotonicClock, list_schedule, run_threaded
from .errors import ParseError, ValidationError
from .graph import Graph
from .ppr import PprParams, fora_query
from .rng import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuerySet:
    sources: tuple
    seed: int | None = None

    def __len__(self):
        return len(self.sources)

    def prefix(self, s: int) -> "QuerySet":
        return QuerySet(self.sources[:s], self.seed)


def generate_queries(g: Graph, count: int, seed: int) -> QuerySet:
    """Sources drawn uniformly with replacement from [0, n)."""
    if count < 1:
        raise ValidationError("query count must be >= 1")
    if g.n < 1:
        raise ValidationError("cannot draw queries from an empty graph")
    rng = np.random.default_rng(derive_seed(seed, "queries"))
    return QuerySet(tuple(int(v) for v in rng.integers(0, g.n, size=count)), seed)


def write_queries(qs: QuerySet, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.writelines(f"{v}\n" for v in qs.sources)


def read_queries(path, g: Graph | None = None) -> QuerySet:
    sources = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                v = int(line)
            except ValueError:
                raise ParseError(f"not a vertex id: {line!r}", line=lineno) from None
            if v < 0 or (g is not None and v >= g.n):
                raise ParseError(f"vertex {v} out of range", line=lineno)
            sources.append(v)
    if not sources:
        raise ParseError("query file is empty")
    return QuerySet(tuple(sources))


@dataclass(frozen=True)
class TimingStats:
    """Preprocessing timings. ``c`` is the number of cores they ran on."""

    durations: tuple
    c: int
    t_hat: float
    elapsed: float | None = None

    def __post_init__(self):
        if not self.durations:
            raise ValidationError("timing stats need at least one duration")
        if any(not t > 0 for t in self.durations):
            raise ValidationError("durations must be positive")
        if self.c < 1:
            raise ValidationError("core count must be >= 1")
        if self.t_hat < self.t_max:
            raise ValidationError(f"t_hat={self.t_hat} below observed maximum {self.t_max}")

    @classmethod
    def from_durations(cls, durations, c: int = 1, t_hat: float | None = None,
                       t_hat_factor: float = 2.0, elapsed: float | None = None) -> "TimingStats":
        durations = tuple(float(t) for t in durations)
        if t_hat is None and durations:
            t_hat = t_hat_factor * max(durations)
        return cls(durations, c, t_hat, elapsed)

    @property
    def s(self) -> int:
        return len(self.durations)

    @property
    def t_max(self) -> float:
        return max(self.durations)

    @property
    def t_pre(self) -> float:
        return math.fsum(self.durations)

    @property
    def t_avg(self) -> float:
        return self.c * self.t_pre / self.s

    @property
    def t_bar(self) -> float:
        return self.t_pre / self.s

    def to_dict(self) -> dict:
        return {
            "s": self.s, "c": self.c, "t_max": self.t_max, "t_pre": self.t_pre,
            "t_avg": self.t_avg, "t_bar": self.t_bar, "t_hat": self.t_hat,
            "elapsed": self.elapsed, "durations": list(self.durations),
        }


@dataclass(frozen=True)
class SyntheticWorkload:
    """Per-query virtual durations from a seeded distribution.

    kinds: ``constant`` (t), ``uniform`` (lo, hi), ``lognormal`` (mu, sigma)
    truncated to (0, t_hat] by redrawing.
    """

    kind: str
    params: tuple
    t_hat: float | None = None

    def __post_init__(self):
        p = self.params
        if self.kind == "constant":
            if len(p) != 1 or not p[0] > 0:
                raise ValidationError("constant(t) needs t > 0")
            bound = p[0]
        elif self.kind == "uniform":
            if len(p) != 2 or not 0 < p[0] <= p[1]:
                raise ValidationError("uniform(lo, hi) needs 0 < lo <= hi")
            bound = p[1]
        elif self.kind == "lognormal":
            if len(p) != 2 or not p[1] > 0:
                raise ValidationError("lognormal(mu, sigma) needs sigma > 0")
            if self.t_hat is None:
                raise ValidationError("lognormal workload needs a truncation bound t_hat")
            bound = self.t_hat
        else:
            raise ValidationError(f"unknown distribution {self.kind!r}")
        if self.t_hat is None:
            object.__setattr__(self, "t_hat", float(bound))
        elif self.t_hat < bound and self.kind != "lognormal":
            raise ValidationError("t_hat below the distribution's upper end")

    @classmethod
    def parse(cls, text: str) -> "SyntheticWorkload":
        """Parse ``constant:2``, ``uniform:1,3`` or ``lognormal:0,0.5[,t_hat]``."""
        try:
            kind, _, rest = text.partition(":")
            values = tuple(float(x) for x in rest.split(",")) if rest else ()
        except ValueError:
            raise ValidationError(f"bad workload spec {text!r}") from None
        if kind == "lognormal" and len(values) == 3:
            return cls(kind, values[:2], values[2])
        return cls(kind, values)

    def describe(self) -> str:
        args = ",".join(repr(x) for x in self.params)
        if self.kind == "lognormal":
            args += f",{self.t_hat!r}"
        return f"{self.kind}:{args}"

    def draw(self, count: int, seed: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(count, float(self.params[0]))
        rng = np.random.default_rng(seed)
        if self.kind == "uniform":
            lo, hi = self.params
            return rng.uniform(lo, hi, size=count) if hi > lo else np.full(count, float(lo))
        mu, sigma = self.params
        out = rng.lognormal(mu, sigma, size=count)
        bad = out > self.t_hat
        for _ in range(10_000):
            if not bad.any():
                break
            out[bad] = rng.lognormal(mu, sigma, size=int(bad.sum()))
            bad = out > self.t_hat
        else:
            raise ValidationError("truncation bound rejects almost all lognormal draws")
        return out


class SyntheticEngine:
    """Engine with durations fixed per (query index, attempt).

    Real-time execution sleeps on the supplied clock, which lets tests drive
    the threaded path with a fake clock.
    """

    def __init__(self, workload: SyntheticWorkload, count: int, seed: int):
        self.workload = workload
        self.count = count
        self.seed = seed
        self._cache: dict[int, np.ndarray] = {}

    def durations(self, attempt: int = 0) -> np.ndarray:
        if attempt not in self._cache:
            self._cache[attempt] = self.workload.draw(self.count, derive_seed(self.seed, "durations", attempt))
        return self._cache[attempt]

    def duration(self, index: int, attempt: int = 0) -> float:
        return float(self.durations(attempt)[index])

    def execute(self, index: int, attempt: int = 0, clock=None) -> None:
        (clock or MonotonicClock()).sleep(self.duration(index, attempt))

    def describe(self) -> str:
        return f"synthetic {self.workload.describe()}"


def time_query(g: Graph, source: int, params: PprParams, seed: int) -> float:
    """Wall-clock seconds for one FORA query, from the monotonic clock."""
    start = time.perf_counter_ns()
    fora_query(g, source, params, seed)
    return max(time.perf_counter_ns() - start, 1) / 1e9


class ForaEngine:
    """FORA queries over a shared graph.

    ``duration`` measures the query sequentially and caches the result, so a
    virtual-time run replays measured times on an idealised machine.
    """

    def __init__(self, g: Graph, queries: QuerySet, params: PprParams, seed: int):
        self.graph = g
        self.queries = queries
        self.params = params
        self.seed = seed
        self._measured: dict[tuple, float] = {}

    @property
    def count(self) -> int:
        return len(self.queries)

    def walk_seed(self, index: int, attempt: int) -> int:
        return derive_seed(self.seed, "walks", attempt, index)

    def execute(self, index: int, attempt: int = 0, clock=None) -> None:
        fora_query(self.graph, self.queries.sources[index], self.params, self.walk_seed(index, attempt))

    def duration(self, index: int, attempt: int = 0) -> float:
        key = (index, attempt)
        if key not in self._measured:
            self._measured[key] = time_query(
                self.graph, self.queries.sources[index], self.params, self.walk_seed(index, attempt)
            )
        return self._measured[key]

    def describe(self) -> str:
        return f"fora n={self.graph.n} m={self.graph.m}"


def preprocess(engine, sample: int, c: int = 1, *, attempt: int = 0, virtual: bool = True,
               clock=None, t_hat: float | None = None, t_hat_factor: float = 2.0) -> TimingStats:
    """Time the first ``sample`` queries on ``c`` workers.

    In virtual time ``elapsed`` is the greedy makespan of the durations; in
    real time it is the measured wall time of the whole phase.
    """
    if sample < 1:
        raise ValidationError("sample size must be >= 1")
    if c < 1:
        raise ValidationError("core count must be >= 1")
    if c > sample / 10:
        log.warning("preprocessing on %d cores for %d samples; c << s is assumed", c, sample)
    if virtual:
        durations = [engine.duration(i, attempt) for i in range(sample)]
        elapsed = float(list_schedule([Fraction(t) for t in durations], c).makespan)
    else:
        clock = clock or MonotonicClock()
        sched = run_threaded(range(sample), c, lambda i: engine.execute(i, attempt, clock), clock)
        durations = [r.elapsed for r in sched.records]
        elapsed = sched.makespan
    return TimingStats.from_durations(durations, c=c, t_hat=t_hat, t_hat_factor=t_hat_factor, elapsed=elapsed)
