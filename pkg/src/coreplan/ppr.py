"""Single-source personalized PageRank.

Two routes: an exact power iteration used as a test oracle, and the
forward-push + Monte Carlo estimator whose running time is the planned
workload. Walks stop at dead ends, and pushing a dead end settles its whole
residue, so both routes describe the same absorbing-walk distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import ConvergenceError, ValidationError
from .graph import Graph, _check_vertex
from .rng import stream_key, uniform

DEFAULT_ALPHA = 0.2
DEFAULT_EPSILON = 0.5


@dataclass(frozen=True)
class PprParams:
    alpha: float = DEFAULT_ALPHA
    epsilon: float = DEFAULT_EPSILON
    delta: float = 0.01
    p_f: float = 0.01
    r_max: float | None = None
    omega: int | None = None

    def __post_init__(self):
        validate_params(self)

    @property
    def complete(self) -> bool:
        return self.r_max is not None and self.omega is not None


def validate_params(p: PprParams) -> None:
    for name in ("alpha", "delta", "p_f"):
        value = getattr(p, name)
        if not 0.0 < value < 1.0:
            raise ValidationError(f"{name}={value} must lie in (0, 1)")
    if not p.epsilon > 0:
        raise ValidationError(f"epsilon={p.epsilon} must be positive")
    if p.r_max is not None and not p.r_max > 0:
        raise ValidationError(f"r_max={p.r_max} must be positive")
    if p.omega is not None and p.omega < 1:
        raise ValidationError(f"omega={p.omega} must be at least 1")


def walk_budget(epsilon: float, delta: float, p_f: float) -> int:
    """Total number of walks that gives relative error epsilon above delta w.p. 1-p_f."""
    return math.ceil((2 * epsilon / 3 + 2) * math.log(2 / p_f) / (epsilon**2 * delta))


def balanced_r_max(m: int, epsilon: float, delta: float, p_f: float, scale: float = 1.0) -> float:
    # Any positive value is correct; this one balances push work against walk work.
    return scale * math.sqrt(
        epsilon**2 * delta / (max(m, 1) * math.log(2 / p_f) * (2 * epsilon / 3 + 2))
    )


def derive_params(
    g: Graph,
    alpha: float = DEFAULT_ALPHA,
    epsilon: float = DEFAULT_EPSILON,
    delta: float | None = None,
    p_f: float | None = None,
    r_max: float | None = None,
    omega: int | None = None,
    r_max_scale: float = 1.0,
) -> PprParams:
    """Fill in omega and r_max; delta and p_f default to 1/n."""
    default = 1.0 / max(g.n, 2)
    base = PprParams(
        alpha=alpha,
        epsilon=epsilon,
        delta=default if delta is None else delta,
        p_f=default if p_f is None else p_f,
        r_max=r_max,
        omega=omega,
    )
    return complete_params(g, base, r_max_scale)


def complete_params(g: Graph, p: PprParams, r_max_scale: float = 1.0) -> PprParams:
    omega = p.omega if p.omega is not None else walk_budget(p.epsilon, p.delta, p.p_f)
    r_max = p.r_max if p.r_max is not None else balanced_r_max(g.m, p.epsilon, p.delta, p.p_f, r_max_scale)
    return replace(p, omega=omega, r_max=r_max)


@dataclass(frozen=True)
class PushState:
    source: int
    reserve: np.ndarray
    residue: np.ndarray
    pushes: int


@dataclass(frozen=True)
class PprEstimate:
    source: int
    scores: dict
    params: PprParams
    walks_performed: int

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for v, s in self.scores.items():
            out[v] = s
        return out

    def top(self, count: int = 20) -> list[tuple[int, float]]:
        return sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))[:count]


def transition_matrix(g: Graph) -> sp.csr_matrix:
    """Row-stochastic matrix with a self-loop standing in for each dead end."""
    deg = g.degrees
    rows = np.repeat(np.arange(g.n), deg)
    weights = 1.0 / deg[rows]
    dead = np.flatnonzero(deg == 0)
    rows = np.concatenate([rows, dead])
    cols = np.concatenate([g.targets, dead])
    weights = np.concatenate([weights, np.ones(dead.size)])
    return sp.csr_matrix((weights, (rows, cols)), shape=(g.n, g.n))


def power_iteration_ppr(
    g: Graph,
    source: int,
    alpha: float = DEFAULT_ALPHA,
    tolerance: float = 1e-12,
    max_iters: int = 10_000,
) -> np.ndarray:
    _check_vertex(g, source)
    if not tolerance > 0:
        raise ValidationError("tolerance must be positive")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    pt = transition_matrix(g).T.tocsr()
    restart = np.zeros(g.n)
    restart[source] = alpha
    pi = np.zeros(g.n)
    pi[source] = 1.0
    change = math.inf
    for _ in range(max_iters):
        nxt = restart + (1 - alpha) * (pt @ pi)
        change = float(np.abs(nxt - pi).sum())
        pi = nxt
        if change < tolerance:
            return pi
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations", change)


@njit(cache=True, nogil=True)
def _push_kernel(offsets, targets, source, alpha, r_max, max_pushes):
    n = offsets.size - 1
    reserve = np.zeros(n)
    residue = np.zeros(n)
    residue[source] = 1.0
    queue = np.empty(n, dtype=np.int64)
    queued = np.zeros(n, dtype=np.bool_)
    head = 0
    size = 1
    queue[0] = source
    queued[source] = True
    pushes = 0
    while size > 0:
        if max_pushes >= 0 and pushes >= max_pushes:
            break
        v = queue[head]
        head = (head + 1) % n
        size -= 1
        queued[v] = False
        lo = offsets[v]
        hi = offsets[v + 1]
        deg = hi - lo
        r = residue[v]
        if deg == 0:
            if r > 0.0:
                reserve[v] += r
                residue[v] = 0.0
                pushes += 1
            continue
        if r <= r_max * deg:
            continue
        reserve[v] += alpha * r
        residue[v] = 0.0
        share = (1.0 - alpha) * r / deg
        for e in range(lo, hi):
            u = targets[e]
            residue[u] += share
            if not queued[u]:
                du = offsets[u + 1] - offsets[u]
                if residue[u] > r_max * du:
                    queue[(head + size) % n] = u
                    size += 1
                    queued[u] = True
        pushes += 1
    return reserve, residue, pushes


@njit(cache=True, nogil=True)
def _walk_kernel(offsets, targets, start, alpha, key):
    v = start
    counter = 0
    while True:
        lo = offsets[v]
        deg = offsets[v + 1] - lo
        if deg == 0:
            return v
        if uniform(key, counter) < alpha:
            return v
        j = int(uniform(key, counter + 1) * deg)
        if j >= deg:
            j = deg - 1
        v = targets[lo + j]
        counter += 2


@njit(cache=True, nogil=True)
def _walks_kernel(offsets, targets, start, alpha, seed, first, count):
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        out[i] = _walk_kernel(offsets, targets, start, alpha, stream_key(seed, first + i))
    return out


@njit(cache=True, nogil=True)
def _fora_kernel(offsets, targets, source, alpha, r_max, omega, seed):
    reserve, residue, _ = _push_kernel(offsets, targets, source, alpha, r_max, -1)
    scores = reserve.copy()
    walks = 0
    for v in range(residue.size):
        r = residue[v]
        if r <= 0.0:
            continue
        count = int(math.ceil(r * omega))
        share = r / count
        for _ in range(count):
            t = _walk_kernel(offsets, targets, v, alpha, stream_key(seed, walks))
            scores[t] += share
            walks += 1
    return scores, walks


def forward_push(
    g: Graph, source: int, alpha: float, r_max: float, max_pushes: int | None = None
) -> PushState:
    """Run forward push from ``source``.

    ``max_pushes`` stops after that many pushes, exposing intermediate states;
    the queue order is deterministic so a prefix run matches the full run up
    to that point.
    """
    _check_vertex(g, source)
    if not r_max > 0:
        raise ValidationError("r_max must be positive")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    limit = -1 if max_pushes is None else int(max_pushes)
    reserve, residue, pushes = _push_kernel(g.offsets, g.targets, source, alpha, r_max, limit)
    return PushState(source=source, reserve=reserve, residue=residue, pushes=int(pushes))


def _seed64(seed) -> np.uint64:
    return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def random_walk(g: Graph, start: int, alpha: float, seed: int, index: int = 0) -> int:
    """Terminal vertex of walk number ``index`` of stream ``seed``."""
    _check_vertex(g, start)
    key = np.uint64(stream_key(_seed64(seed), index))
    return int(_walk_kernel(g.offsets, g.targets, start, alpha, key))


def random_walks(g: Graph, start: int, alpha: float, seed: int, count: int, first: int = 0) -> np.ndarray:
    _check_vertex(g, start)
    return _walks_kernel(g.offsets, g.targets, start, alpha, _seed64(seed), first, count)


def fora_query(g: Graph, source: int, params: PprParams, seed: int) -> PprEstimate:
    _check_vertex(g, source)
    if not params.complete:
        params = complete_params(g, params)
    scores, walks = _fora_kernel(
        g.offsets, g.targets, source, params.alpha, params.r_max, float(params.omega), _seed64(seed)
    )
    touched = np.flatnonzero(scores)
    return PprEstimate(
        source=source,
        scores={int(v): float(scores[v]) for v in touched},
        params=params,
        walks_performed=int(walks),
    )
