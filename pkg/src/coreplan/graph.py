"""Immutable CSR graphs loaded from SNAP-style edge lists."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    m: int
    offsets: np.ndarray
    targets: np.ndarray
    directed: bool = True

    def __post_init__(self):
        self.offsets.flags.writeable = False
        self.targets.flags.writeable = False

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and self.directed == other.directed
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.targets, other.targets)
        )

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def out_degree(self, v: int) -> int:
        return out_degree(self, v)

    def out_neighbors(self, v: int) -> np.ndarray:
        return out_neighbors(self, v)


def _check_vertex(g: Graph, v: int) -> None:
    if not 0 <= v < g.n:
        raise ValidationError(f"vertex {v} out of range [0, {g.n})")


def out_degree(g: Graph, v: int) -> int:
    _check_vertex(g, v)
    return int(g.offsets[v + 1] - g.offsets[v])


def out_neighbors(g: Graph, v: int) -> np.ndarray:
    """Read-only view of v's out-neighbours in file order."""
    _check_vertex(g, v)
    return g.targets[g.offsets[v] : g.offsets[v + 1]]


def from_edges(src, dst, directed: bool = True, n: int | None = None) -> Graph:
    """Build a CSR graph from parallel source/target arrays.

    Arcs of one vertex keep their input order. For undirected input each
    pair contributes u->v and v->u, interleaved in input order.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if src.shape != dst.shape:
        raise ValidationError("source and target arrays differ in length")
    if src.size and (src.min() < 0 or dst.min() < 0):
        raise ValidationError("vertex ids must be non-negative")
    if not directed:
        src, dst = (
            np.column_stack([src, dst]).ravel(),
            np.column_stack([dst, src]).ravel(),
        )
    top = int(max(src.max(), dst.max())) + 1 if src.size else 0
    if n is None:
        n = top
    elif n < top:
        raise ValidationError(f"n={n} smaller than max vertex id + 1 = {top}")
    order = np.argsort(src, kind="stable")
    targets = dst[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return Graph(n=n, m=int(targets.size), offsets=offsets, targets=targets, directed=directed)


def _iter_lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            yield from fh
    elif isinstance(source, (bytes, bytearray)):
        yield from io.BytesIO(source)
    else:
        yield from source


def load_edge_list(source, directed: bool = True) -> Graph:
    """Parse an edge list from a path, bytes, or a binary/text line iterable.

    Lines starting with '#' and blank lines are skipped. Each remaining line
    must hold exactly two non-negative integer ids.
    """
    src: list[int] = []
    dst: list[int] = []
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.decode() if isinstance(raw, (bytes, bytearray)) else raw
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 vertex ids, got {len(parts)}", line=lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer token in {line!r}", line=lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative vertex id in {line!r}", line=lineno)
        src.append(u)
        dst.append(v)
    if not src:
        raise ParseError("edge list contains no edges")
    return from_edges(src, dst, directed=directed)


def iter_edge_lines(g: Graph):
    for u in range(g.n):
        for v in g.targets[g.offsets[u] : g.offsets[u + 1]]:
            yield f"{u} {int(v)}\n"


def write_edge_list(g: Graph, dest) -> None:
    """Write every arc as "u v" with LF endings and no comments."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="\n") as fh:
            fh.writelines(iter_edge_lines(g))
    else:
        dest.writelines(iter_edge_lines(g))


def random_graph(n: int, avg_degree: float, seed: int, dead_end_fraction: float = 0.0) -> Graph:
    """Directed random graph with uniformly drawn arcs.

    A ``dead_end_fraction`` share of vertices gets no out-arcs. Vertex n-1 is
    always the target of at least one arc so that the order is exactly n.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    rng = np.random.default_rng(seed)
    m = max(1, int(round(n * avg_degree)))
    live = np.ones(n, dtype=bool)
    if dead_end_fraction > 0:
        live[rng.random(n) < dead_end_fraction] = False
        if not live.any():
            live[0] = True
    sources = np.flatnonzero(live)
    src = rng.choice(sources, size=m)
    dst = rng.integers(0, n, size=m)
    dst[-1] = n - 1
    return from_edges(src, dst, directed=True, n=n)
