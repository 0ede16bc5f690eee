"""Graphs with an implicit measurement order, cluster grids and odd neighborhoods.

Vertices are labelled ``1..N``; the label is the position of the qubit in the
total measurement order.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field


@dataclass(frozen=True)
class GridSpec:
    """Dimensions of an ``rows x cols`` cluster grid."""

    rows: int
    cols: int

    def __post_init__(self):
        if not isinstance(self.rows, int) or not isinstance(self.cols, int):
            raise TypeError("grid dimensions must be integers")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def label(self, r: int, c: int) -> int:
        """Vertex label of the 1-indexed cell ``(r, c)`` in row-major order."""
        return (r - 1) * self.cols + c

    def cell(self, v: int) -> tuple[int, int]:
        """Inverse of :meth:`label`."""
        q, rem = divmod(v - 1, self.cols)
        return q + 1, rem + 1

    def right(self, v: int) -> int | None:
        r, c = self.cell(v)
        return self.label(r, c + 1) if c < self.cols else None

    def down(self, v: int) -> int | None:
        r, c = self.cell(v)
        return self.label(r + 1, c) if r < self.rows else None


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``1..vertex_count``."""

    vertex_count: int
    edges: frozenset[tuple[int, int]]
    _adj: dict[int, frozenset[int]] = field(init=False, repr=False, compare=False)

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]]):
        if vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        canon = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            for v in (a, b):
                if not 1 <= v <= vertex_count:
                    raise ValueError(f"edge endpoint {v} outside 1..{vertex_count}")
            canon.add((min(a, b), max(a, b)))
        object.__setattr__(self, "vertex_count", vertex_count)
        object.__setattr__(self, "edges", frozenset(canon))
        adj: dict[int, set[int]] = {v: set() for v in range(1, vertex_count + 1)}
        for a, b in canon:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", {v: frozenset(s) for v, s in adj.items()})

    @property
    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    def check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or not 1 <= v <= self.vertex_count:
            raise ValueError(f"vertex {v!r} outside 1..{self.vertex_count}")

    def neighbors(self, v: int) -> frozenset[int]:
        self.check_vertex(v)
        return self._adj[v]


@dataclass(frozen=True)
class OpenGraph:
    """A graph together with input and output vertex sets (``|I| == |O|``)."""

    graph: Graph
    inputs: frozenset[int]
    outputs: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        for v in self.inputs | self.outputs:
            self.graph.check_vertex(v)
        if len(self.inputs) != len(self.outputs):
            raise ValueError(
                f"|I| = {len(self.inputs)} differs from |O| = {len(self.outputs)}"
            )

    @property
    def non_inputs(self) -> frozenset[int]:
        return frozenset(self.graph.vertices) - self.inputs

    @property
    def non_outputs(self) -> frozenset[int]:
        return frozenset(self.graph.vertices) - self.outputs


def build_cluster_grid(spec: GridSpec) -> Graph:
    """Square-lattice graph for ``spec``, labelled row-major."""
    edges = []
    for v in range(1, spec.size + 1):
        for w in (spec.right(v), spec.down(v)):
            if w is not None:
                edges.append((v, w))
    return Graph(spec.size, edges)


def neighborhood(g: Graph, v: int) -> frozenset[int]:
    return g.neighbors(v)


def odd_neighborhood(g: Graph, K: Iterable[int]) -> frozenset[int]:
    """Vertices adjacent to an odd number of members of ``K``.

    Computed as the GF(2) sum of the neighborhoods of the members.
    """
    K = set(K)
    acc: set[int] = set()
    for k in K:
        acc ^= g.neighbors(k)
    return frozenset(acc)
