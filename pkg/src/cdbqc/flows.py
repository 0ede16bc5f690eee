"""G-flows under a fixed total measurement order.

The partial order of a g-flow is taken to be the measurement order itself,
with one relaxation: a vertex measured *before* ``i`` may sit in
``Odd(g(i))`` when it is an output, because a Z correction on an
already-measured output is just a classical flip of its bit.

On cluster grids the enumerated flows use singleton correcting sets, i.e.
each vertex sends at most one arrow to its right or down neighbour.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import lru_cache

from cdbqc.graph import GridSpec, OpenGraph, build_cluster_grid, odd_neighborhood

DEFAULT_ENUM_CAP = 20
ENUM_CAP_ENV = "CDBQC_ENUM_CAP"

PHI = (1 + math.sqrt(5)) / 2
#: asymptotic flow bits per qubit, 2 log2(phi)
BITS_PER_QUBIT = 2 * math.log2(PHI)


class EnumerationCapError(ValueError):
    """Raised when an exhaustive enumeration would exceed the configured size cap."""


def enumeration_cap() -> int:
    raw = os.environ.get(ENUM_CAP_ENV)
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{ENUM_CAP_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class GFlow:
    """Correcting-set function ``g: O^c -> P(I^c)`` on an open graph."""

    open_graph: OpenGraph
    correcting_sets: Mapping[int, frozenset[int]]

    def __post_init__(self):
        object.__setattr__(
            self,
            "correcting_sets",
            {int(i): frozenset(s) for i, s in self.correcting_sets.items()},
        )

    def __hash__(self):
        return hash((self.open_graph, frozenset(self.correcting_sets.items())))


@dataclass(frozen=True)
class GFlowVerdict:
    """Result of :func:`check_gflow`. ``condition`` names the first violation."""

    violations: tuple[tuple[str, str], ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def condition(self) -> str | None:
        return self.violations[0][0] if self.violations else None

    def __bool__(self):
        return self.valid


def check_gflow(flow: GFlow) -> GFlowVerdict:
    """Check the g-flow conditions against the fixed total order.

    Conditions, for every ``i`` in ``O^c``:

    * G1: every ``j`` in ``g(i)`` is measured after ``i``;
    * G2: every ``j != i`` in ``Odd(g(i))`` measured before ``i`` is an output;
    * G3: ``i`` is not in ``g(i)`` and ``i`` is in ``Odd(g(i))``;
    * G4: no vertex adjacent to ``i`` or ``j`` lies in both ``g(i)`` and ``g(j)``.

    A map missing some non-output vertex is reported as a ``"domain"``
    violation after the four conditions. Out-of-range vertices and
    correcting sets attached to outputs raise ``ValueError``.
    """
    og = flow.open_graph
    g = og.graph
    gs = flow.correcting_sets
    for i, targets in gs.items():
        g.check_vertex(i)
        for j in targets:
            g.check_vertex(j)
        if i in og.outputs:
            raise ValueError(f"correcting set given for output vertex {i}")

    out: list[tuple[str, str]] = []
    odd = {i: odd_neighborhood(g, s) for i, s in gs.items()}
    for i in sorted(gs):
        for j in sorted(gs[i]):
            if j < i:
                out.append(("G1", f"{j} in g({i}) is measured before {i}"))
    for i in sorted(gs):
        for j in sorted(odd[i]):
            if j != i and j < i and j not in og.outputs:
                out.append(("G2", f"non-output {j} in Odd(g({i})) is measured before {i}"))
    for i in sorted(gs):
        if i in gs[i]:
            out.append(("G3", f"{i} in g({i})"))
        if i not in odd[i]:
            out.append(("G3", f"{i} not in Odd(g({i}))"))
    keys = sorted(gs)
    for a, i in enumerate(keys):
        for j in keys[a + 1 :]:
            shared = gs[i] & gs[j] & (g.neighbors(i) | g.neighbors(j))
            for k in sorted(shared):
                out.append(("G4", f"{k} in both g({i}) and g({j})"))
    for i in sorted(gs):
        stray = gs[i] & og.inputs
        if stray:
            out.append(("domain", f"g({i}) contains inputs {sorted(stray)}"))
        if not gs[i]:
            out.append(("domain", f"g({i}) is empty"))
    missing = og.non_outputs - set(gs)
    if missing:
        out.append(("domain", f"no correcting set for {sorted(missing)}"))
    return GFlowVerdict(tuple(out))


@dataclass(frozen=True)
class GridFlow:
    """Successor-arrow assignment on a cluster grid.

    ``successor`` maps a vertex to its right or down neighbour.
    """

    spec: GridSpec
    successor: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        succ = {int(k): int(v) for k, v in dict(self.successor).items()}
        for src, dst in succ.items():
            if not 1 <= src <= self.spec.size:
                raise ValueError(f"arrow source {src} outside the grid")
            if dst not in (self.spec.right(src), self.spec.down(src)):
                raise ValueError(f"{src}->{dst} is not a right or down arrow")
        object.__setattr__(self, "successor", dict(sorted(succ.items())))

    def __hash__(self):
        return hash((self.spec, tuple(self.successor.items())))

    @classmethod
    def from_arrows(cls, spec: GridSpec, arrows: Iterable[tuple[int, int]]) -> GridFlow:
        succ: dict[int, int] = {}
        for src, dst in arrows:
            if src in succ:
                raise ValueError(f"vertex {src} has two outgoing arrows")
            succ[src] = dst
        return cls(spec, succ)

    @property
    def arrows(self) -> list[tuple[int, int]]:
        return list(self.successor.items())

    @property
    def inputs(self) -> frozenset[int]:
        targets = set(self.successor.values())
        return frozenset(v for v in range(1, self.spec.size + 1) if v not in targets)

    @property
    def outputs(self) -> frozenset[int]:
        return frozenset(v for v in range(1, self.spec.size + 1) if v not in self.successor)

    def choice(self, v: int) -> int:
        """Per-vertex choice code: 0 none, 1 right, 2 down."""
        t = self.successor.get(v)
        if t is None:
            return 0
        return 1 if t == self.spec.right(v) else 2

    def sort_key(self) -> tuple[int, ...]:
        return tuple(self.choice(v) for v in range(1, self.spec.size + 1))

    def to_gflow(self) -> GFlow:
        """Induced g-flow. Raises if the arrows give ``|I| != |O|``."""
        og = OpenGraph(build_cluster_grid(self.spec), self.inputs, self.outputs)
        return GFlow(og, {i: frozenset({t}) for i, t in self.successor.items()})


@dataclass(frozen=True)
class FlowBits:
    """Index of a flow in the canonical enumeration, with its bit length."""

    length: int
    value: int

    def bits(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""


def _choices(spec: GridSpec, v: int) -> list[int | None]:
    out: list[int | None] = [None]
    for w in (spec.right(v), spec.down(v)):
        if w is not None:
            out.append(w)
    return out


def _check_cap(spec: GridSpec, cap: int | None) -> None:
    cap = enumeration_cap() if cap is None else cap
    if spec.size > cap:
        raise EnumerationCapError(
            f"{spec.rows}x{spec.cols} grid has {spec.size} vertices, enumeration cap is {cap}"
        )


@lru_cache(maxsize=64)
def _enumerate(spec: GridSpec) -> tuple[GridFlow, ...]:
    graph = build_cluster_grid(spec)
    N = spec.size
    succ: dict[int, int] = {}
    taken: set[int] = set()
    found: list[GridFlow] = []

    # Depth-first over vertices in label order; children in none<right<down
    # order, so leaves come out lexicographically sorted.
    def visit(v: int) -> None:
        if v > N:
            found.append(GridFlow(spec, dict(succ)))
            return
        for t in _choices(spec, v):
            if t is None:
                visit(v + 1)
                continue
            if t in taken:
                continue
            # every earlier neighbour of the target must already be an output
            if any(j < v and j in succ for j in graph.neighbors(t)):
                continue
            succ[v] = t
            taken.add(t)
            visit(v + 1)
            del succ[v]
            taken.discard(t)

    visit(1)
    return tuple(found)


def enumerate_grid_flows(spec: GridSpec, cap: int | None = None) -> list[GridFlow]:
    """All valid grid flows on ``spec`` in canonical (lexicographic) order."""
    _check_cap(spec, cap)
    return list(_enumerate(spec))


def count_noncrossing_arrow_systems(spec: GridSpec, cap: int | None = None) -> int:
    """Brute-force count of injective right/down successor assignments.

    This is the object counted by the diagonal-cut argument: arrows point
    forward and no vertex receives two arrows, but earlier vertices of
    ``Odd(g(i))`` are not constrained. It is an upper bound on
    ``len(enumerate_grid_flows(spec))`` and equals the Fibonacci product.
    """
    _check_cap(spec, cap)
    N = spec.size
    taken: set[int] = set()

    def visit(v: int) -> int:
        if v > N:
            return 1
        total = 0
        for t in _choices(spec, v):
            if t is None:
                total += visit(v + 1)
            elif t not in taken:
                taken.add(t)
                total += visit(v + 1)
                taken.discard(t)
        return total

    return visit(1)


def fibonacci(k: int) -> int:
    """Exact ``F_k`` with ``F_0 = 0, F_1 = F_2 = 1``."""
    if k < 0:
        raise ValueError("negative Fibonacci index")
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def count_flows_closed_form(spec: GridSpec) -> int:
    """``F_{2l+1}^{|n-m|} * prod_{mu=2..l} F_{2mu}^2`` with ``l = min(n, m)``."""
    n, m = spec.rows, spec.cols
    lam = min(n, m)
    total = fibonacci(2 * lam + 1) ** abs(n - m)
    for mu in range(2, lam + 1):
        total *= fibonacci(2 * mu) ** 2
    return total


@dataclass(frozen=True)
class CutCounts:
    """Flows across one diagonal cut with ``mu`` left-hand vertices.

    ``a``/``b``/``c`` are cuts with one more / one fewer / equally many
    right-hand vertices. Each is split by whether the uppermost left vertex
    sends its arrow to the uppermost right vertex (``*_to``) or not
    (``*_not``).
    """

    mu: int
    a_to: int
    a_not: int
    b_to: int
    b_not: int
    c_to: int
    c_not: int

    @property
    def a(self) -> int:
        return self.a_to + self.a_not

    @property
    def b(self) -> int:
        return self.b_to + self.b_not

    @property
    def c(self) -> int:
        return self.c_to + self.c_not


@lru_cache(maxsize=None)
def _cut_counts(mu: int) -> CutCounts:
    if mu == 1:
        # A: one left vertex, two right; B: one left, none right; C: one each
        return CutCounts(1, a_to=1, a_not=2, b_to=0, b_not=1, c_to=1, c_not=1)
    prev = _cut_counts(mu - 1)
    a_to, b_to, c_to = prev.a, prev.b, prev.c
    return CutCounts(
        mu,
        a_to=a_to,
        a_not=a_to + prev.a_not,
        b_to=b_to,
        b_not=b_to + prev.b_not,
        c_to=c_to,
        c_not=c_to + prev.c_not,
    )


def cut_flow_counts(mu: int) -> tuple[int, int, int]:
    """``(A_mu, B_mu, C_mu)`` from the cut recursions."""
    if not isinstance(mu, int) or mu < 1:
        raise ValueError(f"mu must be a positive integer, got {mu!r}")
    # iterate upward so deep mu does not hit the recursion limit
    for k in range(1, mu + 1):
        c = _cut_counts(k)
    return c.a, c.b, c.c


def count_flows_product_form(spec: GridSpec) -> int:
    """Product of per-cut flow counts over all ``n + m - 2`` diagonal cuts."""
    n, m = spec.rows, spec.cols
    lam = min(n, m)
    total = 1
    for mu in range(1, lam):
        total *= cut_flow_counts(mu)[0]
    total *= cut_flow_counts(lam)[2] ** abs(n - m)
    for nu in range(2, lam + 1):
        total *= cut_flow_counts(nu)[1]
    return total


def approx_count(spec: GridSpec) -> float:
    """``log2`` of the golden-ratio estimate ``5^{-(n+m-2)/2} phi^{2nm+n+m-4}``."""
    n, m = spec.rows, spec.cols
    return (2 * n * m + n + m - 4) * math.log2(PHI) - (n + m - 2) / 2 * math.log2(5)


def flow_count(spec: GridSpec) -> int:
    return len(enumerate_grid_flows(spec))


def flow_bit_length(count: int) -> int:
    return (count - 1).bit_length() if count > 1 else 0


def flow_bits_encode(flow: GridFlow) -> FlowBits:
    flows = enumerate_grid_flows(flow.spec)
    try:
        idx = _index(flow.spec)[flow]
    except KeyError:
        raise ValueError(f"{flow.arrows} is not a valid flow on {flow.spec}") from None
    return FlowBits(flow_bit_length(len(flows)), idx)


def flow_bits_decode(spec: GridSpec, bits: FlowBits | int) -> GridFlow:
    flows = enumerate_grid_flows(spec)
    value = bits.value if isinstance(bits, FlowBits) else bits
    if not 0 <= value < len(flows):
        raise IndexError(f"flow index {value} outside 0..{len(flows) - 1}")
    return flows[value]


@lru_cache(maxsize=64)
def _index(spec: GridSpec) -> dict[GridFlow, int]:
    return {f: i for i, f in enumerate(_enumerate(spec))}


@dataclass(frozen=True)
class Dependencies:
    """Correction bookkeeping derived from a valid g-flow.

    ``xdep[j]`` and ``zdep[j]`` are the earlier vertices whose outcomes flip
    the sign of, or add pi to, the angle of ``j``. ``late_z[j]`` (outputs
    only) lists later vertices whose outcomes flip the recorded bit of ``j``.
    """

    xdep: Mapping[int, frozenset[int]]
    zdep: Mapping[int, frozenset[int]]
    late_z: Mapping[int, frozenset[int]]
    outputs: tuple[int, ...]

    def sx(self, j: int, b: Mapping[int, int]) -> int:
        return sum(b[i] for i in self.xdep[j]) & 1

    def sz(self, j: int, b: Mapping[int, int]) -> int:
        return sum(b[i] for i in self.zdep[j]) & 1


def dependency_functions(flow: GFlow | GridFlow, check: bool = True) -> Dependencies:
    """Correction tables of ``flow``.

    ``check=False`` skips validation; only useful for studying maps that
    fail the conditions.
    """
    if isinstance(flow, GridFlow):
        flow = flow.to_gflow()
    if check:
        verdict = check_gflow(flow)
        if not verdict:
            raise ValueError(f"invalid g-flow: {verdict.violations[0][1]}")
    og = flow.open_graph
    odd = {i: odd_neighborhood(og.graph, s) for i, s in flow.correcting_sets.items()}
    xdep: dict[int, frozenset[int]] = {}
    zdep: dict[int, frozenset[int]] = {}
    late: dict[int, frozenset[int]] = {}
    for j in og.graph.vertices:
        xdep[j] = frozenset(i for i, s in flow.correcting_sets.items() if i < j and j in s)
        zdep[j] = frozenset(i for i, o in odd.items() if i < j and j in o)
        if j in og.outputs:
            late[j] = frozenset(i for i, o in odd.items() if i > j and j in o)
    return Dependencies(xdep, zdep, late, tuple(sorted(og.outputs)))


@lru_cache(maxsize=4096)
def grid_dependencies(spec: GridSpec, index: int) -> Dependencies:
    return dependency_functions(flow_bits_decode(spec, index))


def flow_catalog(spec: GridSpec, cap: int | None = None) -> dict:
    flows = enumerate_grid_flows(spec, cap)
    width = flow_bit_length(len(flows))
    return {
        "rows": spec.rows,
        "cols": spec.cols,
        "count": len(flows),
        "flows": [
            {
                "index": i,
                "bits": FlowBits(width, i).bits(),
                "arrows": [[s, t] for s, t in f.arrows],
                "inputs": sorted(f.inputs),
                "outputs": sorted(f.outputs),
            }
            for i, f in enumerate(flows)
        ],
    }


def dump_flow_catalog(spec: GridSpec, cap: int | None = None) -> str:
    return json.dumps(flow_catalog(spec, cap), indent=1)


def load_flow_catalog(text: str) -> tuple[GridSpec, list[GridFlow]]:
    doc = json.loads(text)
    spec = GridSpec(int(doc["rows"]), int(doc["cols"]))
    flows = [GridFlow.from_arrows(spec, [tuple(a) for a in f["arrows"]]) for f in doc["flows"]]
    if len(flows) != doc["count"]:
        raise ValueError("catalog count does not match its flow list")
    return spec, flows
