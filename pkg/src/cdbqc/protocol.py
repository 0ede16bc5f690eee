"""The client/server round loop.

Alice holds the secret pattern (angles and flow index) and a one-time pad
``r``; each round she sends a padded angle and decodes the returned bit.
Bob only ever sees ``(alpha', b')``.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from cdbqc.backend import (
    DEFAULT_ANGLE_SET,
    DEFAULT_EXHAUSTIVE_CAP,
    CapExceededError,
    StateVector,
    is_pad_closed,
    measure_xy,
    prepare_graph_state,
    xy_probabilities,
    _embed,
    _xy_components,
)
from cdbqc.flows import (
    Dependencies,
    FlowBits,
    GridFlow,
    enumerate_grid_flows,
    flow_bit_length,
    flow_bits_decode,
    grid_dependencies,
)
from cdbqc.graph import Graph, GridSpec, build_cluster_grid


class AngleDomainError(ValueError):
    pass


class ProtocolError(RuntimeError):
    """Alice's state machine was driven out of order."""


def padded_angle(alpha: int, sx: int, sz: int, r: int, angle_set=DEFAULT_ANGLE_SET) -> int:
    """``(-1)^sx * alpha + (sz + r) * pi`` in eighth turns, reduced mod 8."""
    if alpha % 8 not in angle_set:
        raise AngleDomainError(f"angle {alpha} not in {sorted(angle_set)}")
    return ((-alpha if sx & 1 else alpha) + 4 * (sz + r)) % 8


def unpad_angle(alpha_prime: int, sx: int, sz: int, r: int) -> int:
    """Inverse of :func:`padded_angle` in its first argument."""
    a = (alpha_prime - 4 * (sz + r)) % 8
    return (-a) % 8 if sx & 1 else a


@dataclass(frozen=True)
class MeasurementPattern:
    """Alice's secret: grid, angle per vertex (eighth turns) and flow index."""

    spec: GridSpec
    angles: tuple[int, ...]
    flow: int
    angle_set: frozenset[int] = DEFAULT_ANGLE_SET

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(int(a) % 8 for a in self.angles))
        if isinstance(self.flow, FlowBits):
            object.__setattr__(self, "flow", self.flow.value)
        object.__setattr__(self, "angle_set", frozenset(a % 8 for a in self.angle_set))
        self.validate()

    def validate(self) -> None:
        if not is_pad_closed(self.angle_set):
            raise AngleDomainError(f"angle set {sorted(self.angle_set)} is not closed under padding")
        if len(self.angles) != self.spec.size:
            raise ValueError(f"need {self.spec.size} angles, got {len(self.angles)}")
        bad = [a for a in self.angles if a not in self.angle_set]
        if bad:
            raise AngleDomainError(f"angles {bad} outside {sorted(self.angle_set)}")
        flow_bits_decode(self.spec, self.flow)

    @property
    def N(self) -> int:
        return self.spec.size

    def graph(self) -> Graph:
        return build_cluster_grid(self.spec)

    def grid_flow(self) -> GridFlow:
        return flow_bits_decode(self.spec, self.flow)

    def flow_bits(self) -> FlowBits:
        return FlowBits(flow_bit_length(len(enumerate_grid_flows(self.spec))), self.flow)

    def dependencies(self) -> Dependencies:
        return grid_dependencies(self.spec, self.flow)

    @classmethod
    def random(cls, spec: GridSpec, rng: np.random.Generator, angle_set=DEFAULT_ANGLE_SET):
        choices = sorted(angle_set)
        angles = tuple(int(rng.choice(choices)) for _ in range(spec.size))
        flow = int(rng.integers(len(enumerate_grid_flows(spec))))
        return cls(spec, angles, flow, frozenset(angle_set))


@dataclass(frozen=True)
class Round:
    i: int
    alpha_prime: int
    b_prime: int


@dataclass(frozen=True)
class ProtocolTranscript:
    """Everything Bob sees. ``meta`` is bookkeeping and never analysed."""

    spec: GridSpec
    rounds: tuple[Round, ...]
    angle_set: frozenset[int] = DEFAULT_ANGLE_SET
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for k, rd in enumerate(self.rounds, start=1):
            if rd.i != k:
                raise ValueError(f"round {k} is labelled {rd.i}")
            if rd.b_prime not in (0, 1):
                raise ValueError(f"round {k}: b' must be a bit")
            if not 0 <= rd.alpha_prime < 8:
                raise ValueError(f"round {k}: alpha' must be in 0..7")

    @property
    def complete(self) -> bool:
        return len(self.rounds) == self.spec.size

    @property
    def alpha_prime(self) -> tuple[int, ...]:
        return tuple(r.alpha_prime for r in self.rounds)

    @property
    def b_prime(self) -> tuple[int, ...]:
        return tuple(r.b_prime for r in self.rounds)

    def to_dict(self) -> dict:
        doc = {
            "rows": self.spec.rows,
            "cols": self.spec.cols,
            "angle_unit": "pi/4",
            "angle_set": sorted(self.angle_set),
            "rounds": [
                {"i": r.i, "alpha_prime": r.alpha_prime, "b_prime": r.b_prime} for r in self.rounds
            ],
        }
        if self.meta:
            doc["meta"] = self.meta
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict, require_complete: bool = True) -> ProtocolTranscript:
        try:
            if doc.get("angle_unit", "pi/4") != "pi/4":
                raise ValueError(f"unsupported angle unit {doc['angle_unit']!r}")
            spec = GridSpec(int(doc["rows"]), int(doc["cols"]))
            rounds = tuple(
                Round(int(r["i"]), int(r["alpha_prime"]), int(r["b_prime"])) for r in doc["rounds"]
            )
            angle_set = frozenset(int(a) for a in doc.get("angle_set", DEFAULT_ANGLE_SET))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed transcript: {exc!r}") from None
        tr = cls(spec, rounds, angle_set, dict(doc.get("meta", {})))
        if require_complete and not tr.complete:
            raise ValueError(f"transcript has {len(rounds)} rounds, expected {spec.size}")
        return tr

    @classmethod
    def from_json(cls, text: str, require_complete: bool = True) -> ProtocolTranscript:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"transcript is not valid JSON: {exc}") from None
        return cls.from_dict(doc, require_complete)


class AliceState:
    """Client side of one run.

    The pad may be fixed up front (``pad``) or supplied round by round to
    :meth:`next_angle`.
    """

    def __init__(self, pattern: MeasurementPattern, pad: Sequence[int] | None = None):
        self.pattern = pattern
        self.deps = pattern.dependencies()
        self.outputs = frozenset(self.deps.outputs)
        if pad is not None and len(pad) != pattern.N:
            raise ValueError(f"pad needs {pattern.N} bits")
        self.pad: list[int | None] = list(pad) if pad is not None else [None] * pattern.N
        self.decoded: dict[int, int] = {}
        self.output_register: dict[int, int] = {}
        self.late_z: dict[int, int] = {o: 0 for o in self.outputs}
        self.sent: list[int] = []
        self.last_s: tuple[int, int] = (0, 0)

    @property
    def round(self) -> int:
        """Index of the next round to issue."""
        return len(self.sent) + 1

    def next_angle(self, i: int, r: int | None = None) -> int:
        if i != self.round or len(self.decoded) != len(self.sent):
            raise ProtocolError(f"round {i} requested, expected {self.round}")
        if r is None:
            r = self.pad[i - 1]
            if r is None:
                raise ProtocolError(f"no pad bit for round {i}")
        self.pad[i - 1] = r & 1
        sx = self.deps.sx(i, self.decoded)
        sz = self.deps.sz(i, self.decoded)
        self.last_s = (sx, sz)
        a = padded_angle(self.pattern.angles[i - 1], sx, sz, r & 1, self.pattern.angle_set)
        self.sent.append(a)
        return a

    def receive(self, i: int, b_prime: int) -> int:
        if i != len(self.sent) or i in self.decoded:
            raise ProtocolError(f"bit for round {i} arrived out of order")
        b = (b_prime ^ self.pad[i - 1]) & 1
        self.decoded[i] = b
        if i in self.outputs:
            self.output_register[i] = b
        if b:
            for o in self.outputs:
                if i in self.deps.late_z[o]:
                    self.late_z[o] ^= 1
        return b

    def finalize(self) -> tuple[int, ...]:
        if len(self.decoded) != self.pattern.N:
            raise ProtocolError(f"only {len(self.decoded)} of {self.pattern.N} rounds completed")
        return tuple(self.output_register[o] ^ self.late_z[o] for o in sorted(self.outputs))


def alice_next_angle(state: AliceState, i: int, r: int | None = None) -> tuple[int, AliceState]:
    return state.next_angle(i, r), state


def alice_receive(state: AliceState, i: int, b_prime: int) -> AliceState:
    state.receive(i, b_prime)
    return state


def alice_finalize(state: AliceState) -> tuple[int, ...]:
    return state.finalize()


# --- servers -----------------------------------------------------------------


class BobStrategy:
    """Server behaviour.

    ``respond`` is used in sampled runs; ``prob_one`` is the conditional
    table ``Pr(b'_j = 1 | b'_<j, alpha'_<=j)`` used for exact enumeration.
    Both only receive what Bob has seen so far.
    """

    kind = "abstract"

    def start(self, graph: Graph, rng: np.random.Generator) -> None:
        self._rng = rng

    def respond(self, b_prev: tuple[int, ...], alpha_prev: tuple[int, ...]) -> int:
        p = self.prob_one(b_prev, alpha_prev)
        return int(self._rng.random() < p)

    def prob_one(self, b_prev: tuple[int, ...], alpha_prev: tuple[int, ...]) -> float:
        raise NotImplementedError(f"{self.kind} Bob has no conditional table")

    def describe(self) -> dict:
        return {"kind": self.kind}


class HonestBob(BobStrategy):
    """Prepares the graph state and really measures each qubit."""

    kind = "honest"

    def __init__(self, graph: Graph | None = None, cache_limit: int = 200_000):
        self.graph = graph
        self._cache: dict[tuple, StateVector] = {}
        self._p1: dict[tuple, float] = {}
        self._cache_limit = cache_limit

    def start(self, graph, rng):
        super().start(graph, rng)
        self.graph = graph
        self._live = prepare_graph_state(graph)
        self.reset_cache()

    def reset_cache(self) -> None:
        self._cache.clear()
        self._p1.clear()

    def respond(self, b_prev, alpha_prev):
        j = len(alpha_prev)
        rec, self._live = measure_xy(self._live, j, alpha_prev[-1], rng=self._rng)
        return rec.outcome

    def _state(self, b_prev: tuple[int, ...], alpha_prev: tuple[int, ...]) -> StateVector:
        key = (b_prev, alpha_prev[: len(b_prev)])
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not b_prev:
            st = prepare_graph_state(self.graph)
        else:
            parent = self._state(b_prev[:-1], alpha_prev[: len(b_prev) - 1])
            j = len(b_prev)
            comps = _xy_components(parent.tensor(), j - 1, alpha_prev[j - 1])
            c = comps[b_prev[-1]]
            w = float(np.vdot(c, c).real)
            if w == 0.0:
                st = parent  # unreachable branch; weight is zero anyway
            else:
                c = c / np.sqrt(w)
                amps = _embed(c, j - 1, alpha_prev[j - 1], b_prev[-1]).reshape(-1)
                st = StateVector(parent.qubit_count, amps, parent.measured | {j})
        if len(self._cache) >= self._cache_limit:
            self._cache.clear()
        self._cache[key] = st
        return st

    def prob_one(self, b_prev, alpha_prev):
        if self.graph is None:
            raise ValueError("honest Bob needs a graph before it can answer")
        key = (b_prev, alpha_prev)
        p = self._p1.get(key)
        if p is None:
            st = self._state(tuple(b_prev), tuple(alpha_prev))
            p = xy_probabilities(st, len(alpha_prev), alpha_prev[-1])[1]
            if len(self._p1) >= self._cache_limit:
                self._p1.clear()
            self._p1[key] = p
        return p


class ConstantBob(BobStrategy):
    kind = "constant"

    def __init__(self, bit: int):
        self.bit = bit & 1

    def prob_one(self, b_prev, alpha_prev):
        return float(self.bit)

    def describe(self):
        return {"kind": self.kind, "bit": self.bit}


class UniformBob(BobStrategy):
    """Answers with fair coin flips from its own seeded generator."""

    kind = "uniform-random"

    def __init__(self, seed: int | None = None):
        self.seed = seed

    def start(self, graph, rng):
        self._rng = np.random.default_rng(self.seed) if self.seed is not None else rng

    def prob_one(self, b_prev, alpha_prev):
        return 0.5

    def describe(self):
        return {"kind": self.kind, "seed": self.seed}


class TableBob(BobStrategy):
    """Adversary given directly as ``Pr(b'_j = 1 | b'_<j, alpha'_<=j)``."""

    kind = "table"

    def __init__(self, table: Callable[[tuple[int, ...], tuple[int, ...]], float], name: str = "table"):
        self.table = table
        self.name = name

    def prob_one(self, b_prev, alpha_prev):
        p = float(self.table(tuple(b_prev), tuple(alpha_prev)))
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Bob table row is not a probability: {p}")
        return p

    def describe(self):
        return {"kind": self.kind, "name": self.name}


def memory_bob() -> TableBob:
    """Adversary that correlates its answer with its whole history.

    Leans towards 1 when the parity of returned bits plus the axis bit of
    the newest angle is odd.
    """

    def table(b_prev, alpha_prev):
        axis = (alpha_prev[-1] >> 1) & 1
        return 0.85 if (sum(b_prev) + axis) & 1 else 0.2

    return TableBob(table, "memory")


class CallbackBob(BobStrategy):
    """Sampled-mode adversary with arbitrary private state."""

    kind = "custom"

    def __init__(self, fn: Callable[[tuple[int, ...], tuple[int, ...], np.random.Generator], int]):
        self.fn = fn

    def respond(self, b_prev, alpha_prev):
        return int(self.fn(b_prev, alpha_prev, self._rng)) & 1


def bob_from_name(name: str, seed: int | None = None) -> BobStrategy:
    """Parse ``honest``, ``constant-0``, ``constant-1``, ``uniform`` or ``memory``."""
    if name == "honest":
        return HonestBob()
    if name in ("constant-0", "constant-1"):
        return ConstantBob(int(name[-1]))
    if name in ("uniform", "uniform-random"):
        return UniformBob(seed)
    if name == "memory":
        return memory_bob()
    raise ValueError(f"unknown Bob strategy {name!r}")


# --- runs --------------------------------------------------------------------


def run_protocol(
    pattern: MeasurementPattern, bob: BobStrategy, seed: int
) -> tuple[tuple[int, ...], ProtocolTranscript]:
    """One sampled run. The pad is drawn up front from ``seed``."""
    root = np.random.SeedSequence(seed)
    alice_seq, bob_seq = root.spawn(2)
    alice_rng = np.random.default_rng(alice_seq)
    pad = [int(x) for x in alice_rng.integers(0, 2, pattern.N)]
    alice = AliceState(pattern, pad)
    bob.start(pattern.graph(), np.random.default_rng(bob_seq))
    alphas: list[int] = []
    bits: list[int] = []
    rounds = []
    for i in range(1, pattern.N + 1):
        a = alice.next_angle(i)
        alphas.append(a)
        b = int(bob.respond(tuple(bits), tuple(alphas)))
        bits.append(b)
        alice.receive(i, b)
        rounds.append(Round(i, a, b))
    meta = {"seed": seed, "bob": bob.describe()}
    transcript = ProtocolTranscript(pattern.spec, tuple(rounds), pattern.angle_set, meta)
    return alice.finalize(), transcript


@dataclass
class ExhaustiveRun:
    """Exact joint law of ``(p, alpha', b')`` for one pattern."""

    table: dict[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]], float]

    def total(self) -> float:
        return sum(self.table.values())

    def output_marginal(self) -> dict[tuple[int, ...], float]:
        out: dict[tuple[int, ...], float] = {}
        for (p, _, _), w in self.table.items():
            out[p] = out.get(p, 0.0) + w
        return out

    def transcript_marginal(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
        out: dict = {}
        for (_, a, b), w in self.table.items():
            out[(a, b)] = out.get((a, b), 0.0) + w
        return out


def walk_rounds(
    pattern: MeasurementPattern,
    bob: BobStrategy,
    pads: Iterable[int] | None,
    leaf: Callable[[tuple[int, ...], tuple[int, ...], dict[int, int], float], None],
    prune: float = 0.0,
) -> None:
    """Enumerate every pad and every answer of a tabulated Bob.

    Calls ``leaf(alpha', b', decoded_bits, weight)`` per complete branch.
    With ``pads=None`` each pad bit branches with weight 1/2; otherwise the
    fixed pad is used with weight 1.
    """
    deps = pattern.dependencies()
    N = pattern.N
    fixed = None if pads is None else tuple(pads)
    angles = pattern.angles
    aset = pattern.angle_set

    def visit(j: int, alpha: tuple, bits: tuple, decoded: dict, w: float) -> None:
        if j > N:
            leaf(alpha, bits, decoded, w)
            return
        sx = deps.sx(j, decoded)
        sz = deps.sz(j, decoded)
        for r in (0, 1) if fixed is None else (fixed[j - 1],):
            wr = w * 0.5 if fixed is None else w
            a = padded_angle(angles[j - 1], sx, sz, r, aset)
            alpha2 = alpha + (a,)
            p1 = bob.prob_one(bits, alpha2)
            for b, pb in ((0, 1.0 - p1), (1, p1)):
                if pb <= prune:
                    continue
                decoded[j] = b ^ r
                visit(j + 1, alpha2, bits + (b,), decoded, wr * pb)
                del decoded[j]

    visit(1, (), (), {}, 1.0)


def run_protocol_exhaustive(
    pattern: MeasurementPattern,
    bob: BobStrategy | None = None,
    pads: Sequence[int] | None = None,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
) -> ExhaustiveRun:
    """Exact law of output and transcript, summed over pads and outcomes."""
    if pattern.N > cap:
        raise CapExceededError(f"{pattern.N} qubits exceeds the exhaustive cap of {cap}")
    graph = pattern.graph()
    if bob is None:
        bob = HonestBob(graph)
    elif isinstance(bob, HonestBob):
        bob.graph = graph
        bob.reset_cache()
    deps = pattern.dependencies()
    outputs = deps.outputs
    table: dict = {}

    def leaf(alpha, bits, decoded, w):
        p = []
        for o in outputs:
            bit = decoded[o]
            for i in deps.late_z[o]:
                bit ^= decoded[i]
            p.append(bit)
        key = (tuple(p), alpha, bits)
        table[key] = table.get(key, 0.0) + w

    walk_rounds(pattern, bob, pads, leaf)
    return ExhaustiveRun(table)


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
