"""Dense statevector simulation of graph states and XY-plane measurements.

Qubit ``v`` is tensor axis ``v - 1`` (big-endian). Angles are integers
modulo 8 in units of pi/4; only amplitudes are floating point. Measured
qubits are projected in place, so the state dimension never changes.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from cdbqc.graph import Graph

if TYPE_CHECKING:
    from cdbqc.protocol import MeasurementPattern

DEFAULT_QUBIT_CAP = 20
DEFAULT_EXHAUSTIVE_CAP = 12
NORM_TOL = 1e-12
PRUNE_TOL = 1e-15

#: odd multiples of pi/4, the smallest non-Clifford angle set closed under padding
DEFAULT_ANGLE_SET = frozenset({1, 3, 5, 7})


class CapExceededError(ValueError):
    pass


class ZeroProbabilityError(RuntimeError):
    """A forced outcome (or the positive branch) has vanishing probability."""


def angle_radians(a: int) -> float:
    return (a % 8) * np.pi / 4


def pad_closure(angle_set: Iterable[int]) -> frozenset[int]:
    """Orbit of ``angle_set`` under ``k -> (+-k + 4z) mod 8``."""
    out = set()
    for k in angle_set:
        for x in (0, 1):
            for z in (0, 1):
                out.add(((-1) ** x * k + 4 * z) % 8)
    return frozenset(out)


def is_pad_closed(angle_set: Iterable[int]) -> bool:
    s = frozenset(a % 8 for a in angle_set)
    return pad_closure(s) == s


@dataclass(frozen=True)
class StateVector:
    qubit_count: int
    amplitudes: np.ndarray = field(repr=False)
    measured: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.qubit_count,):
            raise ValueError("amplitude vector has the wrong dimension")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.qubit_count)


@dataclass(frozen=True)
class MeasurementRecord:
    qubit: int
    angle: int
    outcome: int
    probability: float
    #: Born probabilities of outcomes 0 and 1 before collapse
    probabilities: tuple[float, float] = (0.0, 0.0)


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceededError(f"{what}: {n} qubits exceeds the cap of {cap}")


def prepare_graph_state(g: Graph, cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """``prod CZ |+>^N`` over the edges of ``g``."""
    N = g.vertex_count
    _check_cap(N, cap, "graph state")
    idx = np.arange(2**N)
    parity = np.zeros(2**N, dtype=np.int64)
    for a, b in g.edges:
        parity ^= ((idx >> (N - a)) & 1) & ((idx >> (N - b)) & 1)
    amps = np.where(parity == 1, -1.0, 1.0).astype(complex) / np.sqrt(2.0**N)
    return StateVector(N, amps)


def apply_paulis(state: StateVector, x: Iterable[int] = (), z: Iterable[int] = ()) -> StateVector:
    """Apply ``prod X_x`` then ``prod Z_z`` (order only affects a global sign)."""
    t = state.tensor().copy()
    for q in z:
        sl = [slice(None)] * state.qubit_count
        sl[q - 1] = 1
        t[tuple(sl)] *= -1
    for q in x:
        t = np.flip(t, axis=q - 1)
    return StateVector(state.qubit_count, t.reshape(-1).copy(), state.measured)


def stabilizer(state: StateVector, g: Graph, v: int) -> StateVector:
    """Apply ``K_v = X_v prod_{w in N(v)} Z_w``."""
    return apply_paulis(state, x=[v], z=g.neighbors(v))


def _xy_components(t: np.ndarray, axis: int, angle: int) -> tuple[np.ndarray, np.ndarray]:
    """Overlaps ``<+_a|psi>`` and ``<-_a|psi>`` on one axis."""
    t0 = np.take(t, 0, axis=axis)
    t1 = np.take(t, 1, axis=axis)
    ph = np.exp(-1j * angle_radians(angle))
    return (t0 + ph * t1) / np.sqrt(2), (t0 - ph * t1) / np.sqrt(2)


def _embed(c: np.ndarray, axis: int, angle: int, outcome: int) -> np.ndarray:
    sign = -1 if outcome else 1
    ket = np.array([1.0, sign * np.exp(1j * angle_radians(angle))]) / np.sqrt(2)
    return np.moveaxis(np.multiply.outer(ket, c), 0, axis)


def xy_probabilities(state: StateVector, qubit: int, angle: int) -> tuple[float, float]:
    c0, c1 = _xy_components(state.tensor(), qubit - 1, angle)
    p0 = float(np.vdot(c0, c0).real)
    p1 = float(np.vdot(c1, c1).real)
    s = p0 + p1
    return p0 / s, p1 / s


def measure_xy(
    state: StateVector,
    qubit: int,
    angle: int,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[MeasurementRecord, StateVector]:
    """Measure ``qubit`` in ``{|+_a>, |-_a>}``; outcome 0 is ``|+_a>``.

    Either force ``outcome`` or pass ``rng`` to sample it. Returns the record
    and the renormalised post-measurement state.
    """
    if not 1 <= qubit <= state.qubit_count:
        raise ValueError(f"qubit {qubit} outside 1..{state.qubit_count}")
    if qubit in state.measured:
        raise ValueError(f"qubit {qubit} was already measured")
    axis = qubit - 1
    comps = _xy_components(state.tensor(), axis, angle)
    weights = [float(np.vdot(c, c).real) for c in comps]
    total = weights[0] + weights[1]
    probs = (weights[0] / total, weights[1] / total)
    if outcome is None:
        if rng is None:
            raise ValueError("pass either an outcome or an rng")
        outcome = int(rng.random() < probs[1])
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    if weights[outcome] < NORM_TOL**2:
        raise ZeroProbabilityError(
            f"outcome {outcome} on qubit {qubit} at angle {angle}pi/4 has zero probability"
        )
    c = comps[outcome] / np.sqrt(weights[outcome])
    new = _embed(c, axis, angle, outcome).reshape(-1)
    rec = MeasurementRecord(qubit, angle % 8, outcome, probs[outcome], probs)
    return rec, StateVector(state.qubit_count, new, state.measured | {qubit})


@dataclass
class BranchTree:
    """Leaves of an exhaustive measurement tree in lexicographic outcome order."""

    paths: list[tuple[tuple[int, ...], float]]
    #: leaves below a branch whose probability fell under the prune tolerance
    pruned: int = 0

    def total(self) -> float:
        return sum(p for _, p in self.paths)


def branch_tree(
    g: Graph,
    angle_policy: Callable[[int, tuple[int, ...]], int],
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    prune: float = PRUNE_TOL,
) -> BranchTree:
    """Measure qubits ``1..N`` in order along every outcome path.

    ``angle_policy(round, prior_outcomes)`` gives the angle for ``round``.
    All ``2^N`` paths are reported; leaves under a branch of probability
    below ``prune`` are not simulated and carry probability 0.
    """
    N = g.vertex_count
    _check_cap(N, cap, "branch tree")
    tree = BranchTree([])

    def dead(prefix: tuple[int, ...]) -> None:
        rest = N - len(prefix)
        for k in range(2**rest):
            tail = tuple((k >> (rest - 1 - i)) & 1 for i in range(rest))
            tree.paths.append((prefix + tail, 0.0))
        tree.pruned += 2**rest

    def visit(state: StateVector, prefix: tuple[int, ...], prob: float) -> None:
        j = len(prefix) + 1
        if j > N:
            tree.paths.append((prefix, prob))
            return
        angle = angle_policy(j, prefix)
        comps = _xy_components(state.tensor(), j - 1, angle)
        for b in (0, 1):
            w = float(np.vdot(comps[b], comps[b]).real)
            if prob * w < prune:
                dead(prefix + (b,))
                continue
            c = comps[b] / np.sqrt(w)
            nxt = StateVector(N, _embed(c, j - 1, angle, b).reshape(-1), state.measured | {j})
            visit(nxt, prefix + (b,), prob * w)

    visit(prepare_graph_state(g, cap), (), 1.0)
    return tree


def output_distribution(
    state: StateVector, outputs: Iterable[int], angles: dict[int, int]
) -> dict[tuple[int, ...], float]:
    """Joint XY-measurement law of ``outputs`` (ascending) at the given angles."""
    outputs = sorted(outputs)
    t = state.tensor()
    for q in outputs:
        c0, c1 = _xy_components(t, q - 1, angles[q])
        # rebuild with the outcome label on the same axis
        t = np.stack([c0, c1], axis=q - 1)
    probs = np.abs(t) ** 2
    others = tuple(ax for ax in range(state.qubit_count) if ax + 1 not in outputs)
    marg = probs.sum(axis=others) if others else probs
    marg = marg / marg.sum()
    dist: dict[tuple[int, ...], float] = {}
    for idx in np.ndindex(*marg.shape):
        dist[tuple(int(i) for i in idx)] = float(marg[idx])
    return dist


def positive_branch_distribution(
    pattern: MeasurementPattern, cap: int = DEFAULT_EXHAUSTIVE_CAP
) -> dict[tuple[int, ...], float]:
    """Output law of the all-zero branch: the reference the protocol must reproduce.

    Every non-output qubit is projected onto ``|+_{alpha_i}>`` in order; the
    outputs are then measured at their own angles with no corrections. Keys
    are output bit tuples ordered by ascending output label.
    """
    pattern.validate()
    flow = pattern.grid_flow()
    g = pattern.graph()
    _check_cap(g.vertex_count, cap, "positive branch")
    state = prepare_graph_state(g, cap)
    outputs = sorted(flow.outputs)
    for v in g.vertices:
        if v in flow.outputs:
            continue
        try:
            _, state = measure_xy(state, v, pattern.angles[v - 1], outcome=0)
        except ZeroProbabilityError as exc:
            raise ZeroProbabilityError(f"positive branch vanishes: {exc}") from None
    return output_distribution(state, outputs, {v: pattern.angles[v - 1] for v in outputs})
