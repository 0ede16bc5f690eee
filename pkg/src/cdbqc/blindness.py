"""Exact information leakage of a single protocol run.

The joint law ``Pr(b', alpha', alpha, f)`` is built by enumerating, for
every secret in the prior's support, every pad and every answer of a
tabulated server. Entropies are then read off the sparse table.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from cdbqc.backend import DEFAULT_ANGLE_SET
from cdbqc.flows import FlowBits, enumerate_grid_flows, grid_dependencies
from cdbqc.graph import GridSpec, build_cluster_grid
from cdbqc.protocol import (
    AliceState,
    BobStrategy,
    HonestBob,
    MeasurementPattern,
    ProtocolTranscript,
    unpad_angle,
    walk_rounds,
)

#: support size times 4^N leaves; keeps a table build to a few seconds
JOINT_WORK_CAP = 1 << 22
MASS_TOL = 1e-9

Secret = tuple[tuple[int, ...], int]


@dataclass(frozen=True)
class Prior:
    """Distribution over secrets ``(angles, flow index)``."""

    spec: GridSpec
    support: tuple[Secret, ...]
    probs: tuple[float, ...]
    angle_set: frozenset[int] = DEFAULT_ANGLE_SET

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise ValueError("support and probabilities differ in length")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"prior sums to {sum(self.probs)}")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative prior probability")

    def items(self):
        return zip(self.support, self.probs)


def uniform_prior(spec: GridSpec, angle_set=DEFAULT_ANGLE_SET, flows: Iterable[int] | None = None) -> Prior:
    nflows = len(enumerate_grid_flows(spec))
    flows = range(nflows) if flows is None else list(flows)
    support = tuple(
        (tuple(a), f) for a in itertools.product(sorted(angle_set), repeat=spec.size) for f in flows
    )
    p = 1.0 / len(support)
    return Prior(spec, support, (p,) * len(support), frozenset(angle_set))


def point_prior(spec: GridSpec, angles: Sequence[int], flow: int, angle_set=DEFAULT_ANGLE_SET) -> Prior:
    return Prior(spec, ((tuple(angles), int(flow)),), (1.0,), frozenset(angle_set))


@dataclass
class JointDistribution:
    """Sparse ``Pr(b', alpha', alpha, f)`` keyed by ``(b', alpha', alpha, f)``."""

    spec: GridSpec
    table: dict[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], int], float]
    angle_set: frozenset[int]
    bob: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.spec.size

    def total(self) -> float:
        return math.fsum(self.table.values())

    def marginal(self, *fields: str) -> dict[tuple, float]:
        """Sum out everything except the named fields (``b``, ``a``, ``alpha``, ``f``)."""
        pos = {"b": 0, "a": 1, "alpha": 2, "f": 3}
        idx = [pos[f] for f in fields]
        out: dict[tuple, float] = defaultdict(float)
        for key, w in self.table.items():
            out[tuple(key[i] for i in idx)] += w
        return dict(out)

    def conditional(self, alpha: tuple[int, ...], f: int) -> dict[tuple, float]:
        """``Pr(b', alpha' | alpha, f)`` for one secret."""
        rows = {(b, a): w for (b, a, al, ff), w in self.table.items() if al == alpha and ff == f}
        mass = math.fsum(rows.values())
        return {k: w / mass for k, w in rows.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["b_prime", "alpha_prime", "alpha", "flow", "probability"])
        for (b, a, al, f), w in sorted(self.table.items()):
            wr.writerow(["".join(map(str, b)), "".join(map(str, a)), "".join(map(str, al)), f, repr(w)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, spec: GridSpec, angle_set=DEFAULT_ANGLE_SET) -> JointDistribution:
        rows = csv.DictReader(io.StringIO(text))
        table = {}
        for r in rows:
            key = (
                tuple(int(c) for c in r["b_prime"]),
                tuple(int(c) for c in r["alpha_prime"]),
                tuple(int(c) for c in r["alpha"]),
                int(r["flow"]),
            )
            table[key] = float(r["probability"])
        return cls(spec, table, frozenset(angle_set))


def build_joint(
    spec: GridSpec, prior: Prior, bob: BobStrategy, work_cap: int = JOINT_WORK_CAP
) -> JointDistribution:
    """Exact joint table for one run, with pads and decoded bits summed out."""
    N = spec.size
    work = len(prior.support) * 4**N
    if work > work_cap:
        raise ValueError(
            f"prior support of {len(prior.support)} on {N} qubits needs ~{work} leaves (cap {work_cap});"
            " restrict the prior"
        )
    if isinstance(bob, HonestBob):
        bob.graph = build_cluster_grid(spec)
        bob.reset_cache()
    table: dict = defaultdict(float)
    for (alpha, f), w in prior.items():
        if w == 0.0:
            continue
        pattern = MeasurementPattern(spec, alpha, f, prior.angle_set)

        def leaf(a, b, decoded, weight, alpha=pattern.angles, f=f, w=w):
            table[(b, a, alpha, f)] += w * weight

        walk_rounds(pattern, bob, None, leaf)
    joint = JointDistribution(spec, dict(table), prior.angle_set, bob.describe())
    total = joint.total()
    if abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"joint table has mass {total}; Bob's table is not normalised")
    return joint


def entropy(probs: Iterable[float]) -> float:
    """Shannon entropy in bits with ``0 log 0 = 0``."""
    p = np.fromiter(probs, dtype=float)
    p = p[p > 0]
    return max(0.0, float(-np.sum(p * np.log2(p))))


@dataclass(frozen=True)
class EntropyReport:
    """All quantities in bits."""

    h_sent_angles: float  # H(A')
    h_returned_bits: float  # H(B')
    h_secret: float  # H(A, F)
    h_transcript: float  # H(B', A')
    h_transcript_given_secret: float  # H(B', A' | A, F)
    mutual_information: float  # I(B', A'; A, F)
    h_secret_given_transcript: float  # H(A, F | B', A')

    def to_dict(self) -> dict:
        return asdict(self)


def entropy_report(joint: JointDistribution, prior: Prior | None = None) -> EntropyReport:
    h_all = entropy(joint.table.values())
    h_a = entropy(joint.marginal("a").values())
    h_b = entropy(joint.marginal("b").values())
    h_ba = entropy(joint.marginal("b", "a").values())
    if prior is not None:
        h_secret = entropy(prior.probs)
    else:
        h_secret = entropy(joint.marginal("alpha", "f").values())
    return EntropyReport(
        h_sent_angles=h_a,
        h_returned_bits=h_b,
        h_secret=h_secret,
        h_transcript=h_ba,
        h_transcript_given_secret=h_all - h_secret,
        mutual_information=h_ba + h_secret - h_all,
        h_secret_given_transcript=h_all - h_ba,
    )


@dataclass(frozen=True)
class BoundCheck:
    """``value <relation> bound``; ``margin`` is positive when the bound holds."""

    name: str
    value: float
    relation: str
    bound: float
    margin: float
    holds: bool


@dataclass(frozen=True)
class BoundsVerdict:
    checks: tuple[BoundCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [asdict(c) for c in self.checks]}


def verify_bounds(
    report: EntropyReport,
    N: int,
    angle_set_size: int = 4,
    n_flows: int | None = None,
    tol: float = 1e-9,
) -> BoundsVerdict:
    """Check the single-run leakage bounds.

    ``n_flows`` enables the uniform-prior check ``H(A,F | B',A') >= log2 n_flows``;
    only pass it when the prior is uniform over all flows.
    """
    checks = []

    def check(name, value, relation, bound):
        margin = value - bound if relation == ">=" else bound - value
        checks.append(BoundCheck(name, value, relation, bound, margin, margin >= -tol))

    check("H(B',A'|A,F) >= N", report.h_transcript_given_secret, ">=", float(N))
    check("I(B',A';A,F) <= H(A')", report.mutual_information, "<=", report.h_sent_angles)
    check("H(A') <= N log2|A|", report.h_sent_angles, "<=", N * math.log2(angle_set_size))
    if n_flows is not None:
        check("H(A,F|B',A') >= n_F", report.h_secret_given_transcript, ">=", math.log2(n_flows))
    return BoundsVerdict(tuple(checks))


# --- transcript ambiguity ----------------------------------------------------


@dataclass(frozen=True)
class Witness:
    angles: tuple[int, ...]
    pad: tuple[int, ...]


def _flow_index(flow: FlowBits | int) -> int:
    return flow.value if isinstance(flow, FlowBits) else int(flow)


def transcript_ambiguity(transcript: ProtocolTranscript, flow: FlowBits | int) -> list[Witness]:
    """Every ``(alpha, r)`` under ``flow`` that would have produced the transcript."""
    if not transcript.complete:
        raise ValueError("transcript is incomplete")
    spec = transcript.spec
    deps = grid_dependencies(spec, _flow_index(flow))
    N = spec.size
    a_prime = transcript.alpha_prime
    b_prime = transcript.b_prime
    out = []
    for pad in itertools.product((0, 1), repeat=N):
        decoded: dict[int, int] = {}
        angles = []
        for j in range(1, N + 1):
            sx, sz = deps.sx(j, decoded), deps.sz(j, decoded)
            angles.append(unpad_angle(a_prime[j - 1], sx, sz, pad[j - 1]))
            decoded[j] = b_prime[j - 1] ^ pad[j - 1]
        if all(a in transcript.angle_set for a in angles):
            out.append(Witness(tuple(angles), pad))
    return out


def replay_check(transcript: ProtocolTranscript, flow: FlowBits | int, witness: Witness) -> bool:
    """Rerun Alice with the witness against the transcript's returned bits."""
    try:
        pattern = MeasurementPattern(transcript.spec, witness.angles, _flow_index(flow), transcript.angle_set)
    except ValueError:
        return False
    alice = AliceState(pattern, witness.pad)
    for rd in transcript.rounds:
        if alice.next_angle(rd.i) != rd.alpha_prime:
            return False
        alice.receive(rd.i, rd.b_prime)
    return True


def ambiguity_summary(transcript: ProtocolTranscript) -> list[tuple[int, int]]:
    n = len(enumerate_grid_flows(transcript.spec))
    return [(f, len(transcript_ambiguity(transcript, f))) for f in range(n)]


def report_json(report: EntropyReport, verdict: BoundsVerdict, extra: dict | None = None) -> str:
    doc = {"report": report.to_dict(), "bounds": verdict.to_dict()}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1) + "\n"
