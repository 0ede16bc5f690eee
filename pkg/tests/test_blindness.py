import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdbqc.blindness import (
    JointDistribution,
    Witness,
    ambiguity_summary,
    build_joint,
    entropy,
    entropy_report,
    point_prior,
    replay_check,
    transcript_ambiguity,
    uniform_prior,
    verify_bounds,
)
from cdbqc.graph import GridSpec
from cdbqc.protocol import (
    AliceState,
    ConstantBob,
    HonestBob,
    MeasurementPattern,
    ProtocolTranscript,
    Round,
    TableBob,
    UniformBob,
    memory_bob,
    run_protocol,
)

from oracles import graph_state_dense, xy_projector

S12 = GridSpec(1, 2)
S22 = GridSpec(2, 2)


def test_entropy_basics():
    assert entropy([1.0]) == 0.0
    assert entropy([0.5, 0.5, 0.0]) == pytest.approx(1.0)
    assert entropy([0.25] * 4) == pytest.approx(2.0)


def _line_joint_by_hand(alpha, flow):
    """Pr(b', alpha') on the 1x2 line from dense projectors and explicit pads."""
    psi0 = graph_state_dense(2, [(1, 2)])
    table = {}
    for r1, r2, b1p, b2p in itertools.product((0, 1), repeat=4):
        b1 = b1p ^ r1
        a1 = (alpha[0] + 4 * r1) % 8
        sx = b1 if flow == 1 else 0
        a2 = ((-1) ** sx * alpha[1] + 4 * r2) % 8
        # Bob measures at the sent angles and reports b'
        psi = xy_projector(2, 1, a1, b1p) @ psi0
        psi = xy_projector(2, 2, a2, b2p) @ psi
        w = 0.25 * float(np.vdot(psi, psi).real)
        key = ((b1p, b2p), (a1, a2))
        table[key] = table.get(key, 0.0) + w
    return table


@pytest.mark.parametrize("alpha", [(1, 1), (3, 5), (7, 1)])
@pytest.mark.parametrize("flow", [0, 1])
def test_joint_matches_hand_enumeration(alpha, flow):
    joint = build_joint(S12, point_prior(S12, alpha, flow), HonestBob())
    got = joint.conditional(alpha, flow)
    ref = _line_joint_by_hand(alpha, flow)
    for k in set(got) | set(ref):
        assert got.get(k, 0.0) == pytest.approx(ref.get(k, 0.0), abs=1e-12)


def test_point_prior_cells_bounded():
    joint = build_joint(S22, point_prior(S22, (1, 3, 5, 7), 4), HonestBob())
    assert joint.total() == pytest.approx(1.0, abs=1e-9)
    assert max(joint.table.values()) <= 2**-4 + 1e-12


def test_constant_zero_on_line_has_four_equal_cells():
    joint = build_joint(S12, point_prior(S12, (1, 3), 1), ConstantBob(0))
    cells = joint.conditional((1, 3), 1)
    nonzero = [w for w in cells.values() if w > 0]
    assert len(nonzero) == 4
    assert all(w == pytest.approx(0.25) for w in nonzero)
    assert all(b == (0, 0) for b, _ in cells)


def test_uniform_prior_entropy_2x2():
    prior = uniform_prior(S22)
    assert entropy(prior.probs) == pytest.approx(8 + math.log2(9), abs=1e-9)


def test_uniform_prior_entropy_line():
    assert entropy(uniform_prior(S12).probs) == pytest.approx(5.0)


def _report(spec, prior, bob):
    return entropy_report(build_joint(spec, prior, bob), prior)


@pytest.mark.parametrize(
    "bob", [HonestBob(), ConstantBob(0), ConstantBob(1), UniformBob(1), memory_bob()], ids=lambda b: b.describe()["kind"]
)
def test_bounds_on_line_uniform(bob):
    spec = GridSpec(1, 3)
    prior = uniform_prior(spec)
    rep = _report(spec, prior, bob)
    verdict = verify_bounds(rep, 3, 4, n_flows=4)
    assert verdict.ok, verdict.to_dict()
    assert rep.h_transcript_given_secret >= 3 - 1e-9


def test_mutual_information_is_symmetric():
    spec = GridSpec(1, 3)
    prior = uniform_prior(spec)
    joint = build_joint(spec, prior, HonestBob())
    rep = entropy_report(joint, prior)
    h_t = entropy(joint.marginal("b", "a").values())
    h_s = entropy(joint.marginal("alpha", "f").values())
    h_all = entropy(joint.table.values())
    # I = H(T) - H(T|S) = H(S) - H(S|T)
    assert rep.mutual_information == pytest.approx(h_t - (h_all - h_s), abs=1e-9)
    assert rep.mutual_information == pytest.approx(h_s - (h_all - h_t), abs=1e-9)
    assert rep.h_secret == pytest.approx(h_s, abs=1e-12)


def test_larger_support_leaks_no_less_uncertainty():
    spec = GridSpec(1, 3)
    small = uniform_prior(spec, flows=[0])
    big = uniform_prior(spec)
    r_small = _report(spec, small, HonestBob())
    r_big = _report(spec, big, HonestBob())
    assert r_big.h_secret_given_transcript >= r_small.h_secret_given_transcript - 1e-9


def test_unnormalised_table_rejected():
    with pytest.raises(ValueError):
        build_joint(S12, point_prior(S12, (1, 1), 0), TableBob(lambda b, a: 1.5))


def test_work_cap():
    with pytest.raises(ValueError):
        build_joint(GridSpec(3, 3), uniform_prior(GridSpec(1, 1)), HonestBob())


def test_verify_bounds_catches_violation():
    spec = GridSpec(1, 2)
    rep = _report(spec, uniform_prior(spec), HonestBob())
    fake = type(rep)(**{**rep.to_dict(), "h_transcript_given_secret": 1.0})
    verdict = verify_bounds(fake, 2)
    assert not verdict.ok
    assert verdict.checks[0].margin < 0


def test_joint_csv_roundtrip():
    joint = build_joint(S12, uniform_prior(S12), HonestBob())
    again = JointDistribution.from_csv(joint.to_csv(), S12)
    assert again.table == joint.table


# --- ambiguity -------------------------------------------------------------


def _transcript(seed, spec=S22, flow=None):
    rng = np.random.default_rng(seed)
    pat = MeasurementPattern.random(spec, rng)
    if flow is not None:
        pat = MeasurementPattern(spec, pat.angles, flow)
    return pat, run_protocol(pat, HonestBob(), seed)[1]


@pytest.mark.parametrize("seed", range(5))
def test_every_flow_has_sixteen_witnesses(seed):
    _, tr = _transcript(seed)
    assert ambiguity_summary(tr) == [(f, 16) for f in range(9)]


def test_true_secret_is_a_witness():
    rng = np.random.default_rng(9)
    pat = MeasurementPattern.random(S22, rng)
    pad = (1, 0, 1, 1)
    # fixed-pad transcript with arbitrary answers
    alice = AliceState(pat, pad)
    rounds = []
    for i in range(1, 5):
        a = alice.next_angle(i)
        alice.receive(i, i % 2)
        rounds.append(Round(i, a, i % 2))
    tr = ProtocolTranscript(S22, tuple(rounds))
    assert Witness(pat.angles, pad) in transcript_ambiguity(tr, pat.flow)


def test_empty_flow_zero_pad_is_identity():
    _, tr = _transcript(4)
    assert Witness(tr.alpha_prime, (0, 0, 0, 0)) in transcript_ambiguity(tr, 0)


def test_witnesses_replay():
    _, tr = _transcript(2)
    for f in range(9):
        for w in transcript_ambiguity(tr, f):
            assert replay_check(tr, f, w)


def test_quarter_turn_perturbation_fails_replay():
    _, tr = _transcript(3)
    w = transcript_ambiguity(tr, 5)[0]
    bad = Witness(((w.angles[0] + 2) % 8,) + w.angles[1:], w.pad)
    assert not replay_check(tr, 5, bad)


def test_pad_flip_has_compensating_angle():
    _, tr = _transcript(6)
    ws = {w.pad: w for w in transcript_ambiguity(tr, 8)}
    for pad, w in ws.items():
        flipped = (1 - pad[0],) + pad[1:]
        # flipping r_1 changes b_1, so later angles may shift too; a witness still exists
        assert flipped in ws
        assert ws[flipped].angles[0] == (w.angles[0] + 4) % 8


def test_line_has_four_witnesses_per_flow():
    _, tr = _transcript(0, spec=S12)
    assert ambiguity_summary(tr) == [(0, 4), (1, 4)]


def test_incomplete_transcript_rejected():
    tr = ProtocolTranscript(S22, (Round(1, 1, 0),))
    with pytest.raises(ValueError):
        transcript_ambiguity(tr, 0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from([1, 3, 5, 7]), min_size=4, max_size=4), st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_any_in_set_transcript_is_fully_ambiguous(alpha_prime, b_prime):
    tr = ProtocolTranscript(S22, tuple(Round(i + 1, a, b) for i, (a, b) in enumerate(zip(alpha_prime, b_prime))))
    assert all(n == 16 for _, n in ambiguity_summary(tr))
