"""Command-line entry point.

JSON goes to stdout (or ``--out``); a one-line human summary goes to stderr.

Exit codes: 0 ok, 1 a flow admits no witness, 2 invalid configuration or
unparsable input, 3 simulator failure, 4 a proved bound was violated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from cdbqc import blindness, flows
from cdbqc.backend import DEFAULT_ANGLE_SET, CapExceededError, ZeroProbabilityError
from cdbqc.graph import GridSpec
from cdbqc.protocol import MeasurementPattern, ProtocolTranscript, bob_from_name, run_protocol

EXIT_OK = 0
EXIT_NO_WITNESS = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_BOUND = 4


class ConfigError(ValueError):
    pass


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _spec(args) -> GridSpec:
    try:
        return GridSpec(args.rows, args.cols)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_angles(text: str, spec: GridSpec, rng: np.random.Generator) -> tuple[int, ...]:
    if text == "random":
        return tuple(int(a) for a in rng.choice(sorted(DEFAULT_ANGLE_SET), spec.size))
    try:
        angles = tuple(int(a) for a in text.split(","))
    except ValueError:
        raise ConfigError(f"angles must be comma-separated integers 0..7 or 'random', got {text!r}") from None
    if len(angles) == 1:
        angles = angles * spec.size
    return angles


def _parse_flow(text: str, spec: GridSpec, rng: np.random.Generator) -> int:
    n = len(flows.enumerate_grid_flows(spec))
    if text == "random":
        return int(rng.integers(n))
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"flow must be an index or 'random', got {text!r}") from None


def cmd_count_flows(args) -> int:
    spec = _spec(args)
    methods = ["formula", "product", "enumerate", "asymptotic"] if args.method == "all" else [args.method]
    counts: dict[str, int | float] = {}
    if args.method == "all" and spec.size > flows.enumeration_cap():
        methods.remove("enumerate")
    for m in methods:
        if m == "formula":
            counts[m] = flows.count_flows_closed_form(spec)
        elif m == "product":
            counts[m] = flows.count_flows_product_form(spec)
        elif m == "enumerate":
            counts[m] = len(flows.enumerate_grid_flows(spec))
        elif m == "arrows":
            counts[m] = flows.count_noncrossing_arrow_systems(spec)
        elif m == "asymptotic":
            counts[m] = 2 ** flows.approx_count(spec)
    exact = {m: c for m, c in counts.items() if isinstance(c, int)}
    primary = exact.get(args.method) or next(iter(exact.values()), None)
    if primary is not None:
        log2 = math.log2(primary)
    else:
        log2 = flows.approx_count(spec)
    doc = {
        "rows": spec.rows,
        "cols": spec.cols,
        "method": args.method,
        # big integers as strings so JSON readers do not round them
        "counts": {m: (str(c) if isinstance(c, int) else c) for m, c in counts.items()},
        "count": str(primary) if primary is not None else None,
        "log2_count": log2,
        "bits_per_qubit": log2 / spec.size,
        "asymptotic_bits_per_qubit": flows.BITS_PER_QUBIT,
        "agree": len(set(exact.values())) <= 1,
    }
    _emit(doc, args.out)
    _say(
        f"{spec.rows}x{spec.cols}: count={doc['count'] or '~2^%.3f' % log2} "
        f"log2={log2:.4f} per-qubit={log2 / spec.size:.4f} (limit {flows.BITS_PER_QUBIT:.4f})"
    )
    return EXIT_OK


def cmd_enumerate_flows(args) -> int:
    spec = _spec(args)
    doc = flows.flow_catalog(spec)
    _emit(doc, args.out)
    _say(f"{spec.rows}x{spec.cols}: {doc['count']} flows")
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _spec(args)
    rng = np.random.default_rng(args.seed)
    try:
        angles = _parse_angles(args.angles, spec, rng)
        flow = _parse_flow(args.flow, spec, rng)
        pattern = MeasurementPattern(spec, angles, flow)
        bob = bob_from_name(args.bob, args.seed)
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None
    try:
        p, transcript = run_protocol(pattern, bob, args.seed)
    except (ZeroProbabilityError, CapExceededError) as exc:
        _say(f"backend failure: {exc}")
        return EXIT_BACKEND
    if args.out:
        Path(args.out).write_text(transcript.to_json())
        doc = {"output": list(p), "transcript": args.out}
    else:
        doc = {"output": list(p), "transcript": transcript.to_dict()}
    sys.stdout.write(json.dumps(doc) + "\n")
    _say(f"p = {''.join(map(str, p))} over outputs {list(pattern.dependencies().outputs)}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    spec = _spec(args)
    rng = np.random.default_rng(args.seed)
    try:
        if args.prior == "uniform":
            prior = blindness.uniform_prior(spec)
        else:
            angles = _parse_angles(args.angles, spec, rng)
            flow = _parse_flow(args.flow, spec, rng)
            MeasurementPattern(spec, angles, flow)
            prior = blindness.point_prior(spec, angles, flow)
        bob = bob_from_name(args.bob, args.seed)
        joint = blindness.build_joint(spec, prior, bob)
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None
    report = blindness.entropy_report(joint, prior)
    n_flows = len(flows.enumerate_grid_flows(spec)) if args.prior == "uniform" else None
    verdict = blindness.verify_bounds(report, spec.size, len(DEFAULT_ANGLE_SET), n_flows)
    extra = {"rows": spec.rows, "cols": spec.cols, "bob": bob.describe(), "prior": args.prior}
    text = blindness.report_json(report, verdict, extra)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.joint_csv:
        Path(args.joint_csv).write_text(joint.to_csv())
    _say(
        f"H(A,F)={report.h_secret:.4f} I={report.mutual_information:.4f} "
        f"H(A')={report.h_sent_angles:.4f} bounds {'ok' if verdict.ok else 'VIOLATED'}"
    )
    return EXIT_OK if verdict.ok else EXIT_BOUND


def cmd_check_ambiguity(args) -> int:
    try:
        transcript = ProtocolTranscript.from_json(Path(args.transcript).read_text())
    except (OSError, ValueError) as exc:
        _say(f"cannot parse transcript: {exc}")
        return EXIT_CONFIG
    rows = blindness.ambiguity_summary(transcript)
    doc = {
        "rows": transcript.spec.rows,
        "cols": transcript.spec.cols,
        "flows": [{"flow": f, "witnesses": n} for f, n in rows],
    }
    _emit(doc, args.out)
    for f, n in rows:
        _say(f"flow {f:>4}: {n} witnesses")
    return EXIT_NO_WITNESS if any(n == 0 for _, n in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdbqc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def grid(p):
        p.add_argument("--rows", type=int, required=True)
        p.add_argument("--cols", type=int, required=True)
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("count-flows", help="count flows on a grid")
    grid(p)
    p.add_argument(
        "--method",
        default="formula",
        choices=["formula", "product", "enumerate", "asymptotic", "arrows", "all"],
    )
    p.set_defaults(func=cmd_count_flows)

    p = sub.add_parser("enumerate-flows", help="export the flow catalog")
    grid(p)
    p.set_defaults(func=cmd_enumerate_flows)

    p = sub.add_parser("run", help="run the protocol once")
    grid(p)
    p.add_argument("--flow", default="random", help="flow index or 'random'")
    p.add_argument("--angles", default="random", help="comma list in units of pi/4, or 'random'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--bob", default="honest", help="honest, constant-0, constant-1, uniform, memory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="exact entropy report for one run")
    grid(p)
    p.add_argument("--bob", default="honest")
    p.add_argument("--prior", default="uniform", choices=["uniform", "point"])
    p.add_argument("--flow", default="random")
    p.add_argument("--angles", default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--joint-csv", default=None, help="also dump the joint table as CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check-ambiguity", help="count consistent secrets per flow")
    p.add_argument("transcript")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check_ambiguity)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _say(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    except flows.EnumerationCapError as exc:
        _say(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
