"""Exact single-run leakage for every small grid and server strategy.

    python3 scripts/leakage_table.py
"""

import math

from cdbqc.blindness import build_joint, entropy_report, uniform_prior, verify_bounds
from cdbqc.flows import enumerate_grid_flows
from cdbqc.graph import GridSpec
from cdbqc.protocol import ConstantBob, HonestBob, UniformBob, memory_bob


def main():
    bobs = [HonestBob(), ConstantBob(0), ConstantBob(1), UniformBob(0), memory_bob()]
    head = f"{'grid':>5} {'bob':>15} {'H(A,F)':>8} {'H(A`)':>7} {'I':>7} {'H(A,F|T)':>9} {'log2 nF':>8} {'ok':>3}"
    print(head)
    for n, m in [(1, 2), (1, 3), (2, 2)]:
        spec = GridSpec(n, m)
        nf = len(enumerate_grid_flows(spec))
        prior = uniform_prior(spec)
        for bob in bobs:
            rep = entropy_report(build_joint(spec, prior, bob), prior)
            ok = verify_bounds(rep, spec.size, 4, nf).ok
            name = bob.describe().get("name") or bob.describe()["kind"]
            if isinstance(bob, ConstantBob):
                name += f"-{bob.bit}"
            print(
                f"{n}x{m:<3} {name:>15} {rep.h_secret:8.4f} {rep.h_sent_angles:7.4f} "
                f"{rep.mutual_information:7.4f} {rep.h_secret_given_transcript:9.4f} {math.log2(nf):8.4f} {'yes' if ok else 'NO':>3}"
            )


if __name__ == "__main__":
    main()
