"""Flow counts per grid: enumerated flows, injective arrow systems, product formula.

Also prints the finite-size trend of log2(count)/N on square grids.

    python3 scripts/flow_census.py [--max-square 24]
"""

import argparse
import math

from cdbqc.flows import (
    BITS_PER_QUBIT,
    approx_count,
    count_flows_closed_form,
    count_noncrossing_arrow_systems,
    enumerate_grid_flows,
    enumeration_cap,
)
from cdbqc.graph import GridSpec


def census(grids):
    print(f"{'grid':>6} {'flows':>10} {'arrows':>10} {'formula':>10}")
    for n, m in grids:
        spec = GridSpec(n, m)
        enum = len(enumerate_grid_flows(spec)) if spec.size <= enumeration_cap() else None
        arrows = count_noncrossing_arrow_systems(spec, cap=max(enumeration_cap(), spec.size))
        formula = count_flows_closed_form(spec)
        print(f"{n}x{m:<4} {enum if enum is not None else '-':>10} {arrows:>10} {formula:>10}")


def square_trend(max_n):
    print(f"\n{'n':>3} {'log2 count / n^2':>18} {'approx / n^2':>14} {'gap to limit':>14}")
    for n in range(2, max_n + 1):
        spec = GridSpec(n, n)
        r = math.log2(count_flows_closed_form(spec)) / n**2
        print(f"{n:>3} {r:>18.5f} {approx_count(spec) / n**2:>14.5f} {BITS_PER_QUBIT - r:>14.5f}")
    print(f"limit 2 log2 phi = {BITS_PER_QUBIT:.5f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-square", type=int, default=24)
    args = ap.parse_args()
    grids = [(1, m) for m in range(2, 7)] + [(2, m) for m in range(2, 7)] + [(3, 2), (3, 3), (3, 4), (4, 2), (4, 3)]
    census(grids)
    square_trend(args.max_square)


if __name__ == "__main__":
    main()
