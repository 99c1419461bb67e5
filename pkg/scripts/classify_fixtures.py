"""Classify every builtin fixture at a few truncation ceilings and print a table."""

import argparse

from blowup_lab.classify import (
    ClassifierOptions,
    classify_existence_integral,
    classify_slow_variation,
    existence_verdict,
)
from blowup_lab.fixtures import BUILDERS, get_fixture
from blowup_lab.kernel import build_grid
from blowup_lab.problem import estimate_lambda, extract_radial_bounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dimension", type=int, default=3)
    ap.add_argument("--ceilings", type=int, nargs="+", default=[12, 14, 15])
    ap.add_argument("--nodes-per-octave", type=int, default=292,
                    help="grid nodes per power of two in the ceiling")
    args = ap.parse_args()

    print(f"{'fixture':<16} {'ceiling':>7} {'slow variation':>15} {'existence':>12}  verdict")
    for tag in BUILDERS:
        fx = get_fixture(tag, N=args.dimension)
        lam = estimate_lambda(fx.nonlinearity)
        for ceiling in args.ceilings:
            grid = build_grid(2.0**ceiling, args.nodes_per_octave * ceiling, 2.0)
            bounds = extract_radial_bounds(fx.potential, grid, lam)
            opts = ClassifierOptions(ceiling_exponent=ceiling)
            slow = classify_slow_variation(bounds, opts)
            exist = classify_existence_integral(bounds, opts=opts)
            print(f"{tag:<16} {'2^' + str(ceiling):>7} {slow.verdict:>15} {exist.verdict:>12}  "
                  f"{existence_verdict(slow, exist)}")


if __name__ == "__main__":
    main()
