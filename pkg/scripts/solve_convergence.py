"""Picard fixed point against the RK4 oracle as the grid is refined.

Prints the oracle error, the refinement estimate and the sweep count for
each node count.
"""

import argparse
import time

from blowup_lab.fixtures import get_fixture
from blowup_lab.kernel import build_grid
from blowup_lab.problem import Nonlinearity, estimate_lambda, extract_radial_bounds
from blowup_lab.solver import PicardConfig, oracle_error, picard_iterate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("fixtures", nargs="*", default=["constant", "paper-example-1", "remark1-i"])
    ap.add_argument("--radius", type=float, default=20.0)
    ap.add_argument("--nodes", type=int, nargs="+", default=[256, 512, 1024, 2048, 4096])
    args = ap.parse_args()

    f = Nonlinearity.from_text("s")
    print(f"{'fixture':<16} {'nodes':>6} {'oracle err':>11} {'refine eps':>11} {'sweeps':>6} {'seconds':>8}")
    for tag in args.fixtures:
        fx = get_fixture(tag)
        lam = estimate_lambda(f)
        for n in args.nodes:
            start = time.perf_counter()
            bounds = extract_radial_bounds(fx.potential, build_grid(args.radius, n, 2.0), lam)
            rep = picard_iterate(PicardConfig(radius=args.radius), bounds, f)
            err = oracle_error(rep, bounds, f)
            took = time.perf_counter() - start
            print(f"{tag:<16} {n:>6} {err:>11.3e} {rep.quadrature_tolerance:>11.3e} "
                  f"{rep.iterations:>6} {took:>8.2f}")


if __name__ == "__main__":
    main()
