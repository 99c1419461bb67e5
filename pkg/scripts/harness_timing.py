"""Time the kernel-inequality harness and report its worst margins per dimension."""

import argparse
import json
import time

from blowup_lab.verify import inequality_harness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seeds", type=int, nargs="+", default=[7, 8, 9])
    ap.add_argument("--dimensions", type=int, nargs="+", default=[3, 4, 5, 10])
    ap.add_argument("--nodes", type=int, default=257)
    args = ap.parse_args()

    for seed in args.seeds:
        start = time.perf_counter()
        summary = inequality_harness(args.trials, seed, args.dimensions, args.nodes)
        took = time.perf_counter() - start
        print(f"seed {seed}: {summary.violations} violations, worst margin {summary.worst_margin:.3g}, "
              f"largest tolerance {summary.worst_tolerance:.3g}, {took:.1f} s")
        print(json.dumps(summary.per_dimension, sort_keys=True))


if __name__ == "__main__":
    main()
