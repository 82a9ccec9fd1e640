"""Measured flip convergence against the exact expectation.

For each population size, runs a seeded batch under base-station-only
scheduling from the all-zero start and prints the measured mean next to
2^(n-1) * sum 1/C(n-1, k), with the gap in standard errors.

    python3 scripts/flip_vs_exact.py --max-n 12 --trials 20000
"""

import argparse

from popcountlab.experiments import TrialBatchSpec, derive_seed, run_batch
from popcountlab.oracle import flip_expected_closed_form
from popcountlab.protocols import ProtocolId


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-n", type=int, default=12)
    parser.add_argument("--trials", type=int, default=20000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    print(f"{'n':>4} {'exact':>14} {'measured':>12} {'se':>8} {'gap/se':>7}")
    for n in range(2, args.max_n + 1):
        spec = TrialBatchSpec(
            protocol=ProtocolId.FLIP,
            n=n,
            trials=args.trials,
            seed=derive_seed(args.seed, n),
        )
        stats = run_batch(spec, threads=args.threads).summary.bst_interactions
        exact = float(flip_expected_closed_form(n))
        gap = (stats.mean - exact) / stats.standard_error
        print(
            f"{n:>4} {exact:>14.4f} {stats.mean:>12.4f} "
            f"{stats.standard_error:>8.4f} {gap:>+7.2f}"
        )


if __name__ == "__main__":
    main()
