"""Convergence scaling of the phased counting protocol.

Doubles the population size under uniform-pair scheduling with random
marks and reports the mean base-station interactions to reach c = n, the
ratio between consecutive sizes (2 means linear up to the log factor), and
the n * H_n floor that any such counter must clear.

    python3 scripts/timeopt_scaling.py --sizes 8,16,32,64,128 --trials 500
"""

import argparse

from popcountlab.experiments import InitPolicy, TrialBatchSpec, derive_seed, sweep_n
from popcountlab.oracle import harmonic_bound
from popcountlab.protocols import ProtocolId
from popcountlab.schedulers import SchedulerKind


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="8,16,32,64,128")
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(part) for part in args.sizes.split(",")]

    base = TrialBatchSpec(
        protocol=ProtocolId.TIME_OPT,
        n=sizes[0],
        trials=args.trials,
        scheduler=SchedulerKind.UNIFORM_PAIR,
        init=InitPolicy.UNIFORM_RANDOM_MARKS,
        seed=derive_seed(args.seed, 1),
    )
    print(f"{'n':>5} {'bst mean':>11} {'se':>8} {'ratio':>6} {'n*H_n':>10}")
    previous = None
    for n, summary in sweep_n(base, sizes):
        stats = summary.bst_interactions
        ratio = "" if previous is None else f"{stats.mean / previous:.2f}"
        print(
            f"{n:>5} {stats.mean:>11.1f} {stats.standard_error:>8.2f} "
            f"{ratio:>6} {float(harmonic_bound(n)):>10.1f}"
        )
        previous = stats.mean


if __name__ == "__main__":
    main()
