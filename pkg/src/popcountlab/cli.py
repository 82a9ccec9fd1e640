"""Command line interface: simulate batches, query exact values, verify.

Exit codes: 0 on success, 1 for bad flags or invalid parameter combinations
(and for failed verification), 2 when a simulation batch was entirely
truncated by its interaction cap.
"""

import argparse
import csv
import io
import json
import sys
from decimal import Decimal, localcontext
from fractions import Fraction

from . import acceptance, oracle
from .engine import StopCondition, StopKind
from .experiments import AllTrialsTruncated, InitPolicy, TrialBatchSpec, run_batch
from .protocols import NameOverflow, ProtocolId
from .schedulers import RNG_ALGORITHM, SchedulerKind

SCHEMA_VERSION = "1"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit int")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="popcountlab", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate = commands.add_parser("simulate", help="run a batch of seeded trials")
    simulate.add_argument(
        "--protocol", required=True, choices=[p.value for p in ProtocolId]
    )
    simulate.add_argument("--n", required=True, type=_positive, help="population size")
    simulate.add_argument("--trials", type=_positive, default=1)
    simulate.add_argument(
        "--scheduler",
        choices=[s.value for s in SchedulerKind],
        default=SchedulerKind.BST_ONLY.value,
    )
    simulate.add_argument(
        "--init",
        default=InitPolicy.ALL_ZERO.value,
        help="zeros | ones | random | worst | vector=v0,v1,...",
    )
    simulate.add_argument("--seed", type=_seed, default=0)
    simulate.add_argument("--format", choices=["csv", "json"], default="csv")
    simulate.add_argument(
        "--max-interactions",
        type=_positive,
        default=None,
        help="truncate each trial after this many interactions",
    )
    simulate.add_argument(
        "--p",
        type=_positive,
        default=None,
        help="name-space bound of the naming protocol (default n + 1)",
    )
    simulate.set_defaults(handler=cmd_simulate)

    oracle_cmd = commands.add_parser("oracle", help="print one exact reference value")
    oracle_cmd.add_argument(
        "--which",
        required=True,
        choices=[
            "flip-closed",
            "flip-recurrence",
            "gros-term",
            "gros-length",
            "harmonic",
            "timeopt-exact",
        ],
    )
    oracle_cmd.add_argument("--n", type=_positive, default=None)
    oracle_cmd.add_argument("--k", type=_positive, default=None)
    oracle_cmd.set_defaults(handler=cmd_oracle)

    verify = commands.add_parser("verify", help="run the acceptance checks")
    verify.add_argument("--level", choices=sorted(acceptance.PARAMS), default="fast")
    verify.add_argument("--seed", type=_seed, default=42)
    verify.set_defaults(handler=cmd_verify)

    return parser


def _parse_init(text: str) -> tuple[InitPolicy, tuple[int, ...] | None]:
    if text.startswith("vector="):
        body = text[len("vector=") :]
        try:
            vector = tuple(int(part) for part in body.split(","))
        except ValueError:
            raise ValueError(f"cannot parse vector {body!r}")
        return InitPolicy.EXPLICIT_VECTOR, vector
    for policy in InitPolicy:
        if policy.value == text and policy is not InitPolicy.EXPLICIT_VECTOR:
            return policy, None
    raise ValueError(f"unknown init {text!r}")


def _echo_command(args) -> str:
    parts = [
        "simulate",
        f"--protocol {args.protocol}",
        f"--n {args.n}",
        f"--trials {args.trials}",
        f"--scheduler {args.scheduler}",
        f"--init {args.init}",
        f"--seed {args.seed}",
        f"--format {args.format}",
    ]
    if args.max_interactions is not None:
        parts.append(f"--max-interactions {args.max_interactions}")
    if args.p is not None:
        parts.append(f"--p {args.p}")
    return " ".join(parts)


def _oracle_reference(spec: TrialBatchSpec) -> str:
    """The exact value the batch's mean is naturally compared against."""
    if spec.protocol is ProtocolId.FLIP:
        return str(oracle.flip_expected_closed_form(spec.n))
    if spec.protocol is ProtocolId.TIME_OPT:
        if spec.n <= oracle.EXACT_TIMEOPT_MAX_N:
            return str(oracle.timeopt_exact_expected(spec.n))
        return ""
    # Worst-case non-null transitions of the naming protocol under an
    # adversarial weakly fair scheduler.
    return str(3 * 2 ** (spec.n - 1) - 2)


_ROW_FIELDS = (
    "schema_version",
    "command",
    "protocol",
    "n",
    "p",
    "trials",
    "scheduler",
    "init",
    "seed",
    "rng",
    "max_interactions",
    "converged_trials",
    "truncated_trials",
    "bst_mean",
    "bst_stddev",
    "bst_se",
    "bst_min",
    "bst_max",
    "total_mean",
    "total_stddev",
    "total_se",
    "total_min",
    "total_max",
    "nonnull_mean",
    "nonnull_stddev",
    "nonnull_se",
    "nonnull_min",
    "nonnull_max",
    "oracle_value",
)


def _summary_row(args, spec: TrialBatchSpec, summary) -> dict:
    row = {
        "schema_version": SCHEMA_VERSION,
        "command": _echo_command(args),
        "protocol": spec.protocol.value,
        "n": spec.n,
        "p": spec.resolved_bound if spec.protocol is ProtocolId.GROS_NAMING else "",
        "trials": spec.trials,
        "scheduler": spec.scheduler.value,
        "init": args.init,
        "seed": spec.seed,
        "rng": RNG_ALGORITHM,
        "max_interactions": args.max_interactions if args.max_interactions else "",
        "converged_trials": summary.trials,
        "truncated_trials": summary.truncated,
        "oracle_value": _oracle_reference(spec),
    }
    for prefix, stats in (
        ("bst", summary.bst_interactions),
        ("total", summary.total_interactions),
        ("nonnull", summary.non_null_transitions),
    ):
        row[f"{prefix}_mean"] = repr(stats.mean)
        row[f"{prefix}_stddev"] = repr(stats.stddev)
        row[f"{prefix}_se"] = repr(stats.standard_error)
        row[f"{prefix}_min"] = stats.min
        row[f"{prefix}_max"] = stats.max
    return row


def cmd_simulate(args) -> int:
    try:
        init, vector = _parse_init(args.init)
        spec = TrialBatchSpec(
            protocol=ProtocolId(args.protocol),
            n=args.n,
            trials=args.trials,
            scheduler=SchedulerKind(args.scheduler),
            init=init,
            seed=args.seed,
            vector=vector,
            bound=args.p,
            stop=(
                StopCondition(StopKind.COUNT_REACHES_N, args.max_interactions)
                if args.max_interactions is not None
                and ProtocolId(args.protocol) is not ProtocolId.GROS_NAMING
                else StopCondition(StopKind.SILENCE, args.max_interactions)
                if args.max_interactions is not None
                else None
            ),
        )
    except ValueError as exc:
        print(f"popcountlab simulate: error: {exc}", file=sys.stderr)
        return 1

    try:
        result = run_batch(spec)
    except AllTrialsTruncated as exc:
        print(f"popcountlab simulate: {exc}", file=sys.stderr)
        return 2
    except (NameOverflow, ValueError) as exc:
        print(f"popcountlab simulate: error: {exc}", file=sys.stderr)
        return 1

    row = _summary_row(args, spec, result.summary)
    if args.format == "json":
        # an array of rows, mirroring the CSV: one element per batch
        sys.stdout.write(json.dumps([row], indent=2) + "\n")
    else:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=_ROW_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
        sys.stdout.write(buffer.getvalue())
    return 0


def format_exact(value) -> str:
    """Integers print bare; other rationals as p/q ~= 20 significant digits."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    with localcontext() as ctx:
        ctx.prec = 20
        approx = Decimal(value.numerator) / Decimal(value.denominator)
    return f"{value.numerator}/{value.denominator} ~= {approx}"


def cmd_oracle(args) -> int:
    which = args.which
    needs_k = which == "gros-term"
    if needs_k and args.k is None:
        print("popcountlab oracle: error: --k is required for gros-term", file=sys.stderr)
        return 1
    if not needs_k and args.n is None:
        print(f"popcountlab oracle: error: --n is required for {which}", file=sys.stderr)
        return 1
    try:
        if which == "flip-closed":
            value = oracle.flip_expected_closed_form(args.n)
        elif which == "flip-recurrence":
            value = oracle.flip_expected_recurrence(args.n)
        elif which == "gros-term":
            value = oracle.gros_term(args.k)
        elif which == "gros-length":
            value = oracle.gros_length(args.n)
        elif which == "harmonic":
            value = oracle.harmonic_bound(args.n)
        else:
            value = oracle.timeopt_exact_expected(args.n)
    except (ValueError, oracle.Intractable) as exc:
        print(f"popcountlab oracle: error: {exc}", file=sys.stderr)
        return 1
    print(format_exact(value))
    return 0


def cmd_verify(args) -> int:
    results = acceptance.run_all(args.level, args.seed)
    sys.stdout.write(acceptance.format_report(results, args.level, args.seed))
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
