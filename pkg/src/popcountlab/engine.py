"""Deterministic interaction engine.

Applies single protocol transitions to scheduler-chosen pairs, tracks run
metrics, and drives executions to a stopping condition.  This is the
reference implementation: it favours clarity over speed, and the batch
kernels are tested against it step for step.
"""

import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum, unique

from . import protocols
from .protocols import FlipBst, GrosBst, ProtocolId, TimeOptBst

# Identifier of the base station inside an interaction pair.  Mobile agents
# are addressed by their index in Configuration.mobiles.
BST = -1

BstState = FlipBst | TimeOptBst | GrosBst


class InvalidPair(ValueError):
    """The pair does not address two distinct participants of the run."""


class TagMismatch(TypeError):
    """Protocol and configuration disagree on the mobile state space."""


class InvariantViolation(RuntimeError):
    """A run produced a state forbidden by the protocol's invariants."""


@unique
class StateTag(Enum):
    """Which state space the mobiles of a configuration live in."""

    BIT = "bit"
    NAME = "name"


_PROTOCOL_TAG = {
    ProtocolId.TIME_OPT: StateTag.BIT,
    ProtocolId.FLIP: StateTag.BIT,
    ProtocolId.GROS_NAMING: StateTag.NAME,
}

_BST_TYPE = {
    ProtocolId.TIME_OPT: TimeOptBst,
    ProtocolId.FLIP: FlipBst,
    ProtocolId.GROS_NAMING: GrosBst,
}


@dataclass(frozen=True)
class MobileState:
    """A single anonymous agent's state: a mark bit or a name."""

    tag: StateTag
    value: int

    def __post_init__(self):
        if self.tag is StateTag.BIT and self.value not in (0, 1):
            raise ValueError(f"mark must be 0 or 1, got {self.value}")
        if self.tag is StateTag.NAME and self.value < 0:
            raise ValueError(f"name must be >= 0, got {self.value}")


@dataclass(frozen=True)
class Configuration:
    """One global state: the base station plus n >= 1 mobile agents.

    Mobiles are stored as raw ints (marks or names per `tag`); they are
    anonymous, the index only serves scheduling.
    """

    bst: BstState
    tag: StateTag
    mobiles: tuple[int, ...]

    def __post_init__(self):
        if len(self.mobiles) < 1:
            raise ValueError("a configuration needs at least one mobile agent")
        if self.tag is StateTag.BIT:
            if not all(value in (0, 1) for value in self.mobiles):
                raise ValueError("marks must all be 0 or 1")
        else:
            bound = self.bst.bound if isinstance(self.bst, GrosBst) else None
            for value in self.mobiles:
                if value < 0 or (bound is not None and value >= bound):
                    raise ValueError(
                        f"name {value} outside [0, {bound}) state space"
                    )

    @property
    def n(self) -> int:
        return len(self.mobiles)

    def mobile_states(self) -> tuple[MobileState, ...]:
        return tuple(MobileState(self.tag, value) for value in self.mobiles)


def initial_configuration(
    protocol: ProtocolId, mobiles, bound: int | None = None
) -> Configuration:
    """Fresh-start configuration: zeroed counters, phase 0, next name index 1.

    `bound` sizes the naming protocol's state space and defaults to n + 1,
    the smallest value that can name the whole population.
    """
    mobiles = tuple(mobiles)
    if protocol is ProtocolId.GROS_NAMING:
        if bound is None:
            bound = len(mobiles) + 1
        bst: BstState = GrosBst(k=1, bound=bound)
    elif protocol is ProtocolId.FLIP:
        bst = FlipBst()
    else:
        bst = TimeOptBst()
    return Configuration(bst=bst, tag=_PROTOCOL_TAG[protocol], mobiles=mobiles)


def _check_pair(config: Configuration, pair) -> tuple[int, int]:
    try:
        a, b = pair
    except (TypeError, ValueError):
        raise InvalidPair(f"pair must have two participants, got {pair!r}")
    n = config.n
    if b == BST:
        raise InvalidPair("the base station must be the first participant")
    if not 0 <= b < n:
        raise InvalidPair(f"mobile index {b} out of range for n={n}")
    if a == BST:
        return a, b
    if not 0 <= a < n:
        raise InvalidPair(f"mobile index {a} out of range for n={n}")
    if a == b:
        raise InvalidPair(f"an agent cannot interact with itself (index {a})")
    return a, b


def _check_tag(protocol: ProtocolId, config: Configuration) -> None:
    if config.tag is not _PROTOCOL_TAG[protocol] or not isinstance(
        config.bst, _BST_TYPE[protocol]
    ):
        raise TagMismatch(
            f"{protocol.value} cannot run on a {config.tag.value} configuration "
            f"with {type(config.bst).__name__} base station"
        )


def apply_interaction(
    protocol: ProtocolId, config: Configuration, pair
) -> tuple[Configuration, bool, bool]:
    """Apply one interaction; returns (successor, was_non_null, involved_bst).

    The input configuration is never modified.  Pairs with no explicit rule
    leave the configuration unchanged and count as null.  The base station
    must be the first participant of its pairs; mobile/mobile pairs may come
    in either order since those rules are symmetric.
    """
    _check_tag(protocol, config)
    a, b = _check_pair(config, pair)
    mobiles = config.mobiles

    if a == BST:
        value = mobiles[b]
        if protocol is ProtocolId.FLIP:
            bst, new_value = protocols.flip_step(config.bst, value)
        elif protocol is ProtocolId.TIME_OPT:
            bst, new_value = protocols.timeopt_step(config.bst, value)
        else:
            bst, new_value = protocols.gros_bst_step(config.bst, value)
        if bst == config.bst and new_value == value:
            return config, False, True
        new_mobiles = mobiles[:b] + (new_value,) + mobiles[b + 1 :]
        return replace(config, bst=bst, mobiles=new_mobiles), True, True

    if protocol is ProtocolId.GROS_NAMING:
        s1, s2 = protocols.gros_mobile_step(mobiles[a], mobiles[b])
        if (s1, s2) == (mobiles[a], mobiles[b]):
            return config, False, False
        items = list(mobiles)
        items[a], items[b] = s1, s2
        return replace(config, mobiles=tuple(items)), True, False

    # The bit protocols have no mobile/mobile rule.
    return config, False, False


def is_silent(protocol: ProtocolId, config: Configuration) -> bool:
    """True iff every possible pair of the configuration is null.

    Computed from the transition structure rather than by trying all O(n^2)
    pairs; the tests compare this against the brute-force definition.
    """
    _check_tag(protocol, config)
    if protocol is ProtocolId.FLIP:
        # The base station always flips the mark it meets.
        return False
    if protocol is ProtocolId.TIME_OPT:
        bst = config.bst
        marks = set(config.mobiles)
        if bst.phase in marks:
            return False  # a conversion is possible
        converted = bst.c1 if bst.phase == 0 else bst.c0
        remaining = bst.c0 if bst.phase == 0 else bst.c1
        if (1 - bst.phase) in marks:
            if bst.cnt >= protocols.phase_threshold(converted):
                return False  # a phase flip is possible
            if remaining == 0:
                return False  # the streak can still grow
        return True
    counts = Counter(config.mobiles)
    if counts[protocols.SINK_NAME] > 0:
        return False  # the base station would name a sink agent
    return all(count == 1 for count in counts.values())


@unique
class StopKind(Enum):
    COUNT_REACHES_N = "count"
    SILENCE = "silence"
    MAX_INTERACTIONS = "max-interactions"


@dataclass(frozen=True)
class StopCondition:
    """When to stop a run.

    COUNT_REACHES_N and SILENCE halt at their predicate; `bound`, when
    given, truncates at that many total interactions instead of the
    protocol's default safety budget.  MAX_INTERACTIONS runs for exactly
    `bound` interactions (then required), still recording the first time
    the protocol's natural predicate held.
    """

    kind: StopKind
    bound: int | None = None

    def __post_init__(self):
        if self.kind is StopKind.MAX_INTERACTIONS and self.bound is None:
            raise ValueError("MAX_INTERACTIONS needs a bound")
        if self.bound is not None and self.bound < 1:
            raise ValueError("bound must be positive when given")


@dataclass
class RunRecord:
    """Metrics of one run.

    The converged_at_* fields are None when the stop condition truncated the
    run before the predicate held.  final_c is the base station's population
    estimate for the bit protocols and the number of distinct non-sink names
    for the naming protocol.
    """

    total_interactions: int
    bst_interactions: int
    non_null_transitions: int
    converged_at_bst_interaction: int | None
    converged_at_non_null: int | None
    final_c: int
    phase_flips: int | None = None

    @property
    def converged(self) -> bool:
        return self.converged_at_bst_interaction is not None

    @property
    def truncated(self) -> bool:
        return not self.converged


def default_budget(protocol: ProtocolId, n: int) -> int:
    """Safety budget in the protocol's own work metric: base-station
    meetings for the bit protocols, non-null transitions for naming.

    Flip converges in about 2^n base-station meetings on average, the
    phased protocol in O(n log n), and the adversarially scheduled naming
    protocol within 2 * 2^n non-null transitions; each budget leaves more
    than an order of magnitude of headroom.
    """
    if protocol is ProtocolId.FLIP:
        return 64 * _flip_budget_scale(n)
    if protocol is ProtocolId.TIME_OPT:
        return math.ceil(64 * n * math.log(n + 1))
    return 16 * 2 ** n


def _flip_budget_scale(n: int) -> int:
    """Integer upper bound on the flip protocol's expected meetings."""
    from .oracle import flip_expected_closed_form

    if n > 64:
        # The expectation is 2^n(1 + o(1)); avoid huge exact sums.
        return 2 ** (n + 1)
    return math.ceil(flip_expected_closed_form(n))


# Stand-in for "no limit" that still allows integer comparison in loops.
UNBOUNDED = 1 << 127


def resolve_limits(
    protocol: ProtocolId, n: int, stop: StopCondition
) -> tuple[int, int, bool]:
    """Turn a stop condition into loop limits.

    Returns (metric_budget, total_cap, halt_on_predicate).  The metric
    budget counts base-station meetings for the bit protocols and non-null
    transitions for naming; the total cap counts all interactions and is
    the hard safety net against schedulers that starve the metric.
    """
    if stop.kind is StopKind.MAX_INTERACTIONS:
        return UNBOUNDED, stop.bound, False
    if stop.bound is not None:
        return UNBOUNDED, stop.bound, True
    budget = default_budget(protocol, n)
    if protocol is ProtocolId.GROS_NAMING:
        total_cap = 64 + 8 * (n + 1) ** 2 * budget
    else:
        total_cap = 64 + 8 * (n + 1) * budget
    return budget, total_cap, True


def _converged(protocol: ProtocolId, config: Configuration) -> bool:
    if protocol is ProtocolId.GROS_NAMING:
        return is_silent(protocol, config)
    return config.bst.c == config.n


def run(
    protocol: ProtocolId,
    scheduler,
    config: Configuration,
    stop: StopCondition,
    check_invariants: bool = True,
) -> tuple[Configuration, RunRecord]:
    """Drive a single run to its stopping condition.

    The scheduler picks each interaction pair; the engine applies it,
    updates metrics, optionally checks protocol invariants, and halts per
    `stop`.  Returns the final configuration and the metrics record.
    """
    _check_tag(protocol, config)
    n = config.n
    bit = _PROTOCOL_TAG[protocol] is StateTag.BIT
    metric_budget, total_cap, halt_on_predicate = resolve_limits(protocol, n, stop)

    total = bst_count = non_null = 0
    conv_bst: int | None = None
    conv_nn: int | None = None
    phase_flips = 0 if protocol is ProtocolId.TIME_OPT else None
    ones = sum(config.mobiles) if bit else 0

    if _converged(protocol, config):
        conv_bst, conv_nn = 0, 0

    while (
        total < total_cap
        and (bst_count if bit else non_null) < metric_budget
        and not (halt_on_predicate and conv_bst is not None)
    ):
        pair = scheduler.next_pair(config)
        prev_bst = config.bst
        prev_mark = config.mobiles[pair[1]] if bit and pair[0] == BST else None
        config, was_non_null, with_bst = apply_interaction(protocol, config, pair)
        total += 1
        bst_count += with_bst
        non_null += was_non_null

        if prev_mark is not None:
            ones += config.mobiles[pair[1]] - prev_mark
        if check_invariants and bit:
            bst = config.bst
            if bst.c < prev_bst.c or bst.c > n:
                raise InvariantViolation(
                    f"estimate left [{prev_bst.c}, {n}]: {bst.c} after {total}"
                )
            if bst.c1 > ones or bst.c0 > n - ones:
                raise InvariantViolation(
                    f"counters exceed mark counts: c0={bst.c0} c1={bst.c1} "
                    f"with {ones} one-marks among {n}"
                )
        if protocol is ProtocolId.TIME_OPT and config.bst.phase != prev_bst.phase:
            phase_flips += 1
            if check_invariants:
                stranded = prev_bst.c0 if prev_bst.phase == 0 else prev_bst.c1
                if stranded != 0:
                    raise InvariantViolation(
                        f"phase flipped with {stranded} unconverted credits"
                    )

        if conv_bst is None and _converged(protocol, config):
            conv_bst, conv_nn = bst_count, non_null

    if protocol is ProtocolId.GROS_NAMING:
        named = [v for v in config.mobiles if v != protocols.SINK_NAME]
        final_c = len(set(named))
        if check_invariants and conv_bst is not None and (
            len(named) != n or final_c != n
        ):
            raise InvariantViolation(
                f"silent run left names {config.mobiles} (want n={n} distinct)"
            )
    else:
        final_c = config.bst.c

    record = RunRecord(
        total_interactions=total,
        bst_interactions=bst_count,
        non_null_transitions=non_null,
        converged_at_bst_interaction=conv_bst,
        converged_at_non_null=conv_nn,
        final_c=final_c,
        phase_flips=phase_flips,
    )
    return config, record
