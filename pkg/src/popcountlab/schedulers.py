"""Interaction-pair selection under each fairness regime.

Seeded schedulers draw from a numpy PCG64 generator and document exactly how
many doubles each draw consumes, so the batch kernels can reproduce their
streams without going through the engine.  The deterministic schedulers keep
only an internal cursor.
"""

from enum import Enum, unique

import numpy as np

from .engine import BST, Configuration, StateTag
from .protocols import SINK_NAME

# Identifier of the random stream: numpy's PCG64 behind default_rng.
RNG_ALGORITHM = "numpy-pcg64"


class IncompatibleProtocol(ValueError):
    """The scheduler cannot serve configurations of this protocol."""


@unique
class SchedulerKind(Enum):
    """Built-in schedulers, keyed by their CLI names."""

    UNIFORM_PAIR = "uniform"
    BST_ONLY = "bst"
    ROUND_ROBIN = "roundrobin"
    WEAK_ADVERSARIAL = "adversarial"


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class Scheduler:
    """Base interface: next_pair(config) -> (a, b) with the base station
    first in its pairs and mobile pairs in ascending index order."""

    kind: SchedulerKind

    def next_pair(self, config: Configuration) -> tuple[int, int]:
        raise NotImplementedError


class BstOnlyScheduler(Scheduler):
    """Every interaction involves the base station; the mobile is uniform.

    Consumes one double u per draw: index = floor(u * n).
    """

    kind = SchedulerKind.BST_ONLY

    def __init__(self, seed=0):
        self.seed = seed
        self.rng = _as_generator(seed)

    def next_pair(self, config: Configuration) -> tuple[int, int]:
        return (BST, int(self.rng.random() * config.n))


class UniformPairScheduler(Scheduler):
    """Uniform over all C(n+1, 2) unordered pairs among the n mobiles plus
    the base station.

    Consumes two doubles per draw: the first picks one participant among
    n + 1 (index n encodes the base station), the second one of the
    remaining n, skipping the first pick.
    """

    kind = SchedulerKind.UNIFORM_PAIR

    def __init__(self, seed=0):
        self.seed = seed
        self.rng = _as_generator(seed)

    def next_pair(self, config: Configuration) -> tuple[int, int]:
        n = config.n
        first = int(self.rng.random() * (n + 1))
        second = int(self.rng.random() * n)
        if second >= first:
            second += 1
        if first == n:
            return (BST, second)
        if second == n:
            return (BST, first)
        return (first, second) if first < second else (second, first)


class RoundRobinScheduler(Scheduler):
    """Cycles through all pairs in a fixed order, a weak-fairness witness:
    any window of C(n+1, 2) consecutive draws contains every pair once."""

    kind = SchedulerKind.ROUND_ROBIN

    def __init__(self):
        self._pairs: list[tuple[int, int]] = []
        self._n = 0
        self._cursor = 0

    def next_pair(self, config: Configuration) -> tuple[int, int]:
        if config.n != self._n:
            n = self._n = config.n
            self._pairs = [(BST, i) for i in range(n)] + [
                (i, j) for i in range(n) for j in range(i + 1, n)
            ]
            self._cursor = 0
        pair = self._pairs[self._cursor]
        self._cursor = (self._cursor + 1) % len(self._pairs)
        return pair


class WeakAdversarialScheduler(Scheduler):
    """The schedule behind the naming protocol's exponential lower bound.

    Deterministic and weakly fair: it serves the lowest-indexed sink agent
    to the base station first; failing that it collides the lowest-indexed
    homonym pair; once the configuration is silent it keeps emitting
    (BST, 0), which stays null.  Only meaningful for name configurations.
    """

    kind = SchedulerKind.WEAK_ADVERSARIAL

    def next_pair(self, config: Configuration) -> tuple[int, int]:
        if config.tag is not StateTag.NAME:
            raise IncompatibleProtocol(
                "the adversarial scheduler only serves the naming protocol"
            )
        names = config.mobiles
        for i, name in enumerate(names):
            if name == SINK_NAME:
                return (BST, i)
        counts: dict[int, int] = {}
        for name in names:
            counts[name] = counts.get(name, 0) + 1
        for i, name in enumerate(names):
            if counts[name] >= 2:
                j = next(k for k in range(i + 1, config.n) if names[k] == name)
                return (i, j)
        return (BST, 0)


def make_scheduler(kind: SchedulerKind, seed=0) -> Scheduler:
    """Build a scheduler; `seed` is ignored by the deterministic ones."""
    if kind is SchedulerKind.UNIFORM_PAIR:
        return UniformPairScheduler(seed)
    if kind is SchedulerKind.BST_ONLY:
        return BstOnlyScheduler(seed)
    if kind is SchedulerKind.ROUND_ROBIN:
        return RoundRobinScheduler()
    return WeakAdversarialScheduler()
