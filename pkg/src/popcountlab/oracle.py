"""Exact reference values the simulations are checked against.

Everything here is computed in exact rational arithmetic (stdlib Fraction);
floats appear only when callers convert for reporting.  Where a value has a
closed form, an independent route to the same number is also provided (a
solved recurrence, a brute-force expansion, a linear-system solve) so tests
can compare the two without trusting either side.
"""

from collections import deque
from fractions import Fraction
from math import comb

from .protocols import TimeOptBst, gros_term, timeopt_step

__all__ = [
    "ExactRational",
    "Intractable",
    "flip_expected_closed_form",
    "flip_expected_recurrence",
    "flip_hitting_times",
    "gros_term",
    "gros_sequence",
    "gros_length",
    "harmonic_bound",
    "timeopt_exact_expected",
]

# Rational with exact arithmetic, normalized lowest terms, positive
# denominator.  Fraction already guarantees all of that.
ExactRational = Fraction

# Largest population for which the exact phased-protocol expectation is
# solved; beyond this the lumped chain grows too fast to be worth it.
EXACT_TIMEOPT_MAX_N = 4

# gros_sequence materializes 2^m - 1 terms; keep it to list sizes that are
# obviously fine in memory.
_MAX_SEQUENCE_DEPTH = 22


class Intractable(ValueError):
    """The requested exact computation is out of the supported range."""


def flip_expected_closed_form(n: int) -> Fraction:
    """Expected base-station interactions for the flip protocol to turn an
    all-same-mark population of n agents into the all-opposite one:

        2^(n-1) * sum_{k=0}^{n-1} 1 / C(n-1, k)
    """
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    return Fraction(2) ** (n - 1) * sum(
        Fraction(1, comb(n - 1, k)) for k in range(n)
    )


def flip_hitting_times(n: int) -> list[Fraction]:
    """Exact hitting times t_0..t_n of the mark-flipping walk on {0, .., n}.

    t_k is the expected number of steps to reach n when k agents carry the
    new mark, each step flipping a uniformly random agent except that state
    n-1 is entered from n deterministically:

        t_0 = 0
        t_k = 1 + (k/n) t_{k-1} + ((n-k)/n) t_{k+1}    (1 <= k <= n-1)
        t_n = 1 + t_{n-1}

    Solved by forward elimination of the tridiagonal system, independently
    of the closed form.
    """
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    # Express t_k = alpha_k + beta_k * t_{k+1} and sweep upward.
    alpha = [Fraction(0)] * n
    beta = [Fraction(0)] * n
    for k in range(1, n):
        down = Fraction(k, n)
        up = Fraction(n - k, n)
        denom = 1 - down * beta[k - 1]
        alpha[k] = (1 + down * alpha[k - 1]) / denom
        beta[k] = up / denom
    times = [Fraction(0)] * (n + 1)
    times[n] = (1 + alpha[n - 1]) / (1 - beta[n - 1])
    for k in range(n - 1, -1, -1):
        times[k] = alpha[k] + beta[k] * times[k + 1]
    return times


def flip_expected_recurrence(n: int) -> Fraction:
    """The flip expectation from the solved recurrence; must equal the
    closed form for every n."""
    return flip_hitting_times(n)[n]


def gros_sequence(depth: int) -> list[int]:
    """Brute-force expansion of the naming sequence.

    U_1 = (1) and U_m = U_{m-1}, m, U_{m-1}; the expansion is the
    independent check for the closed-form gros_term.
    """
    if depth < 1:
        raise ValueError(f"expansion depth must be >= 1, got {depth}")
    if depth > _MAX_SEQUENCE_DEPTH:
        raise Intractable(
            f"expansion of depth {depth} has {2 ** depth - 1} terms"
        )
    seq: list[int] = []
    for m in range(1, depth + 1):
        seq = seq + [m] + seq
    return seq


def gros_length(depth: int) -> int:
    """Number of terms of the depth-m naming sequence: 2^m - 1."""
    if depth < 1:
        raise ValueError(f"expansion depth must be >= 1, got {depth}")
    return 2 ** depth - 1


def harmonic_bound(n: int) -> Fraction:
    """n * H_n, the floor on expected interactions for any counting protocol
    in which the base station must meet every agent at least once."""
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    return n * sum(Fraction(1, l) for l in range(1, n + 1))


def timeopt_exact_expected(n: int, initial_ones: int | None = None) -> Fraction:
    """Exact expected base-station interactions for the phased protocol to
    reach estimate c = n, under uniform agent choice per interaction.

    Starts from zeroed counters in phase 0.  With initial_ones=None the
    initial marks are independent fair bits and the result averages the
    2^n mark vectors with binomial weights; otherwise it conditions on the
    given number of mark-1 agents.

    The interaction sequence only depends on the drawn agent's mark, so the
    chain is lumped to (ones, c0, c1, cnt, phase) and solved exactly by
    state elimination.  Only n <= EXACT_TIMEOPT_MAX_N is supported; the
    lumped space grows too quickly after that.
    """
    if not 1 <= n <= EXACT_TIMEOPT_MAX_N:
        raise Intractable(
            f"exact solve supports 1 <= n <= {EXACT_TIMEOPT_MAX_N}, got {n}"
        )
    if initial_ones is None:
        weights = {
            (k, 0, 0, 0, 0): Fraction(comb(n, k), 2 ** n) for k in range(n + 1)
        }
    else:
        if not 0 <= initial_ones <= n:
            raise ValueError(f"initial_ones must be in [0, {n}]")
        weights = {(initial_ones, 0, 0, 0, 0): Fraction(1)}
    return _expected_absorption_steps(n, weights)


def _lumped_successors(n, state):
    """Transitions of the lumped chain: draw a mark-1 agent with probability
    ones/n, a mark-0 agent otherwise, and apply the base-station rule."""
    ones, c0, c1, cnt, phase = state
    bst = TimeOptBst(c0=c0, c1=c1, c=c0 + c1, cnt=cnt, phase=phase)
    out = []
    for mark, count in ((1, ones), (0, n - ones)):
        if count == 0:
            continue
        nxt, new_mark = timeopt_step(bst, mark)
        succ = (ones - mark + new_mark, nxt.c0, nxt.c1, nxt.cnt, nxt.phase)
        out.append((Fraction(count, n), succ))
    return out


def _expected_absorption_steps(n, start_weights):
    """Expected steps to absorption (c reaches n) from a weighted mixture of
    start states, by exact state elimination.

    Every transient state costs one step; transitions into absorbing states
    are dropped since the remaining expectation there is zero.  cnt is
    intrinsically bounded (it only grows while below the current phase
    threshold), so the reachable transient set is finite without any cap.
    """
    absorbed = lambda s: s[1] + s[2] >= n

    trans: dict = {}
    queue = deque(s for s in start_weights if not absorbed(s))
    seen = set(queue)
    while queue:
        state = queue.popleft()
        row: dict = {}
        for prob, succ in _lumped_successors(n, state):
            if absorbed(succ):
                continue
            row[succ] = row.get(succ, Fraction(0)) + prob
            if succ not in seen:
                seen.add(succ)
                queue.append(succ)
        trans[state] = row

    start = object()  # virtual source, eliminated last
    trans[start] = {s: w for s, w in start_weights.items() if not absorbed(s)}
    cost = {s: Fraction(1) for s in trans}
    cost[start] = Fraction(0)

    preds: dict = {s: set() for s in trans}
    for state, row in trans.items():
        for succ in row:
            preds[succ].add(state)

    # Eliminate transient states one at a time, cheapest fill-in first.
    remaining = set(trans) - {start}
    while remaining:
        state = min(
            remaining, key=lambda s: len(preds[s]) * len(trans[s])
        )
        remaining.discard(state)
        row = trans.pop(state)
        self_prob = row.pop(state, None)
        if self_prob is not None:
            preds[state].discard(state)
            scale = 1 / (1 - self_prob)
            cost[state] *= scale
            row = {succ: prob * scale for succ, prob in row.items()}
        for succ in row:
            preds[succ].discard(state)
        for pred in preds.pop(state):
            weight = trans[pred].pop(state)
            cost[pred] += weight * cost[state]
            pred_row = trans[pred]
            for succ, prob in row.items():
                pred_row[succ] = pred_row.get(succ, Fraction(0)) + weight * prob
                preds[succ].add(pred)

    assert not trans[start], "elimination left unresolved successors"
    return cost[start]
