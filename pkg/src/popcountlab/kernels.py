"""Tight per-protocol simulation loops used by the batch harness.

Each kernel consumes random doubles in exactly the order documented by the
matching scheduler (batched draws from a numpy Generator yield the same
stream as repeated single draws), so a kernel run and an engine run seeded
identically produce identical RunRecords.  That equivalence is pinned down
in the tests; the engine stays the reference semantics.

The uniform-pair kernels classify whole buffers of pair draws with numpy
and only step through base-station events in Python: mobile/mobile pairs
cannot change a bit configuration, they just advance the interaction count.

All kernels take the limits produced by engine.resolve_limits and halt at
their protocol's convergence predicate.
"""

import heapq
from math import log

import numpy as np

from .engine import InvariantViolation, RunRecord
from .protocols import NameOverflow


def _batch_size(limit: int) -> int:
    """Buffer length for pre-drawn doubles, small when runs are short."""
    if limit >= 1 << 17:
        return 4096
    return max(32, int(limit) >> 5)


def simulate_flip_bst(n, marks, rng, metric_budget, total_cap, check=True):
    """Flip protocol under base-station-only scheduling (1 double/step)."""
    marks = list(marks)
    ones = sum(marks)
    limit = min(metric_budget, total_cap)
    c0 = c1 = c = 0
    total = 0
    conv = None
    all_zero_seen = ones == 0
    all_one_seen = ones == n
    size = _batch_size(limit)
    buf: list[int] = []
    pos = 0
    random = rng.random
    while total < limit:
        if pos == len(buf):
            buf = (random(size) * n).astype(np.int64).tolist()
            pos = 0
        i = buf[pos]
        pos += 1
        total += 1
        if marks[i]:
            if c1:
                c1 -= 1
            marks[i] = 0
            c0 += 1
            ones -= 1
        else:
            if c0:
                c0 -= 1
            marks[i] = 1
            c1 += 1
            ones += 1
        new_c = c0 + c1
        if check and (new_c < c or new_c > n or c1 > ones or c0 > n - ones):
            raise InvariantViolation(
                f"flip counters c0={c0} c1={c1} invalid with {ones}/{n} ones"
            )
        c = new_c
        if c == n:
            if check:
                opposite_seen = all_zero_seen if ones == n else all_one_seen
                if ones not in (0, n) or not opposite_seen:
                    raise InvariantViolation(
                        "flip converged without the all-same/all-opposite "
                        f"structure: {ones}/{n} ones"
                    )
            conv = total
            break
        if ones == 0:
            all_zero_seen = True
        elif ones == n:
            all_one_seen = True
    return RunRecord(
        total_interactions=total,
        bst_interactions=total,
        non_null_transitions=total,
        converged_at_bst_interaction=conv,
        converged_at_non_null=conv,
        final_c=c,
    )


def simulate_timeopt_bst(n, marks, rng, metric_budget, total_cap, check=True):
    """Phased protocol under base-station-only scheduling (1 double/step)."""
    marks = list(marks)
    ones = sum(marks)
    limit = min(metric_budget, total_cap)
    c0 = c1 = c = cnt = phase = 0
    total = non_null = flips = 0
    conv = None
    conv_nn = None
    size = _batch_size(limit)
    buf: list[int] = []
    pos = 0
    random = rng.random
    while total < limit:
        if pos == len(buf):
            buf = (random(size) * n).astype(np.int64).tolist()
            pos = 0
        i = buf[pos]
        pos += 1
        total += 1
        mark = marks[i]
        if mark == phase:
            cnt = 0
            if mark:
                if c1:
                    c1 -= 1
                marks[i] = 0
                c0 += 1
                ones -= 1
            else:
                if c0:
                    c0 -= 1
                marks[i] = 1
                c1 += 1
                ones += 1
            non_null += 1
            new_c = c0 + c1
            if check and (new_c < c or new_c > n or c1 > ones or c0 > n - ones):
                raise InvariantViolation(
                    f"counters c0={c0} c1={c1} invalid with {ones}/{n} ones"
                )
            c = new_c
            if c == n:
                conv, conv_nn = total, non_null
                break
        else:
            converted = c1 if phase == 0 else c0
            remaining = c0 if phase == 0 else c1
            threshold = 6.0 if converted < 2 else 6.0 * (converted * log(converted) + 1.0)
            if cnt >= threshold:
                if check and remaining != 0:
                    raise InvariantViolation(
                        f"phase flipped with {remaining} unconverted credits"
                    )
                cnt = 0
                phase = 1 - phase
                flips += 1
                non_null += 1
            elif remaining == 0:
                cnt += 1
                non_null += 1
    return RunRecord(
        total_interactions=total,
        bst_interactions=total,
        non_null_transitions=non_null,
        converged_at_bst_interaction=conv,
        converged_at_non_null=conv_nn,
        final_c=c,
        phase_flips=flips,
    )


def _uniform_pair_events(rng, size, n):
    """Draw `size` uniform pairs (two doubles each, in scheduler order) and
    return the positions of base-station events and their mobile indices."""
    buf = rng.random(2 * size)
    first = (buf[0::2] * (n + 1)).astype(np.int64)
    second = (buf[1::2] * n).astype(np.int64)
    second += second >= first
    events = np.flatnonzero((first == n) | (second == n))
    mobiles = np.where(first[events] == n, second[events], first[events])
    return events.tolist(), mobiles.tolist()


def simulate_flip_uniform(n, marks, rng, metric_budget, total_cap, check=True):
    """Flip protocol under uniform-pair scheduling (2 doubles/step)."""
    marks = list(marks)
    ones = sum(marks)
    c0 = c1 = c = 0
    total = bst_count = 0
    conv = None
    all_zero_seen = ones == 0
    all_one_seen = ones == n
    size = 4096
    done = False
    while not done:
        events, mobiles = _uniform_pair_events(rng, size, n)
        base = total
        for idx, i in zip(events, mobiles):
            step = base + idx + 1
            if step > total_cap:
                total = total_cap
                done = True
                break
            total = step
            bst_count += 1
            if marks[i]:
                if c1:
                    c1 -= 1
                marks[i] = 0
                c0 += 1
                ones -= 1
            else:
                if c0:
                    c0 -= 1
                marks[i] = 1
                c1 += 1
                ones += 1
            new_c = c0 + c1
            if check and (new_c < c or new_c > n or c1 > ones or c0 > n - ones):
                raise InvariantViolation(
                    f"flip counters c0={c0} c1={c1} invalid with {ones}/{n} ones"
                )
            c = new_c
            if c == n:
                if check:
                    opposite_seen = all_zero_seen if ones == n else all_one_seen
                    if ones not in (0, n) or not opposite_seen:
                        raise InvariantViolation(
                            "flip converged without the all-same/all-opposite "
                            f"structure: {ones}/{n} ones"
                        )
                conv = bst_count
                done = True
                break
            if ones == 0:
                all_zero_seen = True
            elif ones == n:
                all_one_seen = True
            if bst_count >= metric_budget:
                done = True
                break
        else:
            total = min(base + size, total_cap)
            done = total >= total_cap
    return RunRecord(
        total_interactions=total,
        bst_interactions=bst_count,
        non_null_transitions=bst_count,
        converged_at_bst_interaction=conv,
        converged_at_non_null=conv,
        final_c=c,
    )


def simulate_timeopt_uniform(n, marks, rng, metric_budget, total_cap, check=True):
    """Phased protocol under uniform-pair scheduling (2 doubles/step)."""
    marks = list(marks)
    ones = sum(marks)
    c0 = c1 = c = cnt = phase = 0
    total = bst_count = non_null = flips = 0
    conv = None
    conv_nn = None
    size = 4096
    done = False
    while not done:
        events, mobiles = _uniform_pair_events(rng, size, n)
        base = total
        for idx, i in zip(events, mobiles):
            step = base + idx + 1
            if step > total_cap:
                total = total_cap
                done = True
                break
            total = step
            bst_count += 1
            mark = marks[i]
            if mark == phase:
                cnt = 0
                if mark:
                    if c1:
                        c1 -= 1
                    marks[i] = 0
                    c0 += 1
                    ones -= 1
                else:
                    if c0:
                        c0 -= 1
                    marks[i] = 1
                    c1 += 1
                    ones += 1
                non_null += 1
                new_c = c0 + c1
                if check and (new_c < c or new_c > n or c1 > ones or c0 > n - ones):
                    raise InvariantViolation(
                        f"counters c0={c0} c1={c1} invalid with {ones}/{n} ones"
                    )
                c = new_c
                if c == n:
                    conv, conv_nn = bst_count, non_null
                    done = True
                    break
            else:
                converted = c1 if phase == 0 else c0
                remaining = c0 if phase == 0 else c1
                threshold = (
                    6.0 if converted < 2 else 6.0 * (converted * log(converted) + 1.0)
                )
                if cnt >= threshold:
                    if check and remaining != 0:
                        raise InvariantViolation(
                            f"phase flipped with {remaining} unconverted credits"
                        )
                    cnt = 0
                    phase = 1 - phase
                    flips += 1
                    non_null += 1
                elif remaining == 0:
                    cnt += 1
                    non_null += 1
            if bst_count >= metric_budget:
                done = True
                break
        else:
            total = min(base + size, total_cap)
            done = total >= total_cap
    return RunRecord(
        total_interactions=total,
        bst_interactions=bst_count,
        non_null_transitions=non_null,
        converged_at_bst_interaction=conv,
        converged_at_non_null=conv_nn,
        final_c=c,
        phase_flips=flips,
    )


def simulate_gros_adversarial(names, bound, metric_budget, total_cap, check=True):
    """Naming protocol under the deterministic adversarial schedule.

    Serves the lowest-indexed sink agent to the base station, else collides
    the lowest-indexed homonym pair, and stops at silence.  Returns the run
    record and the final name vector.
    """
    names = list(names)
    n = len(names)
    zeros = [i for i, v in enumerate(names) if v == 0]
    heapq.heapify(zeros)
    counts = [0] * bound
    for v in names:
        if v:
            counts[v] += 1
    dups = {v for v in range(1, bound) if counts[v] >= 2}
    k = 1
    total = bst_count = non_null = 0
    conv_bst = conv_nn = None
    while True:
        if not zeros and not dups:
            conv_bst, conv_nn = bst_count, non_null
            break
        if non_null >= metric_budget or total >= total_cap:
            break
        if zeros:
            i = heapq.heappop(zeros)
            term = (k & -k).bit_length()
            if term > bound - 1:
                raise NameOverflow(
                    f"naming term {term} at index {k} does not fit below bound {bound}"
                )
            k += 1
            names[i] = term
            counts[term] += 1
            if counts[term] >= 2:
                dups.add(term)
            total += 1
            bst_count += 1
            non_null += 1
        else:
            name = None
            for i, v in enumerate(names):
                if v in dups:
                    name = v
                    break
            j = next(m for m in range(i + 1, n) if names[m] == name)
            names[i] = names[j] = 0
            counts[name] -= 2
            if counts[name] < 2:
                dups.discard(name)
            heapq.heappush(zeros, i)
            heapq.heappush(zeros, j)
            total += 1
            non_null += 1
    distinct = len({v for v in names if v})
    if check and conv_bst is not None and (distinct != n or 0 in names):
        raise InvariantViolation(
            f"silent run left names {names} (want {n} distinct non-sink)"
        )
    record = RunRecord(
        total_interactions=total,
        bst_interactions=bst_count,
        non_null_transitions=non_null,
        converged_at_bst_interaction=conv_bst,
        converged_at_non_null=conv_nn,
        final_c=distinct,
    )
    return record, names


def simulate_timeopt_first_phase(n, rng, safety_cap=None, check=True):
    """Run the phased protocol's first phase from an all-zero population
    until the phase flips; True iff every agent was converted by then."""
    if safety_cap is None:
        safety_cap = 1 << 24 if n < 1024 else 1 << 40
    ones = 0
    c1 = cnt = 0
    total = 0
    size = min(4096, max(32, 8 * n))
    buf: list[int] = []
    pos = 0
    random = rng.random
    while total < safety_cap:
        if pos == len(buf):
            # the drawn index only matters through its mark: the `ones`
            # converted agents can be taken to be indices 0..ones-1
            buf = (random(size) * n).astype(np.int64).tolist()
            pos = 0
        i = buf[pos]
        pos += 1
        total += 1
        if i < ones:
            threshold = 6.0 if c1 < 2 else 6.0 * (c1 * log(c1) + 1.0)
            if cnt >= threshold:
                return ones == n
            cnt += 1  # no unconverted credit exists in the first phase
        else:
            cnt = 0
            c1 += 1
            ones += 1
            if check and (ones > n or c1 != ones):
                raise InvariantViolation(
                    f"first phase counted {c1} conversions over {ones}/{n} ones"
                )
    raise RuntimeError(f"first phase still running after {safety_cap} meetings")
