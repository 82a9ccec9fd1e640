"""Batch harness: kernel/engine replay equality, seeded determinism,
parallel equivalence, and the adversarial worst-case sweep."""

import math

import pytest

from popcountlab.engine import StopCondition, StopKind
from popcountlab.experiments import (
    AllTrialsTruncated,
    InitPolicy,
    TrialBatchSpec,
    derive_seed,
    estimate_allflip_probability,
    initial_mobiles,
    resolve_threads,
    run_batch,
    run_trial,
    summarize,
    sweep_n,
    sweep_worst_unnamed,
    trial_rng,
    worst_unnamed_start,
)
from popcountlab.oracle import Intractable
from popcountlab.protocols import ProtocolId
from popcountlab.schedulers import SchedulerKind

REPLAY_CASES = [
    (ProtocolId.FLIP, SchedulerKind.BST_ONLY, InitPolicy.ALL_ZERO),
    (ProtocolId.FLIP, SchedulerKind.UNIFORM_PAIR, InitPolicy.UNIFORM_RANDOM_MARKS),
    (ProtocolId.TIME_OPT, SchedulerKind.BST_ONLY, InitPolicy.UNIFORM_RANDOM_MARKS),
    (ProtocolId.TIME_OPT, SchedulerKind.UNIFORM_PAIR, InitPolicy.ALL_ZERO),
    (ProtocolId.TIME_OPT, SchedulerKind.UNIFORM_PAIR, InitPolicy.ALL_ONE),
    (ProtocolId.GROS_NAMING, SchedulerKind.WEAK_ADVERSARIAL, InitPolicy.ALL_ZERO),
    (
        ProtocolId.GROS_NAMING,
        SchedulerKind.WEAK_ADVERSARIAL,
        InitPolicy.WORST_CASE_UNNAMED,
    ),
]


class TestReplayEquality:
    @pytest.mark.parametrize("protocol,scheduler,init", REPLAY_CASES)
    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_kernel_equals_engine(self, protocol, scheduler, init, n):
        spec = TrialBatchSpec(
            protocol=protocol, n=n, trials=3, scheduler=scheduler, init=init, seed=13
        )
        for index in range(3):
            fast = run_trial(spec, index)
            reference = run_trial(spec, index, force_engine=True)
            assert fast == reference

    @pytest.mark.parametrize("bound", [1, 3, 17, 100])
    def test_truncated_runs_replay_too(self, bound):
        spec = TrialBatchSpec(
            protocol=ProtocolId.FLIP,
            n=9,
            trials=2,
            scheduler=SchedulerKind.UNIFORM_PAIR,
            init=InitPolicy.ALL_ZERO,
            seed=5,
            stop=StopCondition(StopKind.COUNT_REACHES_N, bound),
        )
        for index in range(2):
            assert run_trial(spec, index) == run_trial(spec, index, force_engine=True)


class TestSeeding:
    def test_derive_seed_is_frozen(self):
        assert derive_seed(0, 1) == 4881901421217228719
        assert derive_seed(42) == 11465652750463011511

    def test_trial_rng_depends_only_on_seed_and_index(self):
        a = trial_rng(7, 3).random(8).tolist()
        b = trial_rng(7, 3).random(8).tolist()
        c = trial_rng(7, 4).random(8).tolist()
        assert a == b
        assert a != c

    def test_random_marks_consume_n_doubles(self):
        spec = TrialBatchSpec(
            protocol=ProtocolId.FLIP,
            n=6,
            trials=1,
            init=InitPolicy.UNIFORM_RANDOM_MARKS,
            seed=21,
        )
        rng = trial_rng(21, 0)
        marks = initial_mobiles(spec, rng)
        replay = trial_rng(21, 0)
        assert marks == [int(u * 2) for u in replay.random(6)]


class TestBatch:
    def test_batches_are_deterministic(self):
        spec = TrialBatchSpec(protocol=ProtocolId.FLIP, n=4, trials=16, seed=11)
        assert run_batch(spec).records == run_batch(spec).records

    def test_worker_count_does_not_change_records(self):
        spec = TrialBatchSpec(protocol=ProtocolId.FLIP, n=4, trials=16, seed=11)
        serial = run_batch(spec, threads=1)
        parallel = run_batch(spec, threads=2)
        assert serial.records == parallel.records
        assert serial.summary == parallel.summary

    def test_thread_resolution(self, monkeypatch):
        monkeypatch.delenv("POPCOUNT_THREADS", raising=False)
        assert resolve_threads(None) == 1
        assert resolve_threads(5) == 5
        monkeypatch.setenv("POPCOUNT_THREADS", "3")
        assert resolve_threads(None) == 3

    def test_all_truncated_raises(self):
        spec = TrialBatchSpec(
            protocol=ProtocolId.FLIP,
            n=12,
            trials=4,
            seed=0,
            stop=StopCondition(StopKind.COUNT_REACHES_N, 5),
        )
        with pytest.raises(AllTrialsTruncated):
            run_batch(spec)

    def test_single_trial_summary_has_zero_spread(self):
        record = run_trial(
            TrialBatchSpec(protocol=ProtocolId.FLIP, n=3, trials=1, seed=2), 0
        )
        summary = summarize([record])
        assert summary.bst_interactions.stddev == 0.0
        assert summary.bst_interactions.standard_error == 0.0
        assert summary.trials == 1 and summary.truncated == 0

    def test_sweep_n_is_deterministic(self):
        base = TrialBatchSpec(protocol=ProtocolId.FLIP, n=2, trials=20, seed=3)
        once = sweep_n(base, [2, 4])
        again = sweep_n(base, [2, 4])
        assert once == again
        assert [n for n, _ in once] == [2, 4]


class TestSpecValidation:
    def test_population_and_trials(self):
        with pytest.raises(ValueError):
            TrialBatchSpec(protocol=ProtocolId.FLIP, n=0, trials=1)
        with pytest.raises(ValueError):
            TrialBatchSpec(protocol=ProtocolId.FLIP, n=1, trials=0)

    def test_vector_rules(self):
        with pytest.raises(ValueError):
            TrialBatchSpec(
                protocol=ProtocolId.FLIP,
                n=3,
                trials=1,
                init=InitPolicy.EXPLICIT_VECTOR,
                vector=(0, 1),
            )
        with pytest.raises(ValueError):
            TrialBatchSpec(protocol=ProtocolId.FLIP, n=2, trials=1, vector=(0, 1))

    def test_protocol_pairings(self):
        with pytest.raises(ValueError):
            TrialBatchSpec(
                protocol=ProtocolId.FLIP,
                n=2,
                trials=1,
                init=InitPolicy.WORST_CASE_UNNAMED,
            )
        with pytest.raises(ValueError):
            TrialBatchSpec(
                protocol=ProtocolId.GROS_NAMING,
                n=2,
                trials=1,
                init=InitPolicy.UNIFORM_RANDOM_MARKS,
            )
        with pytest.raises(ValueError):
            TrialBatchSpec(
                protocol=ProtocolId.FLIP,
                n=2,
                trials=1,
                scheduler=SchedulerKind.WEAK_ADVERSARIAL,
            )
        with pytest.raises(ValueError):
            TrialBatchSpec(protocol=ProtocolId.FLIP, n=2, trials=1, bound=5)

    def test_initial_values_must_fit_the_state_space(self):
        bad_names = TrialBatchSpec(
            protocol=ProtocolId.GROS_NAMING,
            n=2,
            trials=1,
            scheduler=SchedulerKind.WEAK_ADVERSARIAL,
            init=InitPolicy.EXPLICIT_VECTOR,
            vector=(0, 9),
        )
        with pytest.raises(ValueError):
            run_trial(bad_names, 0)
        bad_bits = TrialBatchSpec(
            protocol=ProtocolId.FLIP,
            n=2,
            trials=1,
            init=InitPolicy.EXPLICIT_VECTOR,
            vector=(0, 2),
        )
        with pytest.raises(ValueError):
            run_trial(bad_bits, 0)


class TestAdversarialNaming:
    def test_frozen_worst_case_runs(self):
        for n, expected in ((3, 10), (4, 22)):
            spec = TrialBatchSpec(
                protocol=ProtocolId.GROS_NAMING,
                n=n,
                trials=1,
                scheduler=SchedulerKind.WEAK_ADVERSARIAL,
                init=InitPolicy.WORST_CASE_UNNAMED,
            )
            record = run_trial(spec, 0)
            assert record.converged_at_non_null == expected

    def test_frozen_all_sinks_run(self):
        spec = TrialBatchSpec(
            protocol=ProtocolId.GROS_NAMING,
            n=3,
            trials=1,
            scheduler=SchedulerKind.WEAK_ADVERSARIAL,
        )
        record = run_trial(spec, 0)
        assert record.converged_at_non_null == 6
        assert record.final_c == 3

    @pytest.mark.parametrize("n", range(1, 8))
    def test_sweep_matches_the_doubling_formula(self, n):
        sweep = sweep_worst_unnamed(n, n + 1)
        assert sweep.worst_non_null == 3 * 2 ** (n - 1) - 2
        assert sweep.worst_start == frozenset(range(1, n))
        assert sweep.starts_checked == 2 ** n - 1

    def test_sweep_validation(self):
        with pytest.raises(ValueError):
            sweep_worst_unnamed(3, 3)
        with pytest.raises(Intractable):
            sweep_worst_unnamed(17, 18)

    def test_worst_start_shape(self):
        assert worst_unnamed_start(4) == [0, 1, 2, 3]


class TestStatisticalCrossChecks:
    def test_allflip_estimate_is_reproducible_and_near_exact(self):
        # failing the first phase from all zeros at n = 2 takes seven
        # consecutive converted draws, so the success probability is 1 - 2^-7
        p = estimate_allflip_probability(2, 3000, seed=99)
        assert p == estimate_allflip_probability(2, 3000, seed=99)
        exact = 1 - 2.0 ** -7
        se = math.sqrt(exact * (1 - exact) / 3000)
        assert abs(p - exact) <= 4 * se

    def test_all_same_start_beats_mixed_start_for_flip(self):
        # from an all-same pair the expectation is 4 meetings; a split pair
        # must first coalesce and averages 5
        zeros = run_batch(
            TrialBatchSpec(protocol=ProtocolId.FLIP, n=2, trials=3000, seed=17)
        ).summary.bst_interactions
        mixed = run_batch(
            TrialBatchSpec(
                protocol=ProtocolId.FLIP,
                n=2,
                trials=3000,
                seed=18,
                init=InitPolicy.EXPLICIT_VECTOR,
                vector=(0, 1),
            )
        ).summary.bst_interactions
        assert zeros.mean + 3 * zeros.standard_error < mixed.mean - 3 * mixed.standard_error

    def test_uniform_pair_interaction_overhead(self):
        # a pair involves the base station with probability 2 / (n + 1), so
        # total interactions run near (n + 1) / 2 per base-station meeting
        n = 16
        summary = run_batch(
            TrialBatchSpec(
                protocol=ProtocolId.TIME_OPT,
                n=n,
                trials=200,
                scheduler=SchedulerKind.UNIFORM_PAIR,
                seed=23,
            )
        ).summary
        ratio = summary.total_interactions.mean / summary.bst_interactions.mean
        assert abs(ratio - (n + 1) / 2) < 0.1 * (n + 1) / 2
