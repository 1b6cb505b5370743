"""Selection, stopping, and decision rules of the deterministic policy."""

import math

import numpy as np
import pytest

from anomsearch.policy import (
    InstanceError,
    ProblemInstance,
    decide,
    policy_action,
    select_multi,
    select_multitarget,
    select_probes,
    select_single,
    should_stop,
)

from conftest import cell, instance_with, random_instance, state_with


class TestInstanceValidation:
    def test_needs_two_cells(self):
        with pytest.raises(InstanceError):
            ProblemInstance([cell(1.0, 1.0)])

    def test_probe_budget_bounds(self):
        with pytest.raises(InstanceError):
            instance_with([1, 1, 1], [1, 1, 1], K=3)
        with pytest.raises(InstanceError):
            instance_with([1, 1, 1], [1, 1, 1], K=0)

    def test_target_count_bounds(self):
        with pytest.raises(InstanceError):
            instance_with([1, 1, 1], [1, 1, 1], L=3)

    def test_cost_bounds(self):
        for c in (0.0, 1.0, 1.5, -0.1):
            with pytest.raises(InstanceError):
                instance_with([1, 1], [1, 1], c=c)

    def test_threshold_is_natural_log(self):
        inst = instance_with([1, 1], [1, 1], c=1e-3)
        assert inst.threshold == pytest.approx(-math.log(1e-3), rel=1e-15)

    def test_priors_must_be_positive_and_normalized(self):
        with pytest.raises(InstanceError):
            instance_with([1, 1], [1, 1], priors=[0.0, 1.0])
        with pytest.raises(InstanceError):
            instance_with([1, 1], [1, 1], priors=[0.3, 0.3])
        with pytest.raises(InstanceError):
            instance_with([1, 1], [1, 1], priors=[0.5, 0.25, 0.25])

    def test_default_priors_uniform(self):
        inst = instance_with([1, 1, 1], [1, 1, 1])
        assert inst.priors.tolist() == pytest.approx([1 / 3] * 3)

    def test_multitarget_subset_priors_from_cell_weights(self):
        inst = instance_with([1, 1, 1, 1], [1, 1, 1, 1], L=2, priors=[1.0, 2.0, 3.0, 4.0])
        weights = {h: p for h, p in zip(inst.hypotheses, inst.priors)}
        # proportional to the product of member weights
        total = sum(a * b for a, b in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])
        assert weights[(0, 1)] == pytest.approx(2 / total)
        assert weights[(2, 3)] == pytest.approx(12 / total)
        assert sum(weights.values()) == pytest.approx(1.0)

    def test_multitarget_full_subset_priors(self):
        p = [0.1, 0.2, 0.3, 0.15, 0.15, 0.1]
        inst = instance_with([1] * 4, [1] * 4, L=2, priors=p)
        assert inst.priors.tolist() == pytest.approx(p)

    def test_hypotheses_lexicographic(self):
        inst = instance_with([1] * 4, [1] * 4, L=2)
        assert inst.hypotheses[:3] == ((0, 1), (0, 2), (0, 3))


class TestSelectSingle:
    def test_probe_top_when_drift_dominates(self):
        # top cell's D(g||f)=1.2 beats the pooled rate 1/(1/2+1/2)=1.0
        inst = instance_with([9.9, 1.2, 9.9], [2.0, 9.9, 2.0])
        state = state_with([2.0, 5.0, 1.0])
        assert select_single(state, inst) == (1,)

    def test_probe_runner_up_otherwise(self):
        inst = instance_with([9.9, 0.5, 9.9], [2.0, 9.9, 2.0])
        state = state_with([2.0, 5.0, 1.0])
        assert select_single(state, inst) == (0,)

    def test_initial_tie_evaluates_cell_zero(self):
        # all sums zero: the top-ranked cell is cell 0 by the index tie-break
        inst = instance_with([5.0, 1.0, 1.0], [1.0, 1.0, 1.0])
        state = state_with([0.0, 0.0, 0.0])
        assert select_single(state, inst) == (0,)
        inst2 = instance_with([0.1, 1.0, 1.0], [1.0, 1.0, 1.0])
        assert select_single(state, inst2) == (1,)


class TestSelectMulti:
    def make(self, d_gf_top, K):
        # top cell 0; chasers have D(f||g) = 1, 2, 4
        return instance_with([d_gf_top, 9, 9, 9], [9, 1.0, 2.0, 4.0], K=K)

    def test_chasing_block_when_top_drift_small(self):
        inst = self.make(0.3, K=2)
        state = state_with([5.0, 3.0, 2.0, 1.0])
        # 0.3 + F(1)=0.5714 < F(2)=1.0: probe ranks 2..3
        assert select_multi(state, inst) == (1, 2)

    def test_top_block_when_drift_compensates(self):
        inst = self.make(0.6, K=2)
        state = state_with([5.0, 3.0, 2.0, 1.0])
        # 0.6 + 0.5714 >= 1.0: probe ranks 1..2
        assert select_multi(state, inst) == (0, 1)

    def test_flat_region_always_takes_top_block(self):
        inst = self.make(0.3, K=3)
        state = state_with([5.0, 3.0, 2.0, 1.0])
        # F(2) = F(3) = 1.0, so any positive drift favors the top block
        assert select_multi(state, inst) == (0, 1, 2)

    def test_reduces_to_single_probe_rule(self, rng):
        for _ in range(1000):
            inst = random_instance(rng, K=1)
            state = state_with(rng.normal(size=inst.M))
            assert select_multi(state, inst) == select_single(state, inst)


class TestSelectMultitarget:
    def make(self, K=1, L=2):
        # candidate set will be cells {0,1} with D(g||f) = {3,6};
        # complement {2,3} with D(f||g) = {1,4}
        return instance_with([3.0, 6.0, 9, 9], [9, 9, 1.0, 4.0], K=K, L=L)

    def test_probe_trailing_candidate_when_inside_rate_wins(self):
        inst = self.make()
        state = state_with([10.0, 8.0, 1.0, 0.0])
        # Gbar = 1/(1/3+1/6) = 2.0 >= Fbar = 1/(1/1+1/4) = 0.8: probe rank L
        assert select_multitarget(state, inst) == (1,)

    def test_probe_leading_complement_otherwise(self):
        inst = instance_with([0.3, 0.4, 9, 9], [9, 9, 1.0, 4.0], K=1, L=2)
        state = state_with([10.0, 8.0, 1.0, 0.0])
        # Gbar = 1/(1/0.3+1/0.4) < 0.8: probe rank L+1
        assert select_multitarget(state, inst) == (2,)

    def test_two_probe_split_maximizes_gap_growth(self):
        inst = self.make(K=2)
        state = state_with([10.0, 8.0, 1.0, 0.0])
        # k=0: F(2)=1; k=1: F(1)+G(1)=0.8+2=2.8; k=2: G(2)=min(4,3)=3 -> k*=2
        assert select_multitarget(state, inst) == (0, 1)

    def test_window_clamped_inside_cells(self):
        # K + L - M = 1 forces at least one probe inside the candidate set
        inst = instance_with([0.1, 0.1, 0.1, 9], [9, 9, 9, 5.0], K=3, L=3, c=1e-3)
        state = state_with([4.0, 3.0, 2.0, 1.0])
        probes = select_multitarget(state, inst)
        assert len(probes) == 3 and all(0 <= p < 4 for p in probes)

    def test_single_complement_cell_rate(self):
        inst = instance_with([1.0, 1.0, 1.0, 9], [9, 9, 9, 5.0], K=1, L=3)
        assert inst.profile((0, 1, 2)).f_bar == pytest.approx(5.0)

    def test_reduces_to_single_target_rules(self, rng):
        for _ in range(1000):
            inst = random_instance(rng)  # L=1, random K
            state = state_with(rng.normal(size=inst.M))
            expected = select_multi(state, inst) if inst.K > 1 else select_single(state, inst)
            assert select_multitarget(state, inst) == expected


class TestStopAndDecide:
    def test_threshold_strictness(self):
        inst = instance_with([1, 1, 1], [1, 1, 1], c=1e-3)  # threshold 6.9078
        assert not should_stop(state_with([6.90, 0.0, -1.0]), inst)
        assert should_stop(state_with([6.91, 0.0, -1.0]), inst)

    def test_exact_threshold_stops(self):
        inst = instance_with([1, 1], [1, 1], c=0.25)
        assert should_stop(state_with([inst.threshold, 0.0]), inst)

    def test_initial_state_never_stops(self):
        inst = instance_with([1, 1], [1, 1], c=0.999)
        assert not should_stop(state_with([0.0, 0.0]), inst)

    def test_decide_single(self):
        inst = instance_with([1, 1, 1], [1, 1, 1])
        assert decide(state_with([2.0, 5.0, 1.0]), inst) == (1,)

    def test_decide_pair(self):
        inst = instance_with([1, 1, 1], [1, 1, 1], L=2)
        assert decide(state_with([2.0, 5.0, 1.0]), inst) == (0, 1)

    def test_decide_tie_breaks_by_index(self):
        inst = instance_with([1, 1, 1], [1, 1, 1])
        assert decide(state_with([5.0, 5.0, 1.0]), inst) == (0,)

    def test_policy_action_wraps_stop_and_continue(self):
        inst = instance_with([1, 1], [1, 1], c=0.5)
        stop = policy_action(state_with([5.0, 0.0]), inst)
        assert stop.kind == "stop" and stop.cells == (0,)
        go = policy_action(state_with([0.1, 0.0]), inst)
        assert go.kind == "continue" and len(go.cells) == 1


class TestProbeSetShape:
    def test_probes_are_consecutive_ranks(self, rng):
        for _ in range(400):
            l = int(rng.integers(1, 3))
            inst = random_instance(rng, m_range=(4, 8), L=l)
            state = state_with(rng.normal(size=inst.M))
            probes = select_probes(state, inst)
            assert len(probes) == inst.K
            assert len(set(probes)) == inst.K
            ranking = state.ranking.tolist()
            positions = sorted(ranking.index(p) for p in probes)
            assert positions == list(range(positions[0], positions[0] + inst.K))
            # window starts at rank 1 or reaches at most one rank past the
            # candidate set boundary
            assert 0 <= positions[0] <= inst.L

    def test_determinism(self, rng):
        inst = random_instance(rng, m_range=(5, 5), L=2)
        sums = rng.normal(size=5)
        a = select_probes(state_with(sums), inst)
        b = select_probes(state_with(sums.copy()), inst)
        assert a == b
