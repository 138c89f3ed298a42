import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laxsched.capacity import GainProfile
from laxsched.core import DownloadRequest, FlowState, FlowStatus, advance_flow
from laxsched.policies import (
    EdfPolicy,
    ExpUrgency,
    FrameworkParams,
    FrameworkPolicy,
    LlfPolicy,
    LogUrgency,
    MaxCiPolicy,
    MaxWeightUrgency,
    baseline_edf,
    baseline_llf,
    baseline_max_ci,
    framework_select,
    l2hpr_allocate,
    make_policy,
    urgency_exp,
    urgency_log,
    urgency_maxweight,
)

# frozen from independent high-precision evaluation (mpmath, 40 digits)
EXP_URGENCY_EXAMPLE = 0.7461018060799022  # exp(-0.5 / (1 + sqrt(0.5)))
LOG_URGENCY_EXAMPLE = 0.4341060462449408  # 1 / ln(10.01)

GAINS = GainProfile((0.0, 1.0, 1.5))
GAINS4 = GainProfile((0.0, 1.0, 1.394, 1.622, 1.776))


def flows_from(sizes, deadline=10.0, arrivals=None):
    arrivals = arrivals or [0.0] * len(sizes)
    return [
        FlowState.new(DownloadRequest(i + 1, arrivals[i], sizes[i], deadline))
        for i in range(len(sizes))
    ]


def flows_with_deadlines(pairs):
    return [
        FlowState.new(DownloadRequest(i + 1, 0.0, size, d))
        for i, (size, d) in enumerate(pairs)
    ]


class TestUrgencyMaxWeight:
    def test_reciprocal(self):
        assert urgency_maxweight(2.0, 1.0, 1e-3) == 0.5

    def test_clamp(self):
        assert urgency_maxweight(-1.0, 1.0, 1e-3) == pytest.approx(1000.0)

    def test_decreasing(self):
        assert urgency_maxweight(4.0, 1.0, 1e-3) < urgency_maxweight(2.0, 1.0, 1e-3)


class TestUrgencyExp:
    def test_single_user_example(self):
        # one user in the group, so the group mean is beta * L = 0.5
        got = urgency_exp(10.0, 0.05, 1.0, 0.5, 0.5, 1e-3)
        assert got == pytest.approx(EXP_URGENCY_EXAMPLE, abs=1e-12)

    def test_bounded_by_one(self):
        assert 0.0 < urgency_exp(3.0, 0.05, 1.0, 0.5, 0.2, 1e-3) <= 1.0

    def test_vanishes_at_large_laxity(self):
        assert urgency_exp(1e6, 0.05, 1.0, 0.5, 1.0, 1e-3) < 1e-10


class TestUrgencyLog:
    def test_clamped_example(self):
        got = urgency_log(0.0, 10.0, 10.0, 1e-3)
        assert got == pytest.approx(LOG_URGENCY_EXAMPLE, abs=1e-12)

    def test_positive_decreasing(self):
        a = urgency_log(1.0, 10.0, 10.0, 1e-3)
        b = urgency_log(5.0, 10.0, 10.0, 1e-3)
        assert 0.0 < b < a

    def test_nonpositive_log_rejected(self):
        with pytest.raises(ValueError):
            urgency_log(-5.0, 1.0, 0.5, 1e-3)  # zeta + beta*eps < 1


class TestFrameworkParams:
    def test_table_defaults(self):
        p = FrameworkParams(urgency=LogUrgency())
        assert p.delta == -2.0
        assert p.epsilon == 1e-3
        assert p.kappa == 1.0
        assert p.urgency.beta == 10.0 and p.urgency.zeta == 10.0
        assert ExpUrgency() == ExpUrgency(beta=0.05, zeta=1.0, eta=0.5)
        assert MaxWeightUrgency().alpha == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            MaxWeightUrgency(alpha=0.0)
        with pytest.raises(ValueError):
            ExpUrgency(beta=-1.0)
        with pytest.raises(ValueError):
            FrameworkParams(urgency=MaxWeightUrgency(), epsilon=0.0)
        with pytest.raises(ValueError):
            # log positivity: zeta + beta*eps must exceed 1
            FrameworkParams(urgency=LogUrgency(beta=1.0, zeta=0.5))

    @given(
        l1=st.floats(1e-3, 1e3),
        l2=st.floats(1e-3, 1e3),
    )
    @settings(max_examples=200, deadline=None)
    def test_all_urgencies_strictly_decreasing(self, l1, l2):
        if l1 == l2:
            return
        lo, hi = min(l1, l2), max(l1, l2)
        assert urgency_maxweight(lo, 1.0, 1e-3) > urgency_maxweight(hi, 1.0, 1e-3)
        assert urgency_exp(lo, 0.05, 1.0, 0.5, 0.7, 1e-3) > urgency_exp(
            hi, 0.05, 1.0, 0.5, 0.7, 1e-3
        )
        assert urgency_log(lo, 10.0, 10.0, 1e-3) > urgency_log(hi, 10.0, 10.0, 1e-3)


class TestL2hprAllocate:
    def test_two_user_tie(self):
        flows = flows_from([5.0, 5.0])
        alloc = l2hpr_allocate(flows, GAINS, 0, 0.1)
        assert alloc == {1: 1.0, 2: 0.5}

    def test_single_user_full_rate(self):
        alloc = l2hpr_allocate(flows_from([3.0]), GAINS, 0, 0.1)
        assert alloc == {1: 1.0}

    def test_total_rate_saturates_gain(self):
        flows = flows_from([5.0, 3.0, 4.0, 2.0])
        alloc = l2hpr_allocate(flows, GAINS4, 0, 0.1)
        assert sum(alloc.values()) == pytest.approx(GAINS4.gains[4], abs=1e-12)
        assert GAINS4.in_region(list(alloc.values()))

    def test_rank_monotone_in_laxity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            sizes = rng.uniform(0.5, 9.0, size=4).tolist()
            flows = flows_from(sizes)
            alloc = l2hpr_allocate(flows, GAINS4, 0, 0.1)
            lax = {f.user_id: 10.0 - sizes[f.user_id - 1] for f in flows}
            for a in flows:
                for b in flows:
                    if lax[a.user_id] < lax[b.user_id]:
                        assert alloc[a.user_id] > alloc[b.user_id]

    def test_empty_queue(self):
        assert l2hpr_allocate([], GAINS, 0, 0.1) == {}

    def test_mixed_deadlines_rejected(self):
        flows = flows_with_deadlines([(2.0, 10.0), (2.0, 12.0)])
        with pytest.raises(ValueError):
            l2hpr_allocate(flows, GAINS, 0, 0.1)

    def test_too_many_users_rejected(self):
        with pytest.raises(ValueError):
            l2hpr_allocate(flows_from([1.0, 1.0, 1.0]), GAINS, 0, 0.1)

    def test_non_active_rejected(self):
        done = advance_flow(flows_from([0.05])[0], 1.0, 0.1)
        assert done.status is FlowStatus.COMPLETED
        with pytest.raises(ValueError):
            l2hpr_allocate([done], GAINS, 0, 0.1)

    def test_worked_example_after_one_slot(self):
        flows = flows_from([5.0, 5.0])
        alloc = l2hpr_allocate(flows, GAINS, 0, 0.1)
        advanced = [advance_flow(f, alloc[f.user_id], 0.1) for f in flows]
        lax = [10.0 - f.residual_size for f in advanced]
        assert min(lax) == pytest.approx(5.0 + 0.5 * 0.1, abs=1e-12)


class TestFrameworkSelect:
    def params(self, **kw):
        return FrameworkParams(urgency=MaxWeightUrgency(alpha=kw.pop("alpha", 1.0)), **kw)

    def test_urgent_user_wins_at_equal_rates(self):
        flows = flows_from([5.0, 9.0])  # laxities 5 and 1
        rates = {1: 1.0, 2: 1.0}
        assert framework_select(flows, rates, self.params(), 0, 0.1) == 2

    def test_maxweight_ratio_rule(self):
        # all laxities above delta: pick max R / clamped L
        flows = flows_from([2.0, 6.0])  # laxities 8 and 4
        rates = {1: 1.0, 2: 0.6}
        # weights: 1/8 = 0.125 vs 0.6/4 = 0.15
        assert framework_select(flows, rates, self.params(), 0, 0.1) == 2

    def test_fallback_serves_highest_rate(self):
        flows = flows_from([30.0, 40.0])  # laxities -20 and -30, both below delta
        rates = {1: 0.4, 2: 0.9}
        assert framework_select(flows, rates, self.params(), 0, 0.1) == 2

    def test_tie_smallest_id(self):
        flows = flows_from([5.0, 5.0])
        rates = {1: 1.0, 2: 1.0}
        assert framework_select(flows, rates, self.params(), 0, 0.1) == 1

    def test_empty_queue(self):
        assert framework_select([], {}, self.params(), 0, 0.1) is None

    def test_exp_group_mean_over_plus_group_only(self):
        # user 3 sits below delta and must not enter the group mean
        params = FrameworkParams(urgency=ExpUrgency(beta=0.05, zeta=1.0, eta=0.5))
        flows = flows_from([4.0, 8.0, 40.0])  # laxities 6, 2, -30
        rates = {1: 1.0, 2: 1.0, 3: 5.0}
        lbar = (0.05 * 6.0 + 0.05 * 2.0) / 2.0
        w1 = urgency_exp(6.0, 0.05, 1.0, 0.5, lbar, 1e-3)
        w2 = urgency_exp(2.0, 0.05, 1.0, 0.5, lbar, 1e-3)
        expected = 1 if w1 > w2 else 2
        assert framework_select(flows, rates, params, 0, 0.1) == expected

    def test_scale_invariance_of_rates(self):
        rng = np.random.default_rng(11)
        params = FrameworkParams(urgency=LogUrgency())
        for _ in range(50):
            sizes = rng.uniform(0.5, 15.0, size=5).tolist()
            base = rng.uniform(0.1, 3.0, size=5)
            flows = flows_from(sizes, deadline=12.0)
            r1 = {i + 1: float(base[i]) for i in range(5)}
            r2 = {i + 1: float(base[i]) * 7.3 for i in range(5)}
            assert framework_select(flows, r1, params, 0, 0.1) == framework_select(
                flows, r2, params, 0, 0.1
            )

    def test_degenerate_parameters_reduce_to_max_ci(self):
        # delta -> -inf puts everyone in the tradeoff group; alpha -> 0 makes
        # the urgency flat, so the rule degenerates to the greedy baseline
        rng = np.random.default_rng(23)
        params = FrameworkParams(
            urgency=MaxWeightUrgency(alpha=1e-12), delta=-1e18
        )
        for _ in range(200):
            m = int(rng.integers(1, 7))
            sizes = rng.uniform(0.5, 30.0, size=m).tolist()
            flows = flows_from(sizes, deadline=8.0)
            distinct = rng.permutation(np.arange(1, 41))[:m] / 10.0
            rates = {i + 1: float(distinct[i]) for i in range(m)}
            assert framework_select(flows, rates, params, 0, 0.1) == baseline_max_ci(
                flows, rates
            )


class TestBaselines:
    def test_max_ci_argmax(self):
        flows = flows_from([1.0, 1.0, 1.0])
        assert baseline_max_ci(flows, {1: 0.3, 2: 0.9, 3: 0.5}) == 2

    def test_max_ci_single(self):
        flows = flows_from([1.0])
        assert baseline_max_ci(flows, {1: 0.1}) == 1

    def test_max_ci_tie(self):
        flows = flows_from([1.0, 1.0])
        assert baseline_max_ci(flows, {1: 0.5, 2: 0.5}) == 1

    def test_max_ci_empty(self):
        assert baseline_max_ci([], {}) is None

    def test_edf(self):
        flows = flows_with_deadlines([(1.0, 10.0), (1.0, 7.0), (1.0, 9.0)])
        assert baseline_edf(flows) == 2

    def test_edf_tie(self):
        flows = flows_with_deadlines([(1.0, 7.0), (1.0, 7.0)])
        assert baseline_edf(flows) == 1

    def test_edf_empty(self):
        assert baseline_edf([]) is None

    def test_llf(self):
        # laxities 6, -1, 2
        flows = flows_from([4.0, 11.0, 8.0])
        assert baseline_llf(flows, 0, 0.1) == 2

    def test_llf_tie(self):
        flows = flows_from([4.0, 4.0])
        assert baseline_llf(flows, 0, 0.1) == 1

    def test_llf_empty(self):
        assert baseline_llf([], 0, 0.1) is None


class TestPolicyObjects:
    def test_factory_names(self):
        assert isinstance(make_policy("max-ci"), MaxCiPolicy)
        assert isinstance(make_policy("edf"), EdfPolicy)
        assert isinstance(make_policy("llf"), LlfPolicy)
        for name in ("l-maxweight", "l-exp", "l-log"):
            p = make_policy(name)
            assert isinstance(p, FrameworkPolicy)
            assert p.name == name

    def test_factory_rejects_unknown(self):
        with pytest.raises(ValueError):
            make_policy("best-rate")

    def test_factory_rejects_mismatched_params(self):
        with pytest.raises(ValueError):
            make_policy("l-log", FrameworkParams(urgency=ExpUrgency()))

    def test_array_path_matches_flow_path(self):
        rng = np.random.default_rng(31)
        params = FrameworkParams(urgency=LogUrgency())
        policy = FrameworkPolicy(params)
        for _ in range(50):
            m = int(rng.integers(1, 6))
            sizes = rng.uniform(0.5, 20.0, size=m).tolist()
            flows = flows_from(sizes, deadline=9.0)
            rates = {i + 1: float(r) for i, r in enumerate(rng.uniform(0.05, 3.0, size=m))}
            uids = [f.user_id for f in flows]
            lax = [9.0 - sizes[i] for i in range(m)]
            rlist = [rates[u] for u in uids]
            dlist = [9.0] * m
            assert policy.select_arrays(uids, lax, rlist, dlist) == framework_select(
                flows, rates, params, 0, 0.1
            )
