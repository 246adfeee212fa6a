from fractions import Fraction

import numpy as np
import pytest

from bmclab.adversary import (
    AdversaryError,
    LadderOverflowError,
    adversary_ratio,
    build_ladder,
    max_based_cost,
    reference_schedule_cost,
    reference_schedule_widths,
    reference_schedules_bound,
    run_adversary,
)
from bmclab.model import CappedK, Instance, cost_of, simulate
from bmclab.policies import Brb, Default, MergeAll, parse_policy, policy_widths

from conftest import random_schedule


class TestLadder:
    def test_k2(self):
        lad = build_ladder(2, 10)
        assert lad.N == [10, 1]
        assert lad.L == [10**11, 10]
        assert [lad.w(1, i) for i in range(1, 11)] == [Fraction(10**i, 10**11) for i in range(1, 11)]
        assert lad.w(2, 1) == 1
        assert lad.separation >= 10

    def test_k1(self):
        lad = build_ladder(1, 5)
        assert lad.N == [1] and lad.w(1, 1) == 1

    def test_overflow(self):
        with pytest.raises(LadderOverflowError):
            build_ladder(3, 4)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            build_ladder(2, 2)
        with pytest.raises(ValueError):
            build_ladder(3, 4, overrides=[16, 64])

    def test_properties(self):
        for K, L in [(2, 10), (2, 30), (2, 100)]:
            lad = build_ladder(K, L)
            vals = sorted(v for _, _, v in lad.values())
            assert all(b / a >= L for a, b in zip(vals, vals[1:]))
            for h, i, v in lad.values():
                assert v <= 1 and lad.L[h - 1] * v >= L

    def test_override_reports_separation(self):
        lad = build_ladder(3, 4, overrides=[4**6, 4**3])
        assert not lad.exact and lad.separation > 0


class TestRun:
    def test_k1(self):
        lad = build_ladder(1, 7)
        res = run_adversary(MergeAll(), lad)
        assert res.instance.runs == [(1, 1, 1), (0, 0, 7)]
        assert res.policy_cost >= 7 * lad.w(1, 1)

    def test_merge_all_ends_at_first_zero(self):
        lad = build_ladder(2, 10)
        res = run_adversary(MergeAll(), lad)
        assert res.stats.n[1] == [1] * 10
        assert res.stats.n[2] == [10]

    def test_default_times_out(self):
        lad = build_ladder(2, 10)
        res = run_adversary(Default(2), lad)
        assert res.stats.n[1] == [lad.L[0]] * 10
        assert all(res.stats.timed_out[1])

    def test_capacity_and_counts(self):
        lad = build_ladder(2, 30)
        for name in ["merge-all", "default:2", "brb:2", "doubling-capped:2"]:
            res = run_adversary(parse_policy(name), lad)
            assert len(res.stats.n[1]) <= lad.N[0]
            assert res.stats.n[2] == [30]
            assert all(c <= lad.L[0] for c in res.stats.n[1])

    def test_step_guard(self):
        class Stubborn(Brb):
            def steady_zero_steps(self):
                return 0

        with pytest.raises(AdversaryError):
            run_adversary(Stubborn(2), build_ladder(2, 10), max_policy_steps=10_000)


def small_game(policy_name, K=2, L=(81, 3)):
    lad = build_ladder(K, L[-1], overrides=list(L[:-1]))
    res = run_adversary(parse_policy(policy_name), lad)
    return lad, res


def exact_replay(runlen, policy):
    """Feed the exact arrivals to a fresh policy; return widths, true and max-based cost."""
    policy.reset()
    policy.begin(None)
    stack, widths, cost, max_cost = [], [], Fraction(0), Fraction(0)
    for x, _, c in runlen.runs:
        for _ in range(c):
            w = policy.step(x, 0)
            widths.append(w)
            parts = stack[len(stack) - w + 1:] if w > 1 else []
            del stack[len(stack) - len(parts):]
            stack.append((sum((p[0] for p in parts), x), max([p[1] for p in parts] + [x])))
            cost += stack[-1][0]
            max_cost += stack[-1][1]
    return widths, cost, max_cost


@pytest.mark.parametrize("name", ["merge-all", "default:2", "brb:2", "doubling-capped:2"])
def test_exact_costs_match_replay(name):
    lad, res = small_game(name)
    widths, cost, max_cost = exact_replay(res.instance, parse_policy(name))
    assert res.policy_cost == cost and res.policy_max_cost == max_cost
    inst = res.instance.to_instance()
    assert cost_of(inst, widths, CappedK(2)) == pytest.approx(float(cost), rel=1e-12)
    assert max_based_cost(inst, widths) == pytest.approx(float(max_cost), rel=1e-12)


@pytest.mark.parametrize("name", ["default:3", "brb:3"])
def test_reference_schedules_materialised(name):
    lad, res = small_game(name, K=3, L=(64, 16, 4))
    inst = res.instance.to_instance()
    levels = res.instance.levels()
    for b in range(1, 4):
        w = reference_schedule_widths(levels, 3, b)
        assert simulate(inst, w, CappedK(3)).max_stack <= 3
        assert float(reference_schedule_cost(res.instance, 3, b)) == pytest.approx(max_based_cost(inst, w), rel=1e-12)


def test_reference_bound_below_phase_bound():
    for L in (10, 30):
        lad = build_ladder(2, L)
        for name in ["merge-all", "default:2", "brb:2"]:
            res = run_adversary(parse_policy(name), lad)
            assert reference_schedules_bound(res.instance, lad, res.stats) <= res.stats.phase_bound(lad)


def test_k1_reference_is_merge_all():
    lad = build_ladder(1, 6)
    res = run_adversary(MergeAll(), lad)
    inst = res.instance.to_instance()
    assert float(reference_schedules_bound(res.instance, lad)) == max_based_cost(inst, policy_widths(inst, MergeAll()))


def test_mismatched_ladder():
    res = run_adversary(Brb(2), build_ladder(2, 10))
    with pytest.raises(AdversaryError):
        reference_schedules_bound(res.instance, build_ladder(2, 30))


def test_ratio_rises_towards_two():
    ratios = [adversary_ratio(run_adversary(Brb(2), build_ladder(2, L)), build_ladder(2, L)) for L in (10, 30, 100)]
    assert ratios[0] <= ratios[1] <= ratios[2] < 2
    for L, r in zip((10, 30, 100), ratios):
        assert r >= 2 * (1 - 5 * 2 / L)


class TestMaxBasedCost:
    def test_figure_one_step(self):
        inst = Instance([9, 5, 3])
        assert max_based_cost(inst, [1, 1, 3]) == 9 + 5 + 9
        assert cost_of(inst, [1, 1, 3], CappedK(3)) == 9 + 5 + 17

    def test_single_file_merges(self, rng):
        inst = Instance(rng.random(20))
        assert max_based_cost(inst, [1] * 20) == cost_of(inst, [1] * 20, CappedK(20))

    def test_below_true_cost_and_separated_bound(self, rng):
        lad, res = small_game("brb:2", L=(10**4, 10))
        inst = res.instance.to_instance()
        for _ in range(50):
            s = random_schedule(rng, len(inst))
            mb, true = max_based_cost(inst, s), cost_of(inst, s, CappedK(len(inst)))
            assert mb <= true * (1 + 1e-12)
        lad = build_ladder(2, 10)
        vals = [float(v) for _, _, v in lad.values()]
        for _ in range(50):
            seq = Instance(rng.permutation(vals + [0.0] * 5))
            s = random_schedule(rng, len(seq))
            mb, true = max_based_cost(seq, s), cost_of(seq, s, CappedK(len(seq)))
            assert mb <= true * (1 + 1e-12) and true <= mb / (1 - 1 / 10) * (1 + 1e-12)
