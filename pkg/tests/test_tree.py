import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmclab.model import CappedK, Instance, Linear, Schedule, cost_of, simulate, sqrt_model
from bmclab.opt import dp_opt
from bmclab.tree import (
    MergeTree,
    TreeError,
    dump_tree,
    empty_tree,
    linear_cost_by_subtrees,
    load_tree,
    potential,
    schedule_to_tree,
    spine_insert,
    tree_cost,
    tree_lower_bound,
    tree_to_schedule,
)

from conftest import random_instance, random_schedule, schedules


def naive_tree(widths):
    """Recursive construction: the root of I[i, j] at depth d is the last
    time in [i, j] whose stack size (relative to the d files below) is 1."""
    n = len(widths)
    k, sizes = 0, []
    for w in widths:
        k = k + 2 - w
        sizes.append(k)
    left, right = [0] * (n + 1), [0] * (n + 1)

    def build(i, j, d):
        if i > j:
            return 0
        s = max(t for t in range(i, j + 1) if sizes[t - 1] == d + 1)
        left[s] = build(i, s - 1, d)
        right[s] = build(s + 1, j, d + 1)
        return s

    root = build(1, n, 0)
    return MergeTree(left, right, root)


def chain(n):
    return MergeTree([0] * (n + 1), [0] + list(range(2, n + 1)) + [0], 1 if n else 0)


class TestExamples:
    def test_single(self):
        t = schedule_to_tree(None, Schedule([1]))
        assert t.n == 1 and t.latency() == 1

    def test_balanced(self):
        t = schedule_to_tree(None, Schedule([1, 2, 1]))
        assert (t.root, t.left[2], t.right[2]) == (2, 1, 3)
        assert tree_to_schedule(t) == Schedule([1, 2, 1])

    def test_full_merge_at_three(self):
        t = schedule_to_tree(None, Schedule([1, 1, 3]))
        assert t.root == 3 and t.left[3] == 1 and t.right[1] == 2
        assert list(t.right_depths()) == [0, 1, 0]

    def test_chain(self):
        assert tree_to_schedule(chain(3)) == Schedule([1, 1, 1])

    def test_costs(self):
        u = Instance.uniform(1, 1, 3)
        bal = schedule_to_tree(u, Schedule([1, 2, 1]))
        assert tree_cost(bal, u, Linear()) == 8
        assert tree_cost(chain(3), u, Linear()) == 9
        assert tree_cost(bal, Instance.uniform(0, 0, 3), Linear()) == 0
        assert tree_lower_bound(bal, u) == 7
        assert tree_lower_bound(chain(3), u) == 6
        one = Instance([2.5], [1.5])
        assert tree_lower_bound(chain(1), one) == 4

    def test_spine_insert(self):
        t = spine_insert(chain(1), "append")
        assert tree_to_schedule(t) == Schedule([1, 1])
        t = spine_insert(chain(1), 1)
        assert t.root == 2 and t.left[2] == 1
        t = spine_insert(chain(2), 2)
        assert t.right[1] == 3 and t.left[3] == 2
        assert tree_to_schedule(t) == Schedule([1, 1, 2])
        with pytest.raises(TreeError):
            spine_insert(schedule_to_tree(None, Schedule([1, 2])), 1)

    def test_invalid_tree(self):
        with pytest.raises(TreeError):
            MergeTree([0, 0, 0], [0, 0, 0], 1)  # key 2 unreachable
        with pytest.raises(TreeError):
            MergeTree([0, 2, 0], [0, 0, 0], 1)  # 2 left of 1 breaks order


def test_matches_naive_construction(rng):
    for _ in range(200):
        n = int(rng.integers(1, 40))
        s = random_schedule(rng, n)
        assert schedule_to_tree(None, s) == naive_tree(s.widths)


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_round_trip(data):
    n = data.draw(st.integers(0, 60))
    s = data.draw(schedules(n))
    t = schedule_to_tree(None, s)
    assert tree_to_schedule(t) == s
    assert schedule_to_tree(None, tree_to_schedule(t)) == t


@settings(max_examples=60, deadline=None)
@given(data=st.data(), K=st.integers(1, 4))
def test_cost_and_latency_preserved(data, K):
    n = data.draw(st.integers(1, 40))
    s = data.draw(schedules(n, cap=K))
    rng = np.random.default_rng(n)
    inst = random_instance(rng, n)
    t = schedule_to_tree(inst, s)
    for model in (CappedK(K), Linear(), sqrt_model()):
        a, b = tree_cost(t, inst, model), cost_of(inst, s, model)
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)
    assert t.latency() == simulate(inst, s, Linear()).max_stack
    sizes = simulate(inst, s, Linear()).stack_sizes
    assert np.array_equal(t.right_depths() + 1, sizes)


def test_linear_identity_and_lower_bound(rng):
    for _ in range(50):
        n = int(rng.integers(1, 30))
        inst = random_instance(rng, n)
        t = schedule_to_tree(inst, random_schedule(rng, n))
        c = tree_cost(t, inst, Linear())
        assert linear_cost_by_subtrees(t, inst) == pytest.approx(c, rel=1e-9)
        assert tree_lower_bound(t, inst) <= dp_opt(inst, Linear()).cost * (1 + 1e-9)


def test_incremental_sums_match_fresh(rng):
    inst = random_instance(rng, 60)
    s = random_schedule(rng, 60)
    t = empty_tree()
    t.subtree_sums()
    spine = []
    for k, w in enumerate(s.widths):
        pos = "append" if w == 1 else spine[-(w - 1)]
        spine_insert(t, pos, inst.lengths[k], inst.reads[k])
        spine = t.spine()
    ref = schedule_to_tree(inst, s)
    assert t == ref
    el_a, rr_a = t.subtree_sums()
    el_b, rr_b = ref.subtree_sums()
    np.testing.assert_allclose(el_a, el_b)
    np.testing.assert_allclose(rr_a, rr_b)


def test_potential_bounds(rng):
    inst = random_instance(rng, 30)
    t = schedule_to_tree(inst, random_schedule(rng, 30))
    base = inst.lengths.sum() + inst.reads.sum()
    assert potential(t, inst) >= base


def test_dump_load(rng, tmp_path):
    t = schedule_to_tree(None, random_schedule(rng, 25))
    dump_tree(t, tmp_path / "t.txt")
    assert load_tree(tmp_path / "t.txt") == t
    assert load_tree(dump_tree(t)) == t
