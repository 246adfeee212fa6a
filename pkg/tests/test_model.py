import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmclab.io import FormatError, read_instance, read_schedule, write_instance, write_schedule
from bmclab.model import (
    CappedK,
    General,
    InfeasibleScheduleError,
    Instance,
    Linear,
    Schedule,
    ScheduleError,
    cost_of,
    parse_model,
    simulate,
    sqrt_model,
    validate_schedule,
)

from conftest import instances, schedules, widths_from_fractions


class TestInstance:
    def test_range_sums(self):
        inst = Instance([1, 2, 3, 4], [4, 3, 2, 1])
        assert inst.ell(2, 3) == 5
        assert inst.r(1, 4) == 10
        assert inst.ell(3, 2) == 0
        assert inst.sub(2, 3) == Instance([2, 3], [3, 2])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Instance([1, -1])
        with pytest.raises(ValueError):
            Instance([1], [float("nan")])

    def test_from_pairs_and_uniform(self):
        assert Instance.from_pairs([(1, 1), (1, 1), (1, 1)]) == Instance.uniform(1, 1, 3)
        assert len(Instance.from_pairs([])) == 0


class TestSimulate:
    def test_figure_one_steps(self):
        # stack [80, 50, 9, 5] built without merges, then 3 arrives with width 3
        inst = Instance([80, 50, 9, 5, 3, 2])
        tr = simulate(inst, [1, 1, 1, 1, 3, 1], CappedK(10))
        assert tr.merge_costs[4] == 17
        assert tr.stacks[4] == (17, 50, 80)
        assert tr.merge_costs[5] == 2
        assert tr.stacks[5] == (2, 17, 50, 80)

    def test_single_step(self):
        assert cost_of(Instance([3], [2]), [1], Linear()) == 5

    def test_merge_only(self):
        tr = simulate(Instance.uniform(1, 0, 3), [1, 1, 2], Linear())
        assert tr.total_merge == 4

    def test_hand_linear(self):
        assert cost_of(Instance.uniform(1, 1, 3), [1, 2, 2], Linear()) == 9

    def test_empty(self):
        assert cost_of(Instance([]), [], Linear()) == 0

    def test_bad_width(self):
        with pytest.raises(ScheduleError) as e:
            simulate(Instance.uniform(1, 1, 2), [1, 3], Linear())
        assert e.value.t == 2

    def test_capped_overflow(self):
        with pytest.raises(InfeasibleScheduleError) as e:
            simulate(Instance.uniform(1, 1, 3), [1, 1, 1], CappedK(2))
        assert e.value.t == 3

    def test_zero_length_still_reads(self):
        assert cost_of(Instance([0.0], [2.0]), [1], Linear()) == 2.0


class TestValidate:
    def test_examples(self):
        assert validate_schedule(3, Schedule([1, 1, 2]))
        v = validate_schedule(2, Schedule([1, 3]))
        assert not v and v.t == 2
        v = validate_schedule(Instance.uniform(1, 1, 3), Schedule([1, 1, 1]), CappedK(2))
        assert not v and v.t == 3 and "infeasible" in v.reason


class TestModels:
    def test_step_coef(self):
        assert Linear().step_coef(4) == 1
        assert CappedK(2).step_coef(1) == 0
        assert CappedK(2).step_coef(2) is None
        g = sqrt_model()
        assert g.step_coef(0) == 1
        assert g.step_coef(3) == pytest.approx(2 - np.sqrt(3))

    def test_parse(self):
        assert parse_model("linear") == Linear()
        assert parse_model("capped:4") == CappedK(4)
        assert parse_model("power:2").f(3) == 9
        with pytest.raises(ValueError):
            parse_model("bogus")
        with pytest.raises(ValueError):
            CappedK(0)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_stack_recurrence_and_conservation(data):
    inst = data.draw(instances(min_n=1, max_n=30))
    sched = data.draw(schedules(len(inst)))
    tr = simulate(inst, sched, Linear())
    k = 0
    for t, w in enumerate(sched.widths):
        k = k + 2 - w
        assert tr.stack_sizes[t] == k >= 1
        assert sum(tr.stacks[t]) == pytest.approx(inst.ell(1, t + 1), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_linear_dominates_smaller_f(data):
    inst = data.draw(instances(min_n=1, max_n=20))
    sched = data.draw(schedules(len(inst)))
    lin = cost_of(inst, sched, Linear())
    assert cost_of(inst, sched, sqrt_model()) <= lin + 1e-9 * max(1, lin)
    assert cost_of(inst, sched, General(lambda k: min(k, 2))) <= lin + 1e-9 * max(1, lin)


def test_simulate_is_pure(rng):
    inst = Instance(rng.random(50), rng.random(50))
    sched = widths_from_fractions(rng.random(50))
    a, b = simulate(inst, sched, Linear()), simulate(inst, sched, Linear())
    assert np.array_equal(a.merge_costs, b.merge_costs) and np.array_equal(a.read_costs, b.read_costs)


class TestIO:
    def test_roundtrip(self, rng, tmp_path):
        inst = Instance(rng.lognormal(0, 3, 40), rng.exponential(1, 40))
        write_instance(inst, tmp_path / "i.csv")
        assert read_instance(tmp_path / "i.csv") == inst
        sched = widths_from_fractions(rng.random(40))
        write_schedule(sched, tmp_path / "s.csv")
        assert read_schedule(tmp_path / "s.csv") == sched

    def test_errors_carry_line(self):
        with pytest.raises(FormatError) as e:
            read_instance(io.StringIO("t,length,read_rate\n1,1,1\n3,1,1\n"))
        assert e.value.line == 3
        with pytest.raises(FormatError) as e:
            read_instance(io.StringIO("t,length,read_rate\n1,x,1\n"))
        assert e.value.line == 2
        with pytest.raises(FormatError):
            read_instance(io.StringIO("a,b\n"))
        with pytest.raises(FormatError) as e:
            read_instance(io.StringIO("t,length,read_rate\n1,-1,1\n"))
        assert e.value.line == 2
