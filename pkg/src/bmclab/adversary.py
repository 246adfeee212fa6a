"""Adaptive lower-bound instances for the capped model.

The adversary plays a nested phase game against a deterministic policy
using a ladder of well-separated lengths.  Level-1 phases pad with zeros,
and those runs get astronomically long (``L_1`` is doubly exponential in
``L_K``), so arrivals are kept run-length encoded, all arithmetic is exact
(``Fraction``), and steady stretches of zeros are fast-forwarded through
:meth:`Policy.steady_zero_steps`.
"""

from __future__ import annotations

import bisect
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import BMCError, Instance, Schedule, ScheduleError
from .policies import Policy, PolicyError


class LadderOverflowError(BMCError, OverflowError):
    pass


class AdversaryError(BMCError, RuntimeError):
    pass


@dataclass
class LengthLadder:
    """Separation parameters ``L_1 > ... > L_K`` and the h-lengths
    ``w[h][i-1] = L_K**i / L_h`` for ``i = 1..N_h`` with ``N_h = prod_{j>h} L_j``."""

    K: int
    L: list[int]  # L[h-1] = L_h
    N: list[int]  # N[h-1] = N_h
    exact: bool  # built with the full recurrence rather than overrides
    separation: float = field(init=False)

    def __post_init__(self):
        self.separation = self._separation()

    def w(self, h: int, i: int) -> Fraction:
        return Fraction(self.L[-1] ** i, self.L[h - 1])

    def values(self):
        for h in range(1, self.K + 1):
            for i in range(1, self.N[h - 1] + 1):
                yield h, i, self.w(h, i)

    def _separation(self) -> float:
        """Smallest ratio between consecutive distinct ladder values."""
        # within a level consecutive values differ by exactly L_K; across
        # levels only the top of level h and the bottom of level h+1 meet
        ratios = [Fraction(self.L[-1])] if any(n > 1 for n in self.N) else []
        for h in range(1, self.K):
            ratios.append(self.w(h + 1, 1) / self.w(h, self.N[h - 1]))
        if not ratios:
            return math.inf
        return float(min(ratios))

    def has_value(self, value, h: int) -> bool:
        """Whether ``value`` is one of the h-lengths (h = 0 means zero)."""
        if h == 0:
            return value == 0
        if not 1 <= h <= self.K or value <= 0:
            return False
        x = Fraction(value) * self.L[h - 1]  # must equal L_K**i
        if x.denominator != 1:
            return False
        p, i = x.numerator, 0
        while p % self.L[-1] == 0 and p > 1:
            p //= self.L[-1]
            i += 1
        return p == 1 and 1 <= i <= self.N[h - 1]


def _check_float(x: Fraction) -> None:
    f = float(x) if x < Fraction(sys.float_info.max) else math.inf
    if not (math.isfinite(f) and (x == 0 or f > 0)):
        raise LadderOverflowError("ladder value not representable as a 64-bit float")


def build_ladder(K: int, L_K, overrides: Sequence[int] | None = None) -> LengthLadder:
    """Ladder from ``L_h = L_{h+1} * L_K**N_h`` or from explicit ``L_1..L_{K-1}``.

    The recurrence fits in 64-bit floats only for tiny ``K`` (``K = 3``,
    ``L_3 = 4`` already needs ``4**4096``); in that case an overflow error
    points to ``overrides``, which accept any decreasing ladder and report
    the separation they achieve.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if int(L_K) != L_K:
        raise ValueError("L_K must be an integer (phase capacities are products of L_h)")
    L_K = int(L_K)
    if L_K <= K:
        raise ValueError("L_K must exceed K")
    if overrides is not None:
        L = [int(x) for x in overrides] + [L_K]
        if len(L) != K or any(int(a) != a for a in overrides):
            raise ValueError(f"expected {K - 1} integer overrides")
        if any(a <= b for a, b in zip(L, L[1:])):
            raise ValueError("overrides must form a decreasing ladder above L_K")
        N = [math.prod(L[h:]) for h in range(1, K + 1)]
        ladder = LengthLadder(K, L, N, exact=False)
    else:
        L = [0] * K
        N = [1] * K
        L[K - 1] = L_K
        for h in range(K - 1, 0, -1):
            N[h - 1] = math.prod(L[h:])
            if N[h - 1] * math.log10(L_K) > 300:
                raise LadderOverflowError(
                    f"L_{h} = L_{h + 1} * {L_K}**{N[h - 1]} overflows 64-bit floats; pass overrides"
                )
            L[h - 1] = L[h] * L_K ** N[h - 1]
        ladder = LengthLadder(K, L, N, exact=True)
    for h in range(1, K + 1):
        _check_float(Fraction(ladder.L[h - 1]))
        _check_float(ladder.w(h, 1))
        _check_float(ladder.w(h, ladder.N[h - 1]))
    return ladder


@dataclass
class AdversaryStats:
    """``n[h][i]``: zeros (h = 1) or (h-1)-phases inside the i-th h-phase;
    ``tau[h][i]``: how many of those sub-phases timed out (h >= 2);
    ``timed_out[h][i]``: whether the phase itself ran to its cap."""

    K: int
    n: dict = field(default_factory=dict)
    tau: dict = field(default_factory=dict)
    timed_out: dict = field(default_factory=dict)

    def totals(self) -> dict:
        return {h: len(v) for h, v in self.n.items()}

    def phase_bound(self, ladder: LengthLadder) -> Fraction:
        """``2 + (1/K) * sum_h sum_i w_{h,i} n_{h,i}``."""
        s = sum(ladder.w(h, i + 1) * c for h, counts in self.n.items() for i, c in enumerate(counts))
        return 2 + Fraction(s) / self.K

    def weighted_sum(self, ladder: LengthLadder) -> Fraction:
        return sum(
            (ladder.w(h, i + 1) * c for h, counts in self.n.items() for i, c in enumerate(counts)),
            Fraction(0),
        )

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "n_h": {str(h): v for h, v in self.totals().items()},
            "n_hi": {str(h): list(v) for h, v in self.n.items()},
            "tau_hi": {str(h): list(v) for h, v in self.tau.items()},
            "timed_out": {str(h): [bool(x) for x in v] for h, v in self.timed_out.items()},
        }


@dataclass
class RunLengthInstance:
    """Arrivals as runs ``(length, level, count)``; read rates are all zero."""

    runs: list[tuple[Fraction, int, int]]

    @property
    def n(self) -> int:
        return sum(c for _, _, c in self.runs)

    def __len__(self):
        return self.n

    def to_instance(self, max_n: int = 10**6) -> Instance:
        if self.n > max_n:
            raise AdversaryError(f"instance has {self.n} steps, more than max_n={max_n}")
        lengths = []
        for x, _, c in self.runs:
            lengths.extend([float(x)] * c)
        return Instance(lengths)

    def levels(self, max_n: int = 10**6) -> list[int]:
        if self.n > max_n:
            raise AdversaryError(f"instance has {self.n} steps, more than max_n={max_n}")
        out = []
        for _, h, c in self.runs:
            out.extend([h] * c)
        return out


@dataclass
class AdversaryResult:
    instance: RunLengthInstance
    stats: AdversaryStats
    policy_cost: Fraction
    policy_max_cost: Fraction
    policy_steps: int  # calls to policy.step (the rest was fast-forwarded)

    def __iter__(self):
        # unpacks like (instance, stats, policy_cost)
        return iter((self.instance, self.stats, self.policy_cost))


class _Game:
    def __init__(self, policy: Policy, ladder: LengthLadder, max_policy_steps: int):
        self.policy = policy
        self.ladder = ladder
        self.K = ladder.K
        self.max_steps = max_policy_steps
        self.files: list[list] = []  # [total, max, first arrival index], bottom first
        self.starts: list[int] = []
        self.t = 0
        self.cost = Fraction(0)
        self.max_cost = Fraction(0)
        self.steps = 0
        self.runs: list[list] = []
        self.used = [0] * self.K
        self.stats = AdversaryStats(self.K, {h: [] for h in range(1, self.K + 1)},
                                    {h: [] for h in range(1, self.K + 1)},
                                    {h: [] for h in range(1, self.K + 1)})

    def _record(self, x, h, count):
        if self.runs and self.runs[-1][1] == h and self.runs[-1][0] == x:
            self.runs[-1][2] += count
        else:
            self.runs.append([x, h, count])

    def emit(self, x, h) -> int:
        if self.steps >= self.max_steps:
            raise AdversaryError(
                f"policy {self.policy} needed more than {self.max_steps} explicit steps; "
                "zero runs were not fast-forwarded"
            )
        self.steps += 1
        self.t += 1
        w = self.policy.step(x, 0)
        files = self.files
        k = len(files)
        if not 1 <= w <= k + 1:
            raise ScheduleError(self.t, f"{self.policy} chose width {w} with {k} files")
        if w == 1:
            files.append([x, x, self.t])
            self.starts.append(self.t)
        else:
            seg = files[k - w + 1 :]
            total = sum((f[0] for f in seg), x)
            mx = max(max(f[1] for f in seg), x)
            first = seg[0][2]
            del files[k - w + 1 :], self.starts[k - w + 1 :]
            files.append([total, mx, first])
            self.starts.append(first)
        self.cost += files[-1][0]
        self.max_cost += files[-1][1]
        if len(files) > self.K:
            raise ScheduleError(self.t, f"{self.policy} grew the stack to {len(files)} > K={self.K}")
        self._record(x, h, 1)
        return w

    def merged_with_larger(self, arrival: int, value) -> bool:
        i = bisect.bisect_right(self.starts, arrival) - 1
        return self.files[i][1] > value

    def next_length(self, h):
        i = self.used[h - 1] + 1
        if i > self.ladder.N[h - 1]:
            raise AdversaryError(f"ladder exhausted at level {h} (capacity {self.ladder.N[h - 1]})")
        self.used[h - 1] = i
        return self.ladder.w(h, i)

    def zero_phase(self, cap: int, value, at: int) -> tuple[int, bool]:
        """Emit zeros until ``value`` is merged with a larger length or ``cap`` zeros."""
        count = 0
        while count < cap:
            before = len(self.files)
            w = self.emit(Fraction(0), 0)
            count += 1
            if self.merged_with_larger(at, value):
                return count, False
            if w == 2 and len(self.files) == before and count < cap:
                m = self.policy.steady_zero_steps()
                m = min(m, cap - count)
                if m > 0:
                    m = int(m)
                    self.policy.skip_zeros(m)
                    top = self.files[-1]
                    self.cost += m * top[0]
                    self.max_cost += m * top[1]
                    self.t += m
                    self._record(Fraction(0), 0, m)
                    count += m
                    if self.merged_with_larger(at, value):
                        return count, False
        return count, True

    def phase(self, h: int) -> bool:
        """Run one h-phase; return True when it timed out."""
        value = self.next_length(h)
        self.emit(value, h)
        at = self.t
        cap = self.ladder.L[h - 1]
        top = h == self.K
        if h == 1:
            count, timed_out = self.zero_phase(cap, value, at)
            if top:
                timed_out = True
            self.stats.n[1].append(count)
            self.stats.tau[1].append(0)
            self.stats.timed_out[1].append(timed_out)
            return timed_out
        count = tau = 0
        while True:
            tau += self.phase(h - 1)
            count += 1
            if count >= cap:
                timed_out = True
                break
            if not top and self.merged_with_larger(at, value):
                timed_out = False
                break
        self.stats.n[h].append(count)
        self.stats.tau[h].append(tau)
        self.stats.timed_out[h].append(timed_out)
        return timed_out


def run_adversary(policy: Policy, ladder: LengthLadder, max_policy_steps: int = 2_000_000) -> AdversaryResult:
    """Play the nested phase game against ``policy`` under ``CappedK(ladder.K)``.

    A level-h phase emits the next h-length, then runs sub-phases (zeros
    when h = 1) until that length has been merged with a larger one or the
    phase has run ``L_h`` of them.  The stop test follows each sub-phase,
    so every phase contains at least one.  The whole instance is one K-phase.
    """
    policy.reset()
    policy.begin(None)
    game = _Game(policy, ladder, max_policy_steps)
    try:
        game.phase(ladder.K)
    except PolicyError as exc:
        raise AdversaryError(str(exc)) from exc
    runs = RunLengthInstance([tuple(r) for r in game.runs])
    return AdversaryResult(runs, game.stats, game.cost, game.max_cost, game.steps)


# ---------------------------------------------------------------------------


def max_based_cost(instance: Instance, schedule: Schedule | Sequence[int]) -> float:
    """Cost when a merged file is only as long as its longest part."""
    widths = schedule.widths if isinstance(schedule, Schedule) else tuple(schedule)
    if len(widths) != len(instance):
        raise ScheduleError(min(len(widths), len(instance)) + 1, "schedule length does not match instance")
    stack: list[float] = []
    total = 0.0
    for t, (x, w) in enumerate(zip(instance.lengths.tolist(), widths), start=1):
        if not 1 <= w <= len(stack) + 1:
            raise ScheduleError(t, f"width {w} outside [1, {len(stack) + 1}]")
        stack.append(x)
        if w > 1:
            m = max(stack[-w:])
            del stack[-w:]
            stack.append(m)
        total += stack[-1]
    return total


def _slot(h: int, b: int) -> int:
    return h + 1 if h < b else h


def reference_schedule_cost(instance: RunLengthInstance, K: int, b: int) -> Fraction:
    """Max-based cost of the K-slot schedule that sends an h-length to slot
    ``h + 1`` when ``h < b`` and to slot ``h`` otherwise (zeros are level 0).
    Slot 1 is the top of the stack; sending to slot g merges slots 1..g."""
    slots: list = [None] * (K + 1)  # slots[g] holds the max-based length
    cost = Fraction(0)
    for x, h, count in instance.runs:
        g = _slot(h, b)
        if g < 1 or g > K:
            raise AdversaryError(f"level {h} does not fit K={K}")
        for _ in range(1 if count > 1 and h == 0 else count):
            m = x
            for s in range(1, g + 1):
                if slots[s] is not None:
                    m = max(m, slots[s])
                    slots[s] = None
            slots[g] = m
            cost += m
        if h == 0 and count > 1:
            # later zeros re-merge slot 1 with nothing new
            cost += (count - 1) * slots[g]
    return cost


def reference_schedule_widths(levels: Sequence[int], K: int, b: int) -> list[int]:
    """The same schedule written as merge widths (for small instances)."""
    occupied = [False] * (K + 1)
    widths = []
    for h in levels:
        g = _slot(h, b)
        w = 1 + sum(occupied[1 : g + 1])
        for s in range(1, g + 1):
            occupied[s] = False
        occupied[g] = True
        widths.append(w)
    return widths


def reference_schedules_bound(instance: RunLengthInstance, ladder: LengthLadder, stats: AdversaryStats | None = None) -> Fraction:
    """Smallest max-based cost among the K reference schedules; bounds the
    max-based optimum from above."""
    for x, h, _ in instance.runs:
        if not ladder.has_value(x, h):
            raise AdversaryError("instance does not match the ladder")
    if stats is not None and stats.K != ladder.K:
        raise AdversaryError("stats do not match the ladder")
    return min(reference_schedule_cost(instance, ladder.K, b) for b in range(1, ladder.K + 1))


def adversary_ratio(result: AdversaryResult, ladder: LengthLadder) -> float:
    bound = reference_schedules_bound(result.instance, ladder, result.stats)
    return float(Fraction(result.policy_cost) / bound)


__all__ = [
    "AdversaryError",
    "AdversaryResult",
    "AdversaryStats",
    "LadderOverflowError",
    "LengthLadder",
    "RunLengthInstance",
    "adversary_ratio",
    "build_ladder",
    "max_based_cost",
    "reference_schedule_cost",
    "reference_schedule_widths",
    "reference_schedules_bound",
    "run_adversary",
]
