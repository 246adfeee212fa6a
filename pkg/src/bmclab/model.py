"""Instances, read-cost models, schedules and the stack simulator.

A schedule is a list of merge widths.  At step ``t`` a new file of length
``lengths[t]`` is pushed on the stack, then the top ``widths[t]`` files
(the new one included) are merged into a single file.  The merge costs the
merged length; reads cost ``reads[t] * f(k)`` where ``k`` is the stack size
after the merge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class BMCError(Exception):
    """Base class for errors raised by bmclab."""


class ScheduleError(BMCError, ValueError):
    """A merge width is out of range at some step ``t`` (1-based)."""

    def __init__(self, t: int, message: str):
        super().__init__(f"t={t}: {message}")
        self.t = t


class InfeasibleScheduleError(ScheduleError):
    """The stack grew beyond the cap of a :class:`CappedK` model."""


# ---------------------------------------------------------------------------
# instances


class Instance:
    """Time-ordered ``(length, read_rate)`` pairs, t = 1..n.

    Range sums use 1-based inclusive indices, like ``ell(i, j)`` for the
    total length arriving in ``[i, j]``.
    """

    __slots__ = ("lengths", "reads", "_lp", "_rp")

    def __init__(self, lengths, reads=None):
        lengths = np.asarray(lengths, dtype=np.float64).reshape(-1)
        if reads is None:
            reads = np.zeros_like(lengths)
        reads = np.asarray(reads, dtype=np.float64).reshape(-1)
        if lengths.shape != reads.shape:
            raise ValueError("lengths and reads must have the same size")
        if np.any(lengths < 0) or np.any(reads < 0):
            raise ValueError("lengths and read rates must be non-negative")
        if not (np.all(np.isfinite(lengths)) and np.all(np.isfinite(reads))):
            raise ValueError("lengths and read rates must be finite")
        lengths.setflags(write=False)
        reads.setflags(write=False)
        self.lengths = lengths
        self.reads = reads
        self._lp = None
        self._rp = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "Instance":
        pairs = list(pairs)
        if not pairs:
            return cls([], [])
        ell, r = zip(*pairs)
        return cls(ell, r)

    @classmethod
    def uniform(cls, mean_length: float, mean_read: float, n: int) -> "Instance":
        return cls(np.full(n, float(mean_length)), np.full(n, float(mean_read)))

    def __len__(self) -> int:
        return self.lengths.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return np.array_equal(self.lengths, other.lengths) and np.array_equal(
            self.reads, other.reads
        )

    def __repr__(self):
        return f"Instance(n={self.n})"

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.lengths.tolist(), self.reads.tolist()))

    @property
    def length_prefix(self) -> np.ndarray:
        """``P[x]`` = total length of the first ``x`` steps (``P[0] = 0``)."""
        if self._lp is None:
            self._lp = np.concatenate(([0.0], np.cumsum(self.lengths)))
        return self._lp

    @property
    def read_prefix(self) -> np.ndarray:
        if self._rp is None:
            self._rp = np.concatenate(([0.0], np.cumsum(self.reads)))
        return self._rp

    def ell(self, i: int, j: int) -> float:
        if i > j:
            return 0.0
        return float(self.length_prefix[j] - self.length_prefix[i - 1])

    def r(self, i: int, j: int) -> float:
        if i > j:
            return 0.0
        return float(self.read_prefix[j] - self.read_prefix[i - 1])

    def sub(self, i: int, j: int) -> "Instance":
        """The sub-instance ``I[i, j]`` (1-based, inclusive)."""
        return Instance(self.lengths[i - 1 : j], self.reads[i - 1 : j])

    def truncate(self, n: int) -> "Instance":
        return Instance(self.lengths[:n], self.reads[:n])


# ---------------------------------------------------------------------------
# read-cost models


class CostModel:
    """Non-decreasing read-cost function ``f`` over stack sizes."""

    #: largest feasible stack size, or None when unbounded
    max_stack: int | None = None

    def f(self, k: int) -> float:
        raise NotImplementedError

    def feasible(self, k: int) -> bool:
        return self.max_stack is None or k <= self.max_stack

    def step_coef(self, d: int) -> float | None:
        """``f_d(1)``: the read cost of one extra level sitting on ``d`` others.

        Returns None when a file at depth ``d`` would be infeasible.
        """
        if not self.feasible(d + 1):
            return None
        if d == 0:
            return float(self.f(1))
        return float(self.f(d + 1) - self.f(d))

    def read_costs(self, reads: np.ndarray, sizes: np.ndarray) -> np.ndarray:
        if len(sizes) == 0:
            return np.zeros(0)
        top = int(sizes.max())
        table = np.array([0.0] + [float(self.f(k)) for k in range(1, top + 1)])
        return reads * table[sizes]


@dataclass(frozen=True)
class CappedK(CostModel):
    """``f(k) = 0`` for ``k <= K``; larger stacks are infeasible."""

    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")

    @property
    def max_stack(self) -> int:
        return self.K

    def f(self, k: int) -> float:
        return 0.0

    def __str__(self):
        return f"capped:{self.K}"


@dataclass(frozen=True)
class Linear(CostModel):
    """``f(k) = k``: every read scans every level."""

    def f(self, k: int) -> float:
        return float(k)

    def step_coef(self, d: int) -> float:
        return 1.0

    def read_costs(self, reads, sizes):
        return reads * sizes

    def __str__(self):
        return "linear"


@dataclass(frozen=True)
class General(CostModel):
    """Arbitrary non-decreasing ``f`` on positive integers."""

    func: Callable[[int], float]
    name: str = field(default="general", compare=False)

    def f(self, k: int) -> float:
        return float(self.func(k))

    def __str__(self):
        return self.name


def sqrt_model() -> General:
    return General(math.sqrt, name="sqrt")


def parse_model(text: str) -> CostModel:
    """Parse ``linear``, ``capped:K``, ``sqrt`` or ``power:P``."""
    text = text.strip().lower()
    if text == "linear":
        return Linear()
    if text == "sqrt":
        return sqrt_model()
    kind, _, arg = text.partition(":")
    if kind in ("capped", "cappedk") and arg:
        return CappedK(int(arg))
    if kind == "power" and arg:
        p = float(arg)
        if p < 0:
            raise ValueError("power model needs a non-negative exponent")
        return General(lambda k, p=p: k**p, name=f"power:{arg}")
    raise ValueError(f"unknown cost model {text!r}")


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Schedule:
    """Merge widths ``j_1..j_n``; each width counts the newly inserted file."""

    widths: tuple[int, ...]

    def __init__(self, widths: Iterable[int]):
        object.__setattr__(self, "widths", tuple(int(w) for w in widths))

    def __len__(self):
        return len(self.widths)

    def __iter__(self):
        return iter(self.widths)

    def __getitem__(self, idx):
        return self.widths[idx]

    def stack_sizes(self) -> list[int]:
        """``k_t`` for every step (no range checks)."""
        k, out = 0, []
        for w in self.widths:
            k = k + 2 - w
            out.append(k)
        return out


@dataclass(frozen=True)
class Validity:
    ok: bool
    t: int | None = None
    reason: str = "valid"

    def __bool__(self):
        return self.ok


def validate_schedule(
    instance: Instance | int, schedule: Schedule | Sequence[int], model: CostModel | None = None
) -> Validity:
    """Report the first width-bound or stack-cap violation, or validity."""
    n = instance if isinstance(instance, int) else len(instance)
    widths = schedule.widths if isinstance(schedule, Schedule) else tuple(schedule)
    if len(widths) != n:
        return Validity(False, None, f"schedule has {len(widths)} steps for n={n}")
    cap = model.max_stack if model is not None else None
    k = 0
    for t, w in enumerate(widths, start=1):
        if not 1 <= w <= k + 1:
            return Validity(False, t, f"width {w} outside [1, {k + 1}] ({k + 1} files present)")
        k = k + 2 - w
        if cap is not None and k > cap:
            return Validity(False, t, f"stack size {k} exceeds K={cap} (infeasible)")
    return Validity(True)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationTrace:
    merge_costs: np.ndarray
    read_costs: np.ndarray
    stack_sizes: np.ndarray
    stacks: list[tuple[float, ...]] | None = None  # top-to-bottom, per step
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.merge_costs)

    @property
    def total_merge(self) -> float:
        return float(self.merge_costs.sum())

    @property
    def total_read(self) -> float:
        return float(self.read_costs.sum())

    @property
    def total_cost(self) -> float:
        return self.total_merge + self.total_read

    @property
    def max_stack(self) -> int:
        return int(self.stack_sizes.max()) if self.n else 0

    def cumulative_costs(self) -> np.ndarray:
        """Total cost of every prefix of the run."""
        return np.cumsum(self.merge_costs + self.read_costs)


def simulate(
    instance: Instance,
    schedule: Schedule | Sequence[int],
    model: CostModel,
    keep_stacks: bool = True,
) -> SimulationTrace:
    widths = schedule.widths if isinstance(schedule, Schedule) else tuple(schedule)
    n = len(instance)
    if len(widths) != n:
        raise ScheduleError(min(len(widths), n) + 1, f"schedule has {len(widths)} steps for n={n}")
    cap = model.max_stack
    lengths = instance.lengths.tolist()
    stack: list[float] = []  # bottom first, top at the end
    merge = np.empty(n)
    sizes = np.empty(n, dtype=np.int64)
    stacks = [] if keep_stacks else None
    for t in range(n):
        w = widths[t]
        k = len(stack)
        if not 1 <= w <= k + 1:
            raise ScheduleError(t + 1, f"width {w} outside [1, {k + 1}]")
        stack.append(lengths[t])
        if w > 1:
            merged = sum(stack[-w:])
            del stack[-w:]
            stack.append(merged)
        merge[t] = stack[-1]
        k = len(stack)
        if cap is not None and k > cap:
            raise InfeasibleScheduleError(t + 1, f"stack size {k} exceeds K={cap}")
        sizes[t] = k
        if keep_stacks:
            stacks.append(tuple(reversed(stack)))
    reads = model.read_costs(instance.reads, sizes)
    return SimulationTrace(merge, np.asarray(reads, dtype=np.float64), sizes, stacks)


def cost_of(instance: Instance, schedule: Schedule | Sequence[int], model: CostModel) -> float:
    return simulate(instance, schedule, model, keep_stacks=False).total_cost
