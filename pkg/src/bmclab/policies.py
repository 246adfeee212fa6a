"""Online compaction policies.

Every policy sees one arrival at a time and answers with a merge width.
Policies keep only the bookkeeping they need (mostly file sizes); the
simulator in :mod:`bmclab.model` is the source of truth for costs.

Arithmetic inside ``step`` avoids float-only operations so that the
adversary can drive Default, BRB and the capped doubling policy with
exact ``Fraction`` lengths.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import BMCError, CappedK, CostModel, Instance, Linear, SimulationTrace, simulate
from .opt import UniformParams, approx2_linear, uniform_opt_linear, uniform_schedule_cappedK
from .tree import tree_to_schedule


class PolicyError(BMCError, RuntimeError):
    """A policy broke one of its own invariants (a bug, not bad input)."""


@dataclass(frozen=True)
class PolicyDecision:
    width: int


class Policy:
    name = "policy"

    def reset(self) -> None:
        raise NotImplementedError

    def begin(self, n: int | None) -> None:
        """Horizon hint; only the known-distribution policy uses it."""

    def step(self, length, read) -> int:
        raise NotImplementedError

    def steady_zero_steps(self) -> float:
        """How many more zero-length arrivals are guaranteed to be answered
        with width 2 while leaving the policy state unchanged (except for
        cost counters).  Called right after such a step was observed."""
        return 0

    def skip_zeros(self, m: int) -> None:
        """Apply ``m`` zero arrivals covered by :meth:`steady_zero_steps`."""
        if m:
            raise PolicyError(f"{self.name} cannot fast-forward zero arrivals")

    def diagnostics(self) -> dict:
        return {}

    def __str__(self):
        return self.name


def policy_step(state: Policy, arrival) -> tuple[PolicyDecision, Policy]:
    length, read = arrival
    return PolicyDecision(state.step(length, read)), state


def run_policy(instance: Instance, policy: Policy, model: CostModel) -> SimulationTrace:
    policy.reset()
    policy.begin(len(instance))
    widths = [policy.step(x, r) for x, r in zip(instance.lengths.tolist(), instance.reads.tolist())]
    trace = simulate(instance, widths, model, keep_stacks=False)
    trace.diagnostics = policy.diagnostics()
    trace.diagnostics["widths"] = widths
    return trace


def policy_widths(instance: Instance, policy: Policy) -> list[int]:
    policy.reset()
    policy.begin(len(instance))
    return [policy.step(x, r) for x, r in zip(instance.lengths.tolist(), instance.reads.tolist())]


# ---------------------------------------------------------------------------


class MergeAll(Policy):
    """Always merge everything: the only schedule allowed when K = 1."""

    name = "merge-all"

    def reset(self):
        self.k = 0

    def __init__(self):
        self.reset()

    def step(self, length, read):
        w = self.k + 1
        self.k = 1
        return w

    def steady_zero_steps(self):
        return math.inf

    def skip_zeros(self, m):
        pass


class Default(Policy):
    """Merge the shortest top segment that keeps every file at least as
    large as everything above it and the stack within ``K`` files.

    Surviving file ``i`` needs ``s_i >= (old files above i) + x`` whatever the
    width, so the width is fixed by the deepest file that fails this test.
    """

    def __init__(self, K: int):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = K
        self.name = f"default:{K}"
        self.reset()

    def reset(self):
        self.sizes = []  # bottom first

    def step(self, length, read):
        sizes = self.sizes
        k = len(sizes)
        above = sum(sizes) if sizes else 0
        cut = k  # index of the deepest file that must be merged
        for i, s in enumerate(sizes):
            above -= s
            if s < above + length:
                cut = i
                break
        w = max(1, k - cut + 1, k + 2 - self.K)
        if w == 1:
            sizes.append(length)
        else:
            merged = sum(sizes[k - w + 1 :]) + length
            del sizes[k - w + 1 :]
            sizes.append(merged)
        return w

    def steady_zero_steps(self):
        # a zero arrival never breaks the ordering; at the cap it is merged
        # into the top file and nothing changes
        return math.inf if len(self.sizes) >= self.K else 0

    def skip_zeros(self, m):
        if m and len(self.sizes) < self.K:
            raise PolicyError("default: zero arrivals below the cap grow the stack")

    def diagnostics(self):
        return {"stack": list(self.sizes)}


class _BrbLevel:
    """One level of the recursive rent-or-buy policy on a top segment of the stack."""

    __slots__ = ("h", "started", "total", "child_cost", "size", "child", "phases")

    def __init__(self, h: int):
        self.h = h
        self.started = False
        self.total = 0  # total length that ever entered this scope
        self.child_cost = 0  # cost paid by the child since the last full merge
        self.size = 0  # files of this scope on the stack
        self.child = None
        self.phases = 0

    def plan(self, x):
        """Return ``(width, cost, plan_of_child_or_None)`` for arrival ``x``."""
        full = (self.size + 1, self.total + x, None)
        if self.h == 1 or not self.started:
            return full
        cplan = self.child.plan(x)
        if self.child_cost + cplan[1] >= (self.h - 1) * (self.total + x):
            return full
        return cplan[0], cplan[1], cplan

    def commit(self, x, plan):
        self.total += x
        if plan[2] is None:
            self.started = True
            self.size = 1
            self.child_cost = 0
            self.phases += 1
            if self.h > 1:
                self.child = _BrbLevel(self.h - 1)
        else:
            self.child.commit(x, plan[2])
            self.child_cost += plan[1]
            self.size = 1 + self.child.size


class Brb(Policy):
    """Recursive rent-or-buy.  A level keeps delegating arrivals to its child
    level (which never touches the bottom file) until the child would have
    paid at least ``h - 1`` times the length of the whole scope, then merges
    the scope into one file."""

    def __init__(self, K: int):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = K
        self.name = f"brb:{K}"
        self.reset()

    def reset(self):
        self.root = _BrbLevel(self.K)
        self.acting = []

    def step(self, length, read):
        plan = self.root.plan(length)
        self.root.commit(length, plan)
        if self.root.size > self.K:
            raise PolicyError(f"brb:{self.K} stack size {self.root.size} above K")
        return plan[0]

    def _path(self):
        levels, lv = [], self.root
        while lv is not None:
            levels.append(lv)
            lv = lv.child
        return levels

    def steady_zero_steps(self):
        # Steady only when every level delegates down to level 1, which holds
        # a single file and merges the zero into it; each such step adds
        # T_1 to every ancestor's child cost until one reaches its threshold.
        levels = self._path()
        bottom = levels[-1]
        if bottom.h != 1 or bottom.size != 1:
            return 0
        t1 = bottom.total
        m = math.inf
        for lv in levels[:-1]:
            if not lv.started:
                return 0
            gap = (lv.h - 1) * lv.total - lv.child_cost
            if t1 == 0:
                q = math.inf if gap > 0 else 1
            else:
                q = max(1, math.ceil(gap / t1))
            m = min(m, q - 1)
        return m

    def skip_zeros(self, m):
        if not m:
            return
        levels = self._path()
        t1 = levels[-1].total
        for lv in levels[:-1]:
            lv.child_cost += m * t1

    def diagnostics(self):
        return {"phases": [lv.phases for lv in self._path()]}


class LinearOnline(Policy):
    """Invariant-driven policy for linear read costs.

    Each stack file ``v`` carries ``lL_v`` (length of its left subtree, fixed
    when it is formed) and ``rR_v`` (reads that arrived after it formed).
    A new arrival ``(x, r)`` merges from the deepest ``v`` with
    ``lL_v < rR_v + r`` through the top; if there is none it is appended.

    ``rR_v`` is kept implicitly as ``Rcum - Rcum_at_formation`` so the test
    becomes ``key_v < Rcum`` with ``key_v = lL_v + Rcum_at_formation``; keys
    are kept with a running prefix minimum, so the deepest violator is a
    binary search away.
    """

    name = "linear-online"

    def __init__(self, track_potential: bool = True, check: bool = True):
        self.track_potential = track_potential
        self.check = check
        self.reset()

    def reset(self):
        self.lens = []  # file lengths, bottom first
        self.neg_pmin = []  # -(prefix min of keys), non-decreasing for bisect
        self.own = []  # (length, read, rcum at formation) of each spine node
        self.rcum = 0.0
        self.frozen = 0.0  # potential of nodes that left the spine (already doubled)
        self.spine_base = 0.0  # sum of own length + read over spine nodes
        self.spine_rc = 0.0  # sum of rcum at formation over spine nodes
        self.potentials = []

    def step(self, length, read):
        self.rcum += read
        rc = self.rcum
        i = bisect.bisect_right(self.neg_pmin, -rc)  # first i with pmin[i] < rc
        k = len(self.lens)
        if i < k:
            absorbed = sum(self.lens[i:])
            for ell, r, rc0 in self.own[i:]:
                self.frozen += 2.0 * (ell + r + (rc - read - rc0))
                self.spine_base -= ell + r
                self.spine_rc -= rc0
            del self.lens[i:], self.neg_pmin[i:], self.own[i:]
            merged = absorbed + length
            left_mass = absorbed
        else:
            merged = length
            left_mass = 0.0
        key = left_mass + rc
        prev = -self.neg_pmin[-1] if self.neg_pmin else math.inf
        self.lens.append(merged)
        self.neg_pmin.append(-min(prev, key))
        self.own.append((length, read, rc))
        self.spine_base += length + read
        self.spine_rc += rc
        if self.check and -self.neg_pmin[-1] < rc:
            raise PolicyError(f"linear-online invariant broken after {len(self.potentials) + 1} steps")
        if self.track_potential:
            self.potentials.append(self.potential())
        return k - i + 1

    def potential(self) -> float:
        spine_rr = len(self.own) * self.rcum - self.spine_rc
        return self.frozen + self.spine_base + spine_rr

    def invariant_holds(self) -> bool:
        return not self.neg_pmin or -self.neg_pmin[-1] >= self.rcum

    def diagnostics(self):
        d = {"invariant_ok": self.invariant_holds()}
        if self.track_potential:
            d["potential"] = np.asarray(self.potentials)
        return d


@lru_cache(maxsize=64)
def _capped_child_widths(steps: int, budget: int) -> tuple[int, ...]:
    return uniform_schedule_cappedK(steps, budget).widths


def _linear_uniform_widths(ell: float, r: float, steps: int, exact_limit: int):
    params = UniformParams(ell, r, steps)
    if steps <= exact_limit:
        return uniform_opt_linear(params).tree, True
    return approx2_linear(params.instance()).tree, False


class Doubling(Policy):
    """Restart with a full merge at t = 1, 2, 4, ...; inside the phase
    starting at ``T`` the bottom file is left alone and the ``T - 1`` newer
    arrivals follow an optimal schedule for a uniform instance whose means
    are those of the arrivals seen before ``T``.

    With ``known=(mean_length, mean_read)`` there are no restarts: the
    optimal schedule of the uniform instance over the declared horizon is
    played from the start.
    """

    def __init__(self, model: CostModel, known: tuple[float, float] | None = None, exact_limit: int = 2**14):
        if not isinstance(model, (CappedK, Linear)):
            raise ValueError("doubling needs a capped or linear model")
        self.model = model
        self.known = known
        self.exact_limit = exact_limit
        if known is not None:
            self.name = f"doubling-known:{known[0]:g},{known[1]:g}"
        elif isinstance(model, CappedK):
            self.name = f"doubling-capped:{model.K}"
        else:
            self.name = "doubling-linear"
        self.horizon = None
        self.reset()

    def reset(self):
        self.t = 0
        self.k = 0
        self.sum_len = 0
        self.sum_read = 0
        self.phase_start = 0
        self.child = ()
        self.approximate = False
        self.phase_starts = []

    def begin(self, n):
        self.horizon = n

    def _child_widths(self, steps, ell, r):
        if isinstance(self.model, CappedK):
            return _capped_child_widths(steps, self.model.K - 1) if steps else ()
        if steps == 0:
            return ()
        if ell + r <= 0:
            ell, r = 1.0, 1.0
        tree, exact = _linear_uniform_widths(float(ell), float(r), steps, self.exact_limit)
        if not exact:
            self.approximate = True
        return tree_to_schedule(tree).widths

    def step(self, length, read):
        self.t += 1
        t = self.t
        if self.known is not None:
            if t == 1:
                if self.horizon is None:
                    raise PolicyError("known-distribution doubling needs the horizon (call begin)")
                if isinstance(self.model, CappedK):
                    self.child = _capped_child_widths(self.horizon, self.model.K)
                else:
                    self.child = self._child_widths(self.horizon, *self.known)
            w = self.child[t - 1] if t - 1 < len(self.child) else self.k + 1
        elif t & (t - 1) == 0:
            # power of two: full merge, then plan the phase
            w = self.k + 1
            self.phase_start = t
            self.phase_starts.append(t)
            K = getattr(self.model, "K", None)
            if K == 1:
                self.child = ()
            elif K == 2:
                self.child = None  # closed form: width 1 then 2, 2, ...
            else:
                prev = t - 1
                ell = self.sum_len / prev if prev else 1.0
                r = self.sum_read / prev if prev else 1.0
                self.child = self._child_widths(t - 1, ell, r)
        else:
            p = t - self.phase_start  # 1-based position inside the phase
            if self.child is None:
                w = 1 if p == 1 else 2
            elif getattr(self.model, "K", None) == 1:
                w = self.k + 1
            else:
                w = self.child[p - 1]
        self.sum_len += length
        self.sum_read += read
        self.k = self.k + 2 - w
        if isinstance(self.model, CappedK) and self.k > self.model.K:
            raise PolicyError(f"{self.name}: stack size {self.k} above K")
        return w

    def steady_zero_steps(self):
        if self.known is None and self.child is None and self.t > self.phase_start:
            return 2 * self.phase_start - 1 - self.t
        return 0

    def skip_zeros(self, m):
        if m > self.steady_zero_steps():
            raise PolicyError("doubling: fast-forward past a phase boundary")
        self.t += m

    def diagnostics(self):
        return {"phase_starts": list(self.phase_starts), "approximate": self.approximate}


# ---------------------------------------------------------------------------


def make_merge_all() -> MergeAll:
    return MergeAll()


def make_default(K: int) -> Default:
    return Default(K)


def make_brb(K: int) -> Brb:
    return Brb(K)


def make_linear_online() -> LinearOnline:
    return LinearOnline()


def make_doubling(model: CostModel, known=None) -> Doubling:
    return Doubling(model, known)


def parse_policy(text: str, model: CostModel | None = None) -> Policy:
    """Build a policy from ``merge-all``, ``default:K``, ``brb:K``,
    ``linear-online``, ``doubling-capped:K``, ``doubling-linear`` or
    ``doubling-known:LBAR,RBAR``."""
    text = text.strip().lower()
    kind, _, arg = text.partition(":")
    try:
        if kind == "merge-all" and not arg:
            return MergeAll()
        if kind == "default" and arg:
            return Default(int(arg))
        if kind == "brb" and arg:
            return Brb(int(arg))
        if kind == "linear-online" and not arg:
            return LinearOnline()
        if kind == "doubling-capped" and arg:
            return Doubling(CappedK(int(arg)))
        if kind == "doubling-linear" and not arg:
            return Doubling(Linear())
        if kind == "doubling-known" and arg:
            a, b = (float(v) for v in arg.split(","))
            return Doubling(model if model is not None else Linear(), known=(a, b))
    except ValueError as exc:
        raise ValueError(f"bad policy {text!r}: {exc}") from None
    raise ValueError(f"unknown policy {text!r}")


__all__ = [
    "Brb",
    "Default",
    "Doubling",
    "LinearOnline",
    "MergeAll",
    "Policy",
    "PolicyDecision",
    "PolicyError",
    "make_brb",
    "make_default",
    "make_doubling",
    "make_linear_online",
    "make_merge_all",
    "parse_policy",
    "policy_step",
    "policy_widths",
    "run_policy",
]
