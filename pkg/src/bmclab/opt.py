"""Offline solvers: exact interval DP, brute force, 2-approximation and
closed constructions for uniform instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import bisect

from .model import BMCError, CappedK, CostModel, Instance, Linear, Schedule
from .tree import MergeTree, tree_to_schedule


class OptResult(NamedTuple):
    cost: float
    schedule: Schedule


class TreeResult(NamedTuple):
    cost: float
    tree: MergeTree


@dataclass
class DPSolution:
    cost: float
    schedule: Schedule
    tree: MergeTree
    prefix_costs: np.ndarray  # prefix_costs[m-1] = OPT(I[1, m])


class TooLargeError(BMCError, ValueError):
    pass


@dataclass(frozen=True)
class UniformParams:
    mean_length: float
    mean_read: float
    n: int

    def __post_init__(self):
        if self.mean_length < 0 or self.mean_read < 0 or self.n < 0:
            raise ValueError("uniform parameters must be non-negative")

    def instance(self) -> Instance:
        return Instance.uniform(self.mean_length, self.mean_read, self.n)


# ---------------------------------------------------------------------------
# exact DP


def _build_tree(n: int, args, depth_of, lengths=None, reads=None) -> MergeTree:
    """Rebuild the recursion tree of the DP; ``args[d][m, i]`` is the split offset."""
    left, right = [0] * (n + 1), [0] * (n + 1)
    root = 0
    stack = [(0, 0, n, 0, 0)]  # depth, start, length, parent key, side
    while stack:
        d, i, m, parent, side = stack.pop()
        if m == 0:
            continue
        k = int(args[depth_of(d)][m, i])
        key = i + k + 1
        if parent == 0:
            root = key
        elif side < 0:
            left[parent] = key
        else:
            right[parent] = key
        stack.append((d, i, k, key, -1))
        stack.append((d + 1, i + k + 1, m - 1 - k, key, 1))
    return MergeTree(left, right, root, lengths, reads)


def dp_solve(instance: Instance, model: CostModel) -> DPSolution:
    """Minimise over all schedules with the interval recurrence.

    ``OPT_d[i,j] = min_s OPT_d[i,s-1] + ell[i,s] + r[s,j] f_d(1) + OPT_{d+1}[s+1,j]``

    Depth ``d`` counts the files sitting below the interval.  Linear costs
    do not depend on ``d`` so a single table serves every depth; capped
    models need ``K`` tables, general ``f`` up to ``n``.  Each (depth,
    length) pass is one vectorised min over (split offset, start).
    Ties go to the smallest split.
    """
    n = len(instance)
    if n == 0:
        return DPSolution(0.0, Schedule(()), MergeTree([0], [0], 0), np.zeros(0))
    P = instance.length_prefix
    R = instance.read_prefix
    depth_free = isinstance(model, Linear)
    if depth_free:
        D = 0
    elif model.max_stack is not None:
        D = min(model.max_stack, n) - 1
    else:
        D = n - 1
    arg_dtype = np.int16 if n < 2**15 else np.int32
    args: list[np.ndarray] = [None] * (D + 1)

    # table of the level below the deepest computed one
    nxt_H = np.full((n + 1, n + 1), np.inf)
    nxt_H[0, :] = 0.0
    nxt_G = nxt_H
    idx = np.arange(n + 1)
    for d in range(D, -1, -1):
        c = model.step_coef(d)
        if c is None:
            raise BMCError(f"depth {d} infeasible for {model}")
        H = np.full((n + 1, n + 1), np.inf)  # H[m, i]: start i, length m
        G = np.full((n + 1, n + 1), np.inf)  # G[m, e]: end e (exclusive)
        H[0, :] = 0.0
        G[0, :] = 0.0
        if depth_free:
            nxt_H, nxt_G = H, G
        arg = np.zeros((n + 1, n + 1), dtype=arg_dtype)
        # ell[i, s] + r[s, j] c = (P[s+1] - c R[s]) + (c R[j+1] - P[i])
        A = P[1:] - c * R[:n]
        for m in range(1, n + 1):
            w = n - m + 1
            tot = H[:m, :w] + nxt_G[m - 1 :: -1, m:]
            tot += sliding_window_view(A, m).T
            k = tot.argmin(axis=0)
            best = tot[k, idx[:w]] + (c * R[m:] - P[:w])
            H[m, :w] = best
            G[m, m:] = best
            arg[m, :w] = k
        args[d] = arg
        nxt_H, nxt_G = H, G
    cost = float(H[n, 0])
    prefix = H[1:, 0].copy()
    depth_of = (lambda d: 0) if depth_free else (lambda d: d)
    tree = _build_tree(n, args, depth_of, instance.lengths, instance.reads)
    return DPSolution(cost, tree_to_schedule(tree), tree, prefix)


def dp_opt(instance: Instance, model: CostModel) -> OptResult:
    sol = dp_solve(instance, model)
    return OptResult(sol.cost, sol.schedule)


def dp_prefix_costs(instance: Instance, model: CostModel) -> np.ndarray:
    """``OPT(I[1, m])`` for every m = 1..n from a single DP run."""
    return dp_solve(instance, model).prefix_costs


# ---------------------------------------------------------------------------
# brute force


def brute_force_opt(instance: Instance, model: CostModel, max_n: int = 12) -> OptResult:
    """Enumerate every feasible schedule (Catalan(n) of them)."""
    n = len(instance)
    if n > max_n:
        raise TooLargeError(f"brute force refuses n={n} > max_n={max_n}")
    if n == 0:
        return OptResult(0.0, Schedule(()))
    lengths = instance.lengths.tolist()
    reads = instance.reads.tolist()
    cap = model.max_stack if model.max_stack is not None else n
    fk = [0.0] + [model.f(k) for k in range(1, min(cap, n) + 1)]
    best_cost = math.inf
    best: list[int] = []
    widths: list[int] = []

    def walk(t: int, stack: list[float], acc: float):
        nonlocal best_cost, best
        if t == n:
            if acc < best_cost:
                best_cost, best = acc, widths.copy()
            return
        x = lengths[t]
        k = len(stack)
        for w in range(max(1, k + 2 - cap), k + 2):
            if w == 1:
                merged = x
                nxt = stack + [x]
            else:
                merged = sum(stack[k - w + 1 :]) + x
                nxt = stack[: k - w + 1] + [merged]
            widths.append(w)
            walk(t + 1, nxt, acc + merged + reads[t] * fk[len(nxt)])
            widths.pop()

    walk(0, [], 0.0)
    return OptResult(best_cost, Schedule(best))


# ---------------------------------------------------------------------------
# linear 2-approximation


def approx2_linear(instance: Instance) -> TreeResult:
    """Balanced-split tree: root ``s`` is the largest with ``ell[i,s-1] <= r[s,j]``.

    Every node ends up with ``|ell[L_t] - r[R_t]| <= ell_t + r_t``, which
    makes the tree cost at most twice the linear optimum.  One binary
    search per node, so O(n log n) overall.
    """
    n = len(instance)
    if n == 0:
        return TreeResult(0.0, MergeTree([0], [0], 0))
    P = instance.length_prefix
    R = instance.read_prefix
    Q = P + R  # non-decreasing
    left, right = [0] * (n + 1), [0] * (n + 1)
    root = 0
    stack = [(1, n, 0, 0)]
    while stack:
        i, j, parent, side = stack.pop()
        if i > j:
            continue
        # largest s in [i, j+1] with P[s-1] + R[s-1] <= P[i-1] + R[j]
        thr = P[i - 1] + R[j]
        x = int(np.searchsorted(Q[i - 1 : j + 1], thr, side="right")) - 1 + (i - 1)
        s = min(max(x + 1, i), j)
        if parent == 0:
            root = s
        elif side < 0:
            left[parent] = s
        else:
            right[parent] = s
        stack.append((i, s - 1, s, -1))
        stack.append((s + 1, j, s, 1))
    tree = MergeTree(left, right, root, instance.lengths, instance.reads)
    from .tree import tree_cost

    return TreeResult(tree_cost(tree, instance, Linear()), tree)


# ---------------------------------------------------------------------------
# uniform instances


def _capacity(a: int, b: int) -> int:
    """Nodes available with relative left depth <= a and right depth <= b - 1."""
    if a < 0 or b <= 0:
        return 0
    return math.comb(a + 1 + b, b) - 1


def binomial_depth(n: int, K: int) -> int:
    """Smallest ``d`` with ``C(K + d, K) >= n``."""
    d = 0
    while math.comb(K + d, K) < n:
        d += 1
    return d


def uniform_capped_levels(n: int, K: int) -> tuple[int, int]:
    """``(A, total_left_depth)`` of the cheapest ``n``-node tree with right depth < K.

    Level ``a`` (left depth) holds ``C(a+K, K-1)`` nodes; the optimum fills
    levels ``0..A-1`` completely and puts the rest on level ``A``.
    """
    A = 0
    while _capacity(A, K) < n:
        A += 1
    core = _capacity(A - 1, K)
    total = 0
    for a in range(A):
        total += a * (_capacity(a, K) - _capacity(a - 1, K))
    total += A * (n - core)
    return A, total


def uniform_opt_cappedK(params: UniformParams, K: int) -> TreeResult:
    """Exact optimum of ``(mean_length, .)^n`` under ``CappedK(K)`` in O(n)."""
    n = params.n
    if K < 1:
        raise ValueError("K must be >= 1")
    if n == 0:
        return TreeResult(0.0, MergeTree([0], [0], 0))
    A, total_ld = uniform_capped_levels(n, K)

    def core(a0, b):
        return _capacity(A - 1 - a0, b)

    def full(a0, b):
        return _capacity(A - a0, b)

    left, right = [0] * (n + 1), [0] * (n + 1)
    root = 0
    # (first key, size, absolute left depth, right budget, parent, side)
    stack = [(1, n, 0, K, 0, 0)]
    while stack:
        lo, s, a0, b, parent, side = stack.pop()
        if s == 0:
            continue
        nl = min(full(a0 + 1, b), s - 1 - core(a0, b - 1))
        key = lo + nl
        if parent == 0:
            root = key
        elif side < 0:
            left[parent] = key
        else:
            right[parent] = key
        stack.append((lo, nl, a0 + 1, b, key, -1))
        stack.append((key + 1, s - 1 - nl, a0, b - 1, key, 1))
    tree = MergeTree(left, right, root, [params.mean_length] * n, [params.mean_read] * n)
    cost = params.mean_length * (n + total_ld)
    return TreeResult(float(cost), tree)


def uniform_opt_linear(params: UniformParams) -> TreeResult:
    """Exact optimum of ``(mean_length, mean_read)^n`` under linear costs.

    Subproblem cost depends only on the interval length, so the DP is
    ``U[m] = min_k U[k] + U[m-1-k] + (k+1) ell + (m-k) r`` in O(n^2).
    """
    n = params.n
    ell, r = float(params.mean_length), float(params.mean_read)
    if n == 0:
        return TreeResult(0.0, MergeTree([0], [0], 0))
    if ell + r <= 0:
        raise ValueError("uniform linear optimum needs mean_length + mean_read > 0")
    U = np.zeros(n + 1)
    arg = np.zeros(n + 1, dtype=np.int64)
    ks = np.arange(n, dtype=np.float64)
    lin = (ks + 1) * ell - ks * r
    for m in range(1, n + 1):
        tot = U[:m] + U[m - 1 :: -1] + lin[:m]
        k = int(tot.argmin())
        arg[m] = k
        U[m] = tot[k] + m * r
    left, right = [0] * (n + 1), [0] * (n + 1)
    root = 0
    stack = [(1, n, 0, 0)]
    while stack:
        lo, m, parent, side = stack.pop()
        if m == 0:
            continue
        k = int(arg[m])
        key = lo + k
        if parent == 0:
            root = key
        elif side < 0:
            left[parent] = key
        else:
            right[parent] = key
        stack.append((lo, k, key, -1))
        stack.append((key + 1, m - 1 - k, key, 1))
    tree = MergeTree(left, right, root, [ell] * n, [r] * n)
    return TreeResult(float(U[n]), tree)


def uniform_schedule_cappedK(n: int, K: int) -> Schedule:
    return tree_to_schedule(uniform_opt_cappedK(UniformParams(1.0, 0.0, n), K).tree)


def solve_beta(mean_length: float, mean_read: float) -> float:
    """Root of ``2**(-mean_length/beta) + 2**(-mean_read/beta) = 1``.

    The left side increases with beta and the root lies between the two
    means, which brackets the bisection.
    """
    if not (mean_length > 0 and mean_read > 0):
        raise ValueError("solve_beta needs positive mean length and read rate")
    lo, hi = sorted((float(mean_length), float(mean_read)))
    if lo == hi:
        return lo

    def g(beta):
        return 2.0 ** (-mean_length / beta) + 2.0 ** (-mean_read / beta) - 1.0

    return bisect(g, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)


def c_K(K: int) -> float:
    """``(K+1) / (K!)^(1/K)``; tends to e."""
    if K < 1 or int(K) != K:
        raise ValueError("K must be a positive integer")
    return math.exp(math.log(K + 1) - math.lgamma(K + 1) / K)


def capped_asymptotic_per_step(mean_length: float, n: int, K: int) -> float:
    """Leading-order optimal cost per step under ``CappedK(K)``."""
    return mean_length * K * n ** (1.0 / K) / c_K(K)


__all__ = [
    "DPSolution",
    "OptResult",
    "TooLargeError",
    "TreeResult",
    "UniformParams",
    "approx2_linear",
    "binomial_depth",
    "brute_force_opt",
    "c_K",
    "capped_asymptotic_per_step",
    "dp_opt",
    "dp_prefix_costs",
    "dp_solve",
    "solve_beta",
    "uniform_capped_levels",
    "uniform_opt_cappedK",
    "uniform_opt_linear",
    "uniform_schedule_cappedK",
]
