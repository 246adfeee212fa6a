"""Binary search trees on keys 1..n that encode compaction schedules.

Node ``t`` stands for the file inserted at time ``t``.  The right spine of
the tree is the current stack (root = bottom file), the number of right
steps on the root path of ``t`` is ``k_t - 1``, and the number of left
steps is how many later merges touched file ``t``.

Trees are index arrays: ``left[t]``, ``right[t]`` and ``parent[t]`` hold
keys, with 0 meaning "none".  Slot 0 is unused.
"""

from __future__ import annotations

import numpy as np

from .model import (
    BMCError,
    CostModel,
    Instance,
    InfeasibleScheduleError,
    Schedule,
    ScheduleError,
)


class TreeError(BMCError, ValueError):
    pass


class MergeTree:
    """Merge tree with optional per-node weights ``(length, read_rate)``.

    Weights are needed for the subtree aggregates ``ell_sub``/``r_sub``;
    trees built without an instance carry zeros.
    """

    def __init__(self, left, right, root: int, lengths=None, reads=None):
        self.left = [int(x) for x in left]
        self.right = [int(x) for x in right]
        if len(self.left) != len(self.right) or not self.left:
            raise TreeError("left/right arrays must have equal length n+1")
        n = len(self.left) - 1
        self.root = int(root)
        self.parent = [0] * (n + 1)
        for t in range(1, n + 1):
            for c in (self.left[t], self.right[t]):
                if c:
                    if not 1 <= c <= n or self.parent[c]:
                        raise TreeError(f"node {c} has several parents or is out of range")
                    self.parent[c] = t
        self.ell_w = [0.0] + (list(map(float, lengths)) if lengths is not None else [0.0] * n)
        self.r_w = [0.0] + (list(map(float, reads)) if reads is not None else [0.0] * n)
        if len(self.ell_w) != n + 1 or len(self.r_w) != n + 1:
            raise TreeError("weights must have one entry per node")
        self._spine = None
        self._depths = None
        self._sums = None
        self._check()

    # -- structure ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.left) - 1

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, MergeTree):
            return NotImplemented
        return self.root == other.root and self.left == other.left and self.right == other.right

    def __repr__(self):
        return f"MergeTree(n={self.n}, root={self.root})"

    def copy(self) -> "MergeTree":
        return MergeTree(self.left, self.right, self.root, self.ell_w[1:], self.r_w[1:])

    def _check(self):
        n = self.n
        if n == 0:
            if self.root:
                raise TreeError("empty tree must have root 0")
            return
        if not 1 <= self.root <= n or self.parent[self.root]:
            raise TreeError("root must be a node without parent")
        # every key reached exactly once, and keys in each subtree form the
        # interval implied by BST order
        seen = 0
        stack = [(self.root, 1, n)]
        while stack:
            t, lo, hi = stack.pop()
            if not lo <= t <= hi:
                raise TreeError(f"key {t} violates search-tree order (expected in [{lo},{hi}])")
            seen += 1
            if self.left[t]:
                stack.append((self.left[t], lo, t - 1))
            elif t != lo:
                raise TreeError(f"keys {lo}..{t - 1} missing left of {t}")
            if self.right[t]:
                stack.append((self.right[t], t + 1, hi))
            elif t != hi:
                raise TreeError(f"keys {t + 1}..{hi} missing right of {t}")
        if seen != n:
            raise TreeError("tree does not hold every key exactly once")

    def spine(self) -> list[int]:
        """Right spine from root (bottom file) to the newest stack file."""
        if self._spine is None:
            out, t = [], self.root
            while t:
                out.append(t)
                t = self.right[t]
            self._spine = out
        return list(self._spine)

    def _invalidate(self):
        self._spine = None
        self._depths = None
        self._sums = None

    # -- depths ------------------------------------------------------------

    def depths(self) -> tuple[np.ndarray, np.ndarray]:
        """``(left_depth, right_depth)`` arrays indexed by key (slot 0 unused)."""
        if self._depths is None:
            n = self.n
            ld = np.zeros(n + 1, dtype=np.int64)
            rd = np.zeros(n + 1, dtype=np.int64)
            stack = [self.root] if n else []
            while stack:
                t = stack.pop()
                a, b = self.left[t], self.right[t]
                if a:
                    ld[a], rd[a] = ld[t] + 1, rd[t]
                    stack.append(a)
                if b:
                    ld[b], rd[b] = ld[t], rd[t] + 1
                    stack.append(b)
            self._depths = (ld, rd)
        return self._depths

    def left_depths(self) -> np.ndarray:
        return self.depths()[0][1:]

    def right_depths(self) -> np.ndarray:
        return self.depths()[1][1:]

    def latency(self) -> int:
        return int(self.right_depths().max()) + 1 if self.n else 0

    # -- aggregates ----------------------------------------------------------

    def _postorder(self) -> list[int]:
        out, stack = [], [self.root] if self.n else []
        while stack:
            t = stack.pop()
            out.append(t)
            if self.left[t]:
                stack.append(self.left[t])
            if self.right[t]:
                stack.append(self.right[t])
        out.reverse()
        return out

    def subtree_sums(self) -> tuple[list[float], list[float]]:
        """``(ell[T_t], r[T_t])`` for every key; empty subtrees sum to 0."""
        if self._sums is None:
            n = self.n
            el, rr = [0.0] * (n + 1), [0.0] * (n + 1)
            for t in self._postorder():
                a, b = self.left[t], self.right[t]
                el[t] = self.ell_w[t] + el[a] + el[b]
                rr[t] = self.r_w[t] + rr[a] + rr[b]
            el[0] = rr[0] = 0.0
            self._sums = (el, rr)
        return self._sums

    def ell_left(self, t: int) -> float:
        """``ell[L_t]``: total length in the left subtree of ``t``."""
        return self.subtree_sums()[0][self.left[t]] if self.left[t] else 0.0

    def r_right(self, t: int) -> float:
        """``r[R_t]``: total read rate in the right subtree of ``t``."""
        return self.subtree_sums()[1][self.right[t]] if self.right[t] else 0.0

    def with_weights(self, instance: Instance) -> "MergeTree":
        if len(instance) != self.n:
            raise TreeError(f"tree has {self.n} nodes, instance has {len(instance)} steps")
        return MergeTree(self.left, self.right, self.root, instance.lengths, instance.reads)

    # -- online insertion --------------------------------------------------

    def insert_on_spine(self, above: int | None = None, length: float = 0.0, read: float = 0.0) -> int:
        """Insert key ``n+1`` on the right spine, mutating the tree.

        ``above=None`` appends the node below the bottom spine node.
        Otherwise ``above`` must be a spine node ``c``: the new node takes
        its place and ``c`` becomes the new node's left child.
        Returns the new key.
        """
        spine = self.spine()
        t = self.n + 1
        self.left.append(0)
        self.right.append(0)
        self.parent.append(0)
        self.ell_w.append(float(length))
        self.r_w.append(float(read))
        sums = self._sums
        if above is None:
            ancestors = spine
            if spine:
                self.right[spine[-1]] = t
                self.parent[t] = spine[-1]
            else:
                self.root = t
            new_spine = spine + [t]
        else:
            if above not in spine:
                self.left.pop(), self.right.pop(), self.parent.pop()
                self.ell_w.pop(), self.r_w.pop()
                raise TreeError(f"node {above} is not on the right spine")
            pos = spine.index(above)
            ancestors = spine[:pos]
            p = self.parent[above]
            self.left[t] = above
            self.parent[above] = t
            if p:
                self.right[p] = t
                self.parent[t] = p
            else:
                self.root = t
            new_spine = spine[:pos] + [t]
        self._depths = None
        self._spine = new_spine
        if sums is not None:
            el, rr = sums
            c = self.left[t]
            el.append(float(length) + (el[c] if c else 0.0))
            rr.append(float(read) + (rr[c] if c else 0.0))
            for a in ancestors:
                el[a] += float(length)
                rr[a] += float(read)
        return t


def spine_insert(tree: MergeTree, position, length: float = 0.0, read: float = 0.0) -> MergeTree:
    """Online tree maintenance: ``position`` is a spine key or ``"append"``."""
    tree.insert_on_spine(None if position == "append" else int(position), length, read)
    return tree


def empty_tree() -> MergeTree:
    return MergeTree([0], [0], 0)


# ---------------------------------------------------------------------------
# the bijection


def schedule_to_tree(instance: Instance | None, schedule: Schedule) -> MergeTree:
    """Build the merge tree of a schedule in O(n).

    Replays the schedule on the right spine: width 1 appends below the
    bottom spine node; width ``j > 1`` puts the new node above the spine
    node ``j - 1`` places from the bottom.
    """
    widths = schedule.widths if isinstance(schedule, Schedule) else tuple(schedule)
    n = len(widths)
    if instance is not None and len(instance) != n:
        raise TreeError(f"schedule has {n} steps, instance has {len(instance)}")
    left = [0] * (n + 1)
    right = [0] * (n + 1)
    spine: list[int] = []
    root = 0
    for t in range(1, n + 1):
        w = widths[t - 1]
        if not 1 <= w <= len(spine) + 1:
            raise ScheduleError(t, f"width {w} outside [1, {len(spine) + 1}]")
        if w == 1:
            if spine:
                right[spine[-1]] = t
            else:
                root = t
        else:
            c = spine[-(w - 1)]
            left[t] = c
            if len(spine) >= w:
                right[spine[-w]] = t
            else:
                root = t
            del spine[-(w - 1) :]
        spine.append(t)
    if instance is None:
        return MergeTree(left, right, root)
    return MergeTree(left, right, root, instance.lengths, instance.reads)


def tree_to_schedule(tree: MergeTree) -> Schedule:
    """Invert :func:`schedule_to_tree`.

    Node ``t``'s left subtree is exactly what was merged at time ``t``; the
    number of files merged is the length of that subtree's right chain.
    """
    widths = []
    for t in range(1, tree.n + 1):
        w, c = 1, tree.left[t]
        while c:
            w += 1
            c = tree.right[c]
        widths.append(w)
    return Schedule(widths)


# ---------------------------------------------------------------------------
# costs


def tree_cost(tree: MergeTree, instance: Instance, model: CostModel) -> float:
    """``sum_t ell_t (1 + left_depth) + r_t f(1 + right_depth)``."""
    if len(instance) != tree.n:
        raise TreeError(f"tree has {tree.n} nodes, instance has {len(instance)} steps")
    if tree.n == 0:
        return 0.0
    ld, rd = (d[1:] for d in tree.depths())
    sizes = rd + 1
    if model.max_stack is not None and int(sizes.max()) > model.max_stack:
        t = int(np.argmax(sizes > model.max_stack)) + 1
        raise InfeasibleScheduleError(t, f"right depth gives stack size {sizes[t - 1]} > K")
    merge = float(np.dot(instance.lengths, ld + 1))
    read = float(model.read_costs(instance.reads, sizes).sum())
    return merge + read


def _left_right_sums(tree: MergeTree, instance: Instance):
    """``(ell[L_t], r[R_t])`` arrays for t = 1..n, weighted by ``instance``."""
    ell, r = instance.lengths.tolist(), instance.reads.tolist()
    n = tree.n
    el, rr = [0.0] * (n + 1), [0.0] * (n + 1)
    left, right = tree.left, tree.right
    for t in tree._postorder():
        a, b = left[t], right[t]
        el[t] = ell[t - 1] + el[a] + el[b]
        rr[t] = r[t - 1] + rr[a] + rr[b]
    el[0] = rr[0] = 0.0
    ell_l = np.array([el[left[k]] for k in range(1, n + 1)])
    r_r = np.array([rr[right[k]] for k in range(1, n + 1)])
    return ell_l, r_r


def linear_cost_by_subtrees(tree: MergeTree, instance: Instance) -> float:
    """Linear cost written as ``sum_t ell_t + r_t + ell[L_t] + r[R_t]``."""
    if len(instance) != tree.n:
        raise TreeError(f"tree has {tree.n} nodes, instance has {len(instance)} steps")
    ell_l, r_r = _left_right_sums(tree, instance)
    return float(instance.lengths.sum() + instance.reads.sum() + ell_l.sum() + r_r.sum())


def tree_lower_bound(tree: MergeTree, instance: Instance) -> float:
    """Lower bound on the linear optimum: ``sum_t ell_t + r_t + min(ell[L_t], r[R_t])``."""
    if len(instance) != tree.n:
        raise TreeError(f"tree has {tree.n} nodes, instance has {len(instance)} steps")
    ell_l, r_r = _left_right_sums(tree, instance)
    return float(instance.lengths.sum() + instance.reads.sum() + np.minimum(ell_l, r_r).sum())


def potential(tree: MergeTree, instance: Instance) -> float:
    """Amortization potential: spine nodes weigh 1, all others 2."""
    _, r_r = _left_right_sums(tree, instance)
    base = instance.lengths + instance.reads + r_r
    weight = np.full(tree.n, 2.0)
    weight[np.array(tree.spine(), dtype=np.int64) - 1] = 1.0
    return float(np.dot(base, weight))


def is_balanced(tree: MergeTree, instance: Instance, rtol: float = 1e-9) -> np.ndarray:
    """Per node: ``|ell[L_t] - r[R_t]| <= ell_t + r_t`` (within ``rtol``)."""
    ell_l, r_r = _left_right_sums(tree, instance)
    slack = instance.lengths + instance.reads
    scale = np.maximum(1.0, np.maximum(ell_l, r_r))
    return np.abs(ell_l - r_r) <= slack + rtol * scale


# ---------------------------------------------------------------------------
# text serialization


def dump_tree(tree: MergeTree, dest=None) -> str:
    """One line per node: ``key,left_child_key_or_0,right_child_key_or_0``."""
    text = "".join(f"{t},{tree.left[t]},{tree.right[t]}\n" for t in range(1, tree.n + 1))
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w") as fh:
                fh.write(text)
    return text


def load_tree(source) -> MergeTree:
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and ("\n" in source or "," in source):
        text = source
    else:
        with open(source) as fh:
            text = fh.read()
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            key, a, b = (int(x) for x in line.split(","))
        except ValueError:
            raise TreeError(f"line {lineno}: expected key,left,right") from None
        rows.append((key, a, b))
    n = len(rows)
    left, right = [0] * (n + 1), [0] * (n + 1)
    for key, a, b in rows:
        if not 1 <= key <= n:
            raise TreeError(f"key {key} out of range 1..{n}")
        left[key], right[key] = a, b
    has_parent = set(left[1:]) | set(right[1:])
    roots = [t for t in range(1, n + 1) if t not in has_parent]
    if n and len(roots) != 1:
        raise TreeError("tree must have exactly one root")
    return MergeTree(left, right, roots[0] if n else 0)
