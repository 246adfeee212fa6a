# Stack model, schedules and merge trees.
#
# Three files of lengths 9, 5, 3 arrive; the third arrival merges everything.
import numpy as np

from bmclab import CappedK, Instance, Linear, Schedule, simulate
from bmclab.tree import dump_tree, schedule_to_tree, tree_cost, tree_lower_bound, tree_to_schedule

inst = Instance([9, 5, 3], [1, 1, 1])
sched = Schedule([1, 1, 3])

for model in (Linear(), CappedK(2)):
    tr = simulate(inst, sched.widths, model, keep_stacks=True)
    print(model, "total", tr.total_cost, "merge", tr.total_merge, "read", tr.total_read)
    for t, stack in enumerate(tr.stacks, start=1):
        print("  after step", t, "stack (bottom first):", stack)

# every schedule is a binary search tree on 1..n and back
tree = schedule_to_tree(inst, sched)
print(dump_tree(tree))
print("round trip:", tree_to_schedule(tree).widths)
print("tree cost (linear):", tree_cost(tree, inst, Linear()))
print("lower bound:", tree_lower_bound(tree, inst))

# a bigger random schedule: tree depths reproduce the simulated cost
rng = np.random.default_rng(0)
n = 12
inst = Instance(rng.exponential(1, n), rng.exponential(1, n))
widths, k = [], 0
for _ in range(n):
    w = int(rng.integers(1, k + 2))
    widths.append(w)
    k = k + 2 - w
tree = schedule_to_tree(inst, Schedule(widths))
print("widths", widths)
print("simulated", simulate(inst, widths, Linear()).total_cost, "tree", tree_cost(tree, inst, Linear()))
print("latency", tree.latency(), "max stack", simulate(inst, widths, Linear()).max_stack)
