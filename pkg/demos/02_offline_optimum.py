# Offline optima: interval DP, brute force, the linear 2-approximation and
# closed forms for uniform instances.
import math

import numpy as np

from bmclab import CappedK, Instance, Linear
from bmclab.opt import (
    UniformParams,
    approx2_linear,
    brute_force_opt,
    c_K,
    dp_opt,
    dp_prefix_costs,
    solve_beta,
    uniform_opt_cappedK,
    uniform_opt_linear,
)

rng = np.random.default_rng(3)
inst = Instance(rng.lognormal(0, 1, 8), rng.exponential(1, 8))
for model in (CappedK(2), Linear()):
    a = dp_opt(inst, model)
    b = brute_force_opt(inst, model)
    print(model, "dp", round(a.cost, 6), "brute", round(b.cost, 6), "schedule", a.schedule.widths)

inst = Instance(rng.lognormal(0, 1, 300), rng.exponential(1, 300))
opt = dp_opt(inst, Linear()).cost
print("linear opt", round(opt, 3), "approx2", round(approx2_linear(inst).cost, 3))
print("prefix optima for n = 1..5:", np.round(dp_prefix_costs(inst.truncate(5), Linear()), 3))

# uniform capped instances: cost per step against l*K*n^(1/K)/c_K
for K in (2, 3, 5):
    for n in (100, 2000, 100_000):
        per = uniform_opt_cappedK(UniformParams(1.0, 0.0, n), K).cost / n
        print(f"K={K} n={n:>6} per-step {per:8.3f}  leading term {K * n ** (1 / K) / c_K(K):8.3f}")

# uniform linear instances: cost per step against beta*log2(n)
for ell, r in [(1, 1), (2, 1), (10, 1)]:
    beta = solve_beta(ell, r)
    n = 4096
    per = uniform_opt_linear(UniformParams(ell, r, n)).cost / n
    print(f"(l,r)=({ell},{r}) beta {beta:.6f} per-step/(beta log2 n) {per / (beta * math.log2(n)):.4f}")
