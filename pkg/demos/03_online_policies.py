# Online policies on a log-normal workload.
import numpy as np

from bmclab import CappedK, Linear
from bmclab.opt import dp_prefix_costs
from bmclab.policies import Brb, Default, Doubling, LinearOnline, MergeAll, run_policy
from bmclab.workload import IidLogNormalExp, WorkloadSpec, generate

inst = generate(WorkloadSpec(IidLogNormalExp(10.0, 1.0, 1.0), 2000, seed=0))

K = 5
model = CappedK(K)
opt = dp_prefix_costs(inst.truncate(1000), model)
grid = [50, 200, 500, 1000]
print("capped K=5, cost per step")
print("n      " + "".join(f"{n:>12}" for n in grid))
for pol in (Brb(K), Default(K), Doubling(model), MergeAll()):
    cum = run_policy(inst, pol, model).cumulative_costs()
    print(f"{str(pol):<18}" + "".join(f"{cum[n - 1] / n:12.0f}" for n in grid))
print(f"{'opt':<18}" + "".join(f"{opt[n - 1] / n:12.0f}" for n in grid))

# read-heavy linear model
lin = generate(WorkloadSpec(IidLogNormalExp(10.0, 1.0, 10 * np.exp(10.5)), 2000, seed=1))
opt = dp_prefix_costs(lin.truncate(1000), Linear())
pol = LinearOnline()
tr = run_policy(lin, pol, Linear())
print("linear-online invariant holds:", pol.diagnostics()["invariant_ok"])
cum = tr.cumulative_costs()
dbl = run_policy(lin, Doubling(Linear()), Linear()).cumulative_costs()
for n in grid:
    print(f"n={n:>5} linear-online/opt {cum[n - 1] / opt[n - 1]:.3f} doubling/opt {dbl[n - 1] / opt[n - 1]:.3f}")
