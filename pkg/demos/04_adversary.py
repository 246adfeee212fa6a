# Adaptive lower-bound instances: every deterministic policy for K = 2 is
# pushed towards ratio 2 (or far beyond it).
from bmclab.adversary import adversary_ratio, build_ladder, reference_schedules_bound, run_adversary
from bmclab.policies import parse_policy

for L in (10, 30, 100):
    ladder = build_ladder(2, L)
    print(f"L_2={L}: L_1={ladder.L[0]:.3g}, {ladder.N[0]} lengths at level 1")
    for name in ("brb:2", "merge-all", "default:2", "doubling-capped:2"):
        res = run_adversary(parse_policy(name), ladder)
        ratio = adversary_ratio(res, ladder)
        print(f"  {name:<18} steps {res.instance.n:.3g} (explicit {res.policy_steps}) ratio {ratio:.4g}")

# K = 3 needs an explicit ladder: the recursive one overflows floats.  Any
# ladder that fits in floats lets level-1 lengths overlap level 2 (separation
# below 1), so this ratio is indicative only.
ladder = build_ladder(3, 4, overrides=[4**6, 4**3])
res = run_adversary(parse_policy("brb:3"), ladder)
print("K=3 separation", ladder.separation, "ratio", float(res.policy_cost / reference_schedules_bound(res.instance, ladder)))
print("phase counts", res.stats.totals())
