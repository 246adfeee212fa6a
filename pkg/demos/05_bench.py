# Benchmark harness: CSV rows and an SVG plot of cost per step against n.
import sys
from pathlib import Path

from bmclab.bench import ExperimentConfig, emit_plot_data, run_experiment, write_results
from bmclab.workload import IidLogNormalExp, WorkloadSpec

out = Path(sys.argv[1] if len(sys.argv) > 1 else "bench_out")
out.mkdir(exist_ok=True)
cfg = ExperimentConfig(
    workload=WorkloadSpec(IidLogNormalExp(10.0, 1.0, 1.0), 0, seed=0),
    policies=["brb:5", "default:5", "doubling-capped:5"],
    model="capped:5",
    n_grid=[100, 250, 500, 1000],
)
rows = run_experiment(cfg)
write_results(rows, out / "results.csv")
emit_plot_data(rows, out / "results.svg", out / "results.txt", title="capped K=5")
for r in rows:
    print(r["n"], r["policy"], round(r["per_step_cost"]), None if r["ratio"] is None else round(r["ratio"], 3))
print("wrote", out / "results.csv", out / "results.svg")
