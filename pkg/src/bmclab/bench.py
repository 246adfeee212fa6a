"""Experiment harness: policies vs. the offline optimum over a grid of horizons."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .model import BMCError, CappedK, CostModel, Instance, Linear, parse_model
from .opt import dp_prefix_costs
from .policies import Doubling, parse_policy, run_policy
from .workload import FromFile, IidLogNormalExp, Uniform, WorkloadSpec, generate

RESULT_COLUMNS = ["n", "policy", "rep", "total_cost", "per_step_cost", "max_stack", "opt_cost", "ratio", "error"]

OPT_CAP_CAPPED = 2000
OPT_CAP_LINEAR = 1500


@dataclass
class ExperimentConfig:
    workload: WorkloadSpec
    policies: list[str]
    model: str = "capped:5"
    n_grid: list[int] = field(default_factory=lambda: [100])
    include_opt: bool = True
    opt_max_n: int | None = None  # default depends on the model
    repetitions: int = 1
    out_csv: str | None = None
    out_plot: str | None = None

    def __post_init__(self):
        self.n_grid = sorted(int(n) for n in self.n_grid)
        if not self.n_grid or self.n_grid[0] < 1:
            raise ValueError("n_grid needs positive horizons")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    @property
    def cost_model(self) -> CostModel:
        return parse_model(self.model)

    def opt_cap(self) -> int:
        if self.opt_max_n is not None:
            return self.opt_max_n
        return OPT_CAP_LINEAR if isinstance(self.cost_model, Linear) else OPT_CAP_CAPPED


def workload_from_dict(d: dict, n: int, seed: int) -> WorkloadSpec:
    dist = d.get("dist", "lognormal")
    if dist == "uniform":
        kind = Uniform(float(d.get("lbar", 1.0)), float(d.get("rbar", 1.0)))
    elif dist == "lognormal":
        kind = IidLogNormalExp(float(d.get("mu", 10.0)), float(d.get("v", 1.0)),
                               float(d.get("read_mean", 1.0)), d.get("truncate"))
    elif dist == "file":
        kind = FromFile(d["path"])
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return WorkloadSpec(kind, n, seed)


def load_config(path) -> dict:
    return json.loads(Path(path).read_text())


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("BMC_THREADS", "1")))
    except ValueError:
        return 1


def _ratio(total, opt):
    if opt is None:
        return None
    if opt == 0:
        return 1.0 if total == 0 else None
    return total / opt


def _policy_rows(instance, name, model, grid, rep, opt):
    rows = []
    try:
        policy = parse_policy(name, model)
        if isinstance(policy, Doubling) and policy.known is not None:
            # plays a schedule fixed by the horizon, so every n is its own run
            runs = []
            for n in grid:
                tr = run_policy(instance.truncate(n), policy, model)
                runs.append((n, tr.total_cost, tr.max_stack))
        else:
            tr = run_policy(instance, policy, model)
            cum = tr.cumulative_costs()
            ms = np.maximum.accumulate(tr.stack_sizes)
            runs = [(n, float(cum[n - 1]), int(ms[n - 1])) for n in grid]
        for n, total, mstack in runs:
            o = opt.get(n)
            rows.append({
                "n": n, "policy": name, "rep": rep, "total_cost": total,
                "per_step_cost": total / n, "max_stack": mstack,
                "opt_cost": o, "ratio": _ratio(total, o),
                "error": "",
            })
    except (BMCError, ValueError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        for n in grid:
            rows.append({"n": n, "policy": name, "rep": rep, "total_cost": None, "per_step_cost": None,
                         "max_stack": None, "opt_cost": opt.get(n), "ratio": None, "error": msg})
    return rows


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """One generated instance per repetition (seed + rep), truncated to each
    horizon.  Online policies run once on the longest prefix and are read
    off at every horizon; OPT comes from one DP that yields all prefix optima."""
    model = config.cost_model
    grid = config.n_grid
    nmax = grid[-1]
    cells = []
    opts = {}
    for rep in range(config.repetitions):
        spec = replace(config.workload, n=nmax, seed=config.workload.seed + rep)
        inst = generate(spec)
        if len(inst) < nmax:
            raise ValueError(f"workload has {len(inst)} steps, grid needs {nmax}")
        opt = {}
        if config.include_opt:
            cap = min(config.opt_cap(), nmax)
            within = [n for n in grid if n <= cap]
            if within:
                pc = dp_prefix_costs(inst.truncate(within[-1]), model)
                opt = {n: float(pc[n - 1]) for n in within}
        opts[rep] = opt
        for name in config.policies:
            cells.append((inst, name, rep))
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        parts = list(pool.map(lambda c: _policy_rows(c[0], c[1], model, grid, c[2], opts[c[2]]), cells))
    order = {name: i for i, name in enumerate(config.policies)}
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: (r["n"], order[r["policy"]], r["rep"]))
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: list[dict], dest) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in RESULT_COLUMNS])
    text = buf.getvalue()
    if isinstance(dest, (str, os.PathLike)):
        Path(dest).write_text(text)
    else:
        dest.write(text)


def read_results(source) -> list[dict]:
    text = Path(source).read_text() if isinstance(source, (str, os.PathLike)) else source.read()
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {"n": int(r["n"]), "policy": r["policy"], "rep": int(r["rep"]), "error": r.get("error", "")}
        for c in ("total_cost", "per_step_cost", "opt_cost", "ratio"):
            row[c] = float(r[c]) if r.get(c) else None
        row["max_stack"] = int(r["max_stack"]) if r.get("max_stack") else None
        rows.append(row)
    return rows


def _series(rows):
    """Mean per-step cost per (series, n); OPT becomes its own series."""
    acc: dict[str, dict[int, list[float]]] = {}
    for r in rows:
        if r.get("per_step_cost") is not None:
            acc.setdefault(r["policy"], {}).setdefault(r["n"], []).append(r["per_step_cost"])
        if r.get("opt_cost") is not None:
            acc.setdefault("opt", {}).setdefault(r["n"], []).append(r["opt_cost"] / r["n"])
    out = {}
    for name, by_n in acc.items():
        ns = sorted(by_n)
        out[name] = (ns, [float(np.mean(by_n[n])) for n in ns])
    return out


def emit_plot_data(rows: list[dict], svg_path, table_path=None, title: str | None = None) -> dict:
    """Write an SVG line chart of per-step cost against n plus a text table."""
    if not rows:
        raise ValueError("no results to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = _series(rows)
    if not series:
        raise ValueError("no successful rows to plot")
    with matplotlib.rc_context({"svg.hashsalt": "bmclab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, (ns, ys) in series.items():
            style = "--" if name == "opt" else "-"
            ax.plot(ns, ys, style, marker="o" if len(ns) == 1 else None, label=name)
        ax.set_xlabel("n")
        ax.set_ylabel("cost per step")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    if table_path is not None:
        lines = ["# series n per_step_cost"]
        for name, (ns, ys) in series.items():
            lines.extend(f"{name} {n} {y!r}" for n, y in zip(ns, ys))
        Path(table_path).write_text("\n".join(lines) + "\n")
    return series


__all__ = [
    "ExperimentConfig",
    "RESULT_COLUMNS",
    "emit_plot_data",
    "load_config",
    "read_results",
    "run_experiment",
    "workload_from_dict",
    "write_results",
]
