"""Command-line front end: ``bmclab gen|simulate|opt|bench|adversary|plot``.

Exit codes: 0 success, 1 usage error, 2 infeasible input, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from .adversary import AdversaryError, LadderOverflowError, build_ladder, reference_schedules_bound, run_adversary
from .bench import ExperimentConfig, emit_plot_data, load_config, read_results, run_experiment, workload_from_dict, write_results
from .io import FormatError, read_instance, read_schedule, write_instance, write_schedule
from .model import BMCError, Linear, ScheduleError, parse_model, simulate
from .opt import approx2_linear, brute_force_opt, dp_opt
from .policies import PolicyError, parse_policy, policy_widths
from .tree import tree_to_schedule
from .workload import generate

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3

# above this many steps the adversary instance is written run-length encoded
MAX_EXPANDED_STEPS = 1_000_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _out(path):
    return sys.stdout if path in (None, "-") else path


def cmd_gen(args):
    d = {"dist": args.dist, "mu": args.mu, "v": args.v, "read_mean": args.read_mean,
         "lbar": args.lbar, "rbar": args.rbar, "truncate": args.truncate}
    inst = generate(workload_from_dict(d, args.n, args.seed))
    write_instance(inst, _out(args.out))


def cmd_simulate(args):
    inst = read_instance(args.instance)
    model = parse_model(args.model)
    if (args.schedule is None) == (args.policy is None):
        raise UsageError("simulate needs exactly one of --schedule and --policy")
    if args.schedule is not None:
        widths = read_schedule(args.schedule).widths
    else:
        widths = policy_widths(inst, parse_policy(args.policy, model))
    tr = simulate(inst, widths, model, keep_stacks=False)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "width", "stack_size", "merge_cost", "read_cost"])
            for t in range(tr.n):
                w.writerow([t + 1, widths[t], int(tr.stack_sizes[t]), repr(float(tr.merge_costs[t])),
                            repr(float(tr.read_costs[t]))])
    print(f"total_cost {tr.total_cost!r}")
    print(f"merge_cost {tr.total_merge!r}")
    print(f"read_cost {tr.total_read!r}")
    print(f"max_stack {tr.max_stack}")


def cmd_opt(args):
    inst = read_instance(args.instance)
    model = parse_model(args.model)
    if args.method == "dp":
        cost, sched = dp_opt(inst, model)
    elif args.method == "brute":
        cost, sched = brute_force_opt(inst, model)
    else:
        if not isinstance(model, Linear):
            raise UsageError("approx2 works with the linear model only")
        res = approx2_linear(inst)
        cost, sched = res.cost, tree_to_schedule(res.tree)
    print(repr(float(cost)))
    if args.out:
        write_schedule(sched, args.out)


def cmd_bench(args):
    cfg = load_config(args.config) if args.config else {}
    wl = dict(cfg.get("workload", {}))
    for key in ("dist", "mu", "v", "read_mean", "lbar", "rbar", "path"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            wl[key] = val
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    policies = args.policies.split(",") if args.policies else cfg.get("policies")
    if not policies:
        raise UsageError("bench needs --policies (or a config listing them)")
    grid = _ints(args.n_grid) if args.n_grid else cfg.get("n_grid")
    if not grid:
        raise UsageError("bench needs --n-grid (or a config listing it)")
    include_opt = cfg.get("include_opt", True) if args.opt is None else args.opt
    config = ExperimentConfig(
        workload=workload_from_dict(wl, max(grid), seed),
        policies=policies,
        model=args.model or cfg.get("model", "capped:5"),
        n_grid=grid,
        include_opt=include_opt,
        opt_max_n=args.opt_max_n if args.opt_max_n is not None else cfg.get("opt_max_n"),
        repetitions=args.reps if args.reps is not None else cfg.get("repetitions", 1),
        out_csv=args.out or cfg.get("out_csv"),
        out_plot=args.plot or cfg.get("out_plot"),
    )
    rows = run_experiment(config)
    write_results(rows, _out(config.out_csv))
    if config.out_plot:
        table = args.table or (str(config.out_plot) + ".txt")
        emit_plot_data(rows, config.out_plot, table)


def cmd_adversary(args):
    overrides = _ints(args.override) if args.override else None
    ladder = build_ladder(args.k, args.lk, overrides)
    policy = parse_policy(args.policy, parse_model(f"capped:{args.k}"))
    res = run_adversary(policy, ladder, max_policy_steps=args.max_steps)
    bound = reference_schedules_bound(res.instance, ladder, res.stats)
    ratio = float(Fraction(res.policy_cost) / bound)
    if args.out:
        n = res.instance.n
        with open(args.out, "w", newline="") as fh:
            if n <= MAX_EXPANDED_STEPS:
                write_instance(res.instance.to_instance(MAX_EXPANDED_STEPS), fh)
            else:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "length", "read_rate", "count"])
                t = 1
                for x, _, c in res.instance.runs:
                    w.writerow([t, repr(float(x)), repr(0.0), c])
                    t += c
    summary = {
        "policy": str(policy),
        "K": ladder.K,
        "L": [str(x) for x in ladder.L],
        "separation": ladder.separation,
        "exact_ladder": ladder.exact,
        "steps": res.instance.n,
        "policy_steps": res.policy_steps,
        "policy_cost": float(res.policy_cost),
        "policy_max_based_cost": float(res.policy_max_cost),
        "reference_bound": float(bound),
        "phase_bound": float(res.stats.phase_bound(ladder)),
        "ratio": ratio,
        **res.stats.to_dict(),
    }
    if args.stats:
        with open(args.stats, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"policy_cost {float(res.policy_cost)!r}")
    print(f"reference_bound {float(bound)!r}")
    print(f"ratio {ratio!r}")


def cmd_plot(args):
    rows = read_results(args.results)
    emit_plot_data(rows, args.out, args.table or (args.out + ".txt"), title=args.title)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bmclab", description="Merge-compaction schedules: simulate, optimise, benchmark.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a workload CSV")
    g.add_argument("--dist", choices=["uniform", "lognormal"], default="lognormal")
    g.add_argument("--mu", type=float, default=10.0)
    g.add_argument("--v", type=float, default=1.0, help="variance of the underlying normal")
    g.add_argument("--read-mean", type=float, default=1.0)
    g.add_argument("--lbar", type=float, default=1.0)
    g.add_argument("--rbar", type=float, default=1.0)
    g.add_argument("--truncate", type=float, default=None, help="clip at this quantile")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("simulate", help="cost of a schedule or policy on an instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--model", default="linear")
    s.add_argument("--schedule")
    s.add_argument("--policy")
    s.add_argument("--out", help="per-step trace CSV")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("opt", help="offline optimum")
    o.add_argument("--instance", required=True)
    o.add_argument("--model", default="linear")
    o.add_argument("--method", choices=["dp", "brute", "approx2"], default="dp")
    o.add_argument("--out", help="schedule CSV")
    o.set_defaults(func=cmd_opt)

    b = sub.add_parser("bench", help="policies vs. optimum over horizons")
    b.add_argument("--config", help="JSON config; flags override its fields")
    b.add_argument("--dist", choices=["uniform", "lognormal", "file"])
    b.add_argument("--path", help="instance CSV for --dist file")
    b.add_argument("--mu", type=float)
    b.add_argument("--v", type=float)
    b.add_argument("--read-mean", type=float)
    b.add_argument("--lbar", type=float)
    b.add_argument("--rbar", type=float)
    b.add_argument("--seed", type=int)
    b.add_argument("--model")
    b.add_argument("--policies", help="comma-separated policy names")
    b.add_argument("--n-grid", help="comma-separated horizons")
    b.add_argument("--opt", dest="opt", action="store_true", default=None)
    b.add_argument("--no-opt", dest="opt", action="store_false")
    b.add_argument("--opt-max-n", type=int)
    b.add_argument("--reps", type=int)
    b.add_argument("--out")
    b.add_argument("--plot", help="SVG output")
    b.add_argument("--table", help="text table next to the plot")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("adversary", help="adaptive lower-bound instance against a policy")
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--lk", type=int, required=True)
    a.add_argument("--override", help="comma-separated L_1..L_{K-1}")
    a.add_argument("--policy", required=True)
    a.add_argument("--max-steps", type=int, default=2_000_000)
    a.add_argument("--out")
    a.add_argument("--stats")
    a.set_defaults(func=cmd_adversary)

    pl = sub.add_parser("plot", help="SVG + text table from a results CSV")
    pl.add_argument("--results", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--table")
    pl.add_argument("--title")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ScheduleError, LadderOverflowError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (PolicyError, AdversaryError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BMCError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
