"""Merge-compaction scheduling: cost models, offline optima, online policies,
adversarial instances and a benchmark harness."""

from .model import (
    BMCError,
    CappedK,
    CostModel,
    General,
    InfeasibleScheduleError,
    Instance,
    Linear,
    Schedule,
    ScheduleError,
    SimulationTrace,
    Validity,
    cost_of,
    parse_model,
    simulate,
    sqrt_model,
    validate_schedule,
)
from .tree import (
    MergeTree,
    potential,
    schedule_to_tree,
    spine_insert,
    tree_cost,
    tree_lower_bound,
    tree_to_schedule,
)
from .opt import (
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
from .policies import (
    make_brb,
    make_default,
    make_doubling,
    make_linear_online,
    make_merge_all,
    parse_policy,
    policy_step,
    run_policy,
)
from .adversary import build_ladder, max_based_cost, reference_schedules_bound, run_adversary
from .workload import IidLogNormalExp, Uniform, WorkloadSpec, empirical_means, generate
from .bench import ExperimentConfig, emit_plot_data, run_experiment

__version__ = "0.1.0"
