"""Correlated scheduling for multi-user distributed stochastic optimization.

Offline: enumerate pure strategies, prune to monotone ones when sound, and
solve the correlated-randomization LP whose basic optima need at most K+1
support strategies.  Online: drift-plus-penalty control with virtual queues
and delayed feedback, exact or estimated expected penalties, plus a
separable fast path.  A seeded simulator and bound audits round it out.
"""

from .problem import (
    CapExceeded,
    CollisionUtilityNeg,
    EventDistribution,
    FullTable,
    JointDistribution,
    MinSumUtilityNeg,
    PowerPerUser,
    ProblemSpec,
    ProductDistribution,
    ProductForm,
    ValidationReport,
    WeightedSum,
    eval_penalty,
    event_probability,
    sample_event,
    validate_spec,
)
from .strategy import (
    PureStrategy,
    check_preferred_action,
    compute_r_vector,
    drop_act_on_zero,
    enumerate_all,
    enumerate_nondecreasing,
    prune_applicable,
    r_matrix,
)
from .simplex import Infeasible, LpProblem, LpSolution, LpStatus, solve_lp
from .optimizer import (
    CentralizedPolicy,
    CorrelatedPolicy,
    brute_force_distributed_oracle,
    evaluate_independent_policy,
    sample_strategy,
    solve_centralized_lp,
    solve_distributed_lp,
)
from .online import (
    DppConfig,
    NotSeparable,
    QueueState,
    RollingEstimator,
    advance_queues,
    approx_update_and_select,
    compute_B,
    compute_F,
    dpp_select,
    initial_queue_state,
    performance_bound,
    queue_update,
    separable_components,
    separable_select,
    separable_strategy,
    slater_queue_bound,
)
from .simulator import (
    EnsembleMetrics,
    Metrics,
    Phase,
    SimConfig,
    Trace,
    read_trace,
    run_ensemble,
    run_episode,
    summarize,
    write_trace,
)
from .analysis import (
    BoundReport,
    ComparisonReport,
    SlaterReport,
    audit_bounds,
    audit_slater,
    compare_policies,
    epsilon_max,
    verify_counterexample,
)

__version__ = "0.1.0"
