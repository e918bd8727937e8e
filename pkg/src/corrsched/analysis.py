"""Cross-checks: policy-class comparisons, counterexample, bound audits.

Everything here is read-only over problem specs and simulation output.  The
expectation-style bounds are audited with statistical slack (a single sample
path need not satisfy an expectation inequality); the sample-path queue
bound is audited exactly because it is an algebraic identity of the update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Sequence

import numpy as np

from .fixtures import counterexample_spec
from .online import DppConfig, compute_B, compute_F, performance_bound, queue_change_bound, slater_queue_bound
from .optimizer import (
    CorrelatedPolicy,
    evaluate_independent_policy,
    solve_centralized_lp,
    solve_distributed_lp,
)
from .problem import CapExceeded, ProblemSpec
from .simplex import Infeasible, LpProblem, LpStatus, solve_lp
from .simulator import EnsembleMetrics, Trace, summarize
from .strategy import (
    PureStrategy,
    _nondecreasing_maps,
    enumerate_all,
    enumerate_nondecreasing,
    prune_applicable,
    r_matrix,
)

PROBE_COMBO_CAP = 4096


@dataclass(eq=False)
class ComparisonReport:
    """Utilities of the three policy classes, best-first ordering expected."""

    independent_best: float
    distributed_opt: float
    centralized_opt: float
    probed_values: list[float]

    @property
    def centralized_gap(self) -> float:
        return self.centralized_opt - self.distributed_opt

    @property
    def correlation_gain(self) -> float:
        return self.distributed_opt - self.independent_best


def verify_counterexample() -> tuple[float, float]:
    """Centralized vs distributed utility on the sign-agreement game: (1, 1/2)."""
    spec = counterexample_spec()
    centralized = solve_centralized_lp(spec)
    distributed = solve_distributed_lp(spec, enumerate_all(spec))
    return centralized.utility, distributed.utility


def _mixture_conditionals(
    spec: ProblemSpec, bases: Sequence[Sequence[int]], etas: np.ndarray
) -> list[np.ndarray]:
    conds = []
    for i, base in enumerate(bases):
        cond = np.zeros((spec.event_sizes[i], spec.action_sizes[i]))
        cond[:, 0] = 1.0 - etas[i]
        for w, a in enumerate(base):
            cond[w, a] += etas[i]
        conds.append(cond)
    return conds


def _ascend_mixture(
    spec: ProblemSpec, bases: Sequence[Sequence[int]], tol: float = 1e-9
) -> np.ndarray | None:
    """Maximize utility over per-user activation probabilities, exactly.

    Expected penalties are affine in each eta_i with the others held fixed,
    so every coordinate step solves a closed-form interval problem; ascent
    stops at a coordinatewise optimum.  Tries the all-idle and all-active
    starting points; returns the best feasible expected-penalty vector, or
    None when neither start is feasible.
    """
    c = np.asarray(spec.constraints, dtype=float)
    k = spec.n_constraints
    best: np.ndarray | None = None
    for start in (0.0, 1.0):
        etas = np.full(spec.n_users, start)
        r = evaluate_independent_policy(spec, _mixture_conditionals(spec, bases, etas))
        if k and np.any(r[1:] > c + tol):
            continue
        for _ in range(40):
            changed = False
            for i in range(spec.n_users):
                save = etas[i]
                etas[i] = 0.0
                r0 = evaluate_independent_policy(
                    spec, _mixture_conditionals(spec, bases, etas)
                )
                etas[i] = 1.0
                r1 = evaluate_independent_policy(
                    spec, _mixture_conditionals(spec, bases, etas)
                )
                slope = r1 - r0
                lo, hi = 0.0, 1.0
                ok = True
                for j in range(k):
                    b = slope[1 + j]
                    a = r0[1 + j]
                    if b > tol:
                        hi = min(hi, (c[j] - a) / b)
                    elif b < -tol:
                        lo = max(lo, (c[j] - a) / b)
                    elif a > c[j] + tol:
                        ok = False
                if not ok or lo > hi + tol:
                    etas[i] = save
                    continue
                hi = min(hi, 1.0)
                lo = max(lo, 0.0)
                new = hi if slope[0] < 0 else lo
                new = min(max(new, lo), hi)
                if abs(new - save) > 1e-12:
                    changed = True
                etas[i] = new
            if not changed:
                break
        r = evaluate_independent_policy(spec, _mixture_conditionals(spec, bases, etas))
        if k and np.any(r[1:] > c + 1e-9):
            continue
        if best is None or r[0] < best[0]:
            best = r
    return best


def _probe_bases(spec: ProblemSpec) -> list[list[tuple[int, ...]]]:
    per_user_all = [
        list(iter_product(range(a), repeat=w))
        for a, w in zip(spec.action_sizes, spec.event_sizes)
    ]
    if math.prod(len(b) for b in per_user_all) <= PROBE_COMBO_CAP:
        return per_user_all
    per_user_mono = [
        list(_nondecreasing_maps(w, a))
        for a, w in zip(spec.action_sizes, spec.event_sizes)
    ]
    if math.prod(len(b) for b in per_user_mono) <= PROBE_COMBO_CAP:
        return per_user_mono
    raise CapExceeded(math.prod(len(b) for b in per_user_mono), PROBE_COMBO_CAP)


def compare_policies(spec: ProblemSpec) -> ComparisonReport:
    """Best independent (probed), correlated, and centralized utilities.

    The independent probe sweeps per-user base strategies mixed with the idle
    action, optimizing activation probabilities by exact coordinate ascent;
    each probe is itself a valid distributed policy, so probed utilities can
    never exceed the correlated optimum.
    """
    strategies = (
        enumerate_nondecreasing(spec) if prune_applicable(spec) else enumerate_all(spec)
    )
    distributed = solve_distributed_lp(spec, strategies)
    centralized = solve_centralized_lp(spec)
    probed: list[float] = []
    for bases in iter_product(*_probe_bases(spec)):
        r = _ascend_mixture(spec, bases)
        if r is not None:
            probed.append(float(-r[0]))
    if not probed:
        raise Infeasible("no feasible independent policy found on the probe grid")
    return ComparisonReport(
        independent_best=max(probed),
        distributed_opt=distributed.utility,
        centralized_opt=centralized.utility,
        probed_values=probed,
    )


def epsilon_max(
    spec: ProblemSpec,
    strategies: Sequence[PureStrategy],
    r: np.ndarray | None = None,
    tol: float = 1e-6,
) -> float:
    """Largest uniform constraint slack that keeps the strategy LP feasible.

    Bisects on the slack; each probe is a phase-1 feasibility solve of the
    tightened LP.  Positive slack is the Slater condition.
    """
    if spec.n_constraints == 0:
        raise ValueError("needs at least one constraint")
    if r is None:
        r = r_matrix(spec, strategies)
    c = np.asarray(spec.constraints, dtype=float)
    m = len(strategies)

    def feasible(eps: float) -> bool:
        lp = LpProblem(
            cost=np.zeros(m),
            a_ub=r[:, 1:].T,
            b_ub=c - eps,
            a_eq=np.ones((1, m)),
            b_eq=np.array([1.0]),
        )
        return solve_lp(lp).status is LpStatus.OPTIMAL

    if not feasible(0.0):
        raise Infeasible("constraints are infeasible even with zero slack")
    hi = float(np.min(c - r[:, 1:].min(axis=0))) + tol
    if hi <= 0:
        return 0.0
    lo = 0.0
    while feasible(hi):  # numerical safety; hi is infeasible in exact arithmetic
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(eq=False)
class BoundReport:
    p0_opt: float
    b_const: float
    worst_perf_margin: float
    perf_ok: bool
    queue_bound_max_residual: float
    queue_ok: bool


def audit_bounds(
    trace: Trace,
    spec: ProblemSpec,
    strategies: Sequence[PureStrategy],
    dpp: DppConfig,
    p0_opt: float | None = None,
    sigma_mult: float = 3.0,
) -> BoundReport:
    """Check a run against the O(1/V) performance bound and the queue bound.

    The performance check allows sigma_mult standard errors of slack since
    the bound constrains an expectation and the trace is one sample path.
    The queue (sample-path) check needs a stride-1 trace with metadata.
    """
    r = r_matrix(spec, strategies)
    if p0_opt is None:
        p0_opt = solve_distributed_lp(spec, strategies, r=r).objective
    b_const = compute_B(spec, strategies)
    pbar0 = -trace.ubar
    counts = trace.t.astype(float) + 1.0
    var_p0 = float(np.var(trace.u))
    slack = sigma_mult * np.sqrt(var_p0 / counts)
    # queues start at zero and see only zero penalties through slot D, so the
    # post-warm-up queue energy is deterministic (nonzero only for c_k < 0)
    c = np.asarray(spec.constraints, dtype=float)
    l_d = 0.5 * float(np.sum((dpp.delay * np.maximum(-c, 0.0)) ** 2))
    bounds = np.array(
        [
            performance_bound(b_const, dpp.delay, dpp.v, int(n), l_d, p0_opt)
            for n in counts
        ]
    )
    margins = pbar0 - bounds - slack
    worst = float(margins.max())

    residual = float("nan")
    if trace.constraints is not None and len(trace) == trace.t[-1] + 1:
        residual = summarize(trace).queue_bound_max_residual
    queue_ok = not math.isnan(residual) and residual <= 1e-9
    return BoundReport(
        p0_opt=float(p0_opt),
        b_const=b_const,
        worst_perf_margin=worst,
        perf_ok=worst <= 0.0,
        queue_bound_max_residual=residual,
        queue_ok=queue_ok,
    )


@dataclass(eq=False)
class SlaterReport:
    eps_max: float
    delta_max: float
    a_const: float
    worst_margin: float
    ok: bool


def audit_slater(
    ensemble: EnsembleMetrics,
    spec: ProblemSpec,
    strategies: Sequence[PureStrategy],
    v: float,
) -> SlaterReport:
    """One-sided sanity check of the log-growth queue envelope on an ensemble.

    Uses the conservative gap constant, so the envelope is loose by design;
    a violation signals a real problem.
    """
    r = r_matrix(spec, strategies)
    p0_opt = solve_distributed_lp(spec, strategies, r=r).objective
    eps = epsilon_max(spec, strategies, r=r)
    if eps <= 0:
        raise Infeasible("no uniform slack; the envelope needs a Slater point")
    delta_max = queue_change_bound(spec)
    a_const = compute_B(spec, strategies) + compute_F(spec, r, p0_opt) * v
    worst = -math.inf
    for t in range(1, ensemble.horizon):
        bound = slater_queue_bound(a_const, eps, delta_max, t)
        worst = max(worst, float(ensemble.mean_qnorm[t] - bound))
    return SlaterReport(
        eps_max=eps,
        delta_max=delta_max,
        a_const=a_const,
        worst_margin=worst,
        ok=worst <= 0.0,
    )
