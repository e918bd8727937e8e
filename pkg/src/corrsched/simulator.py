"""Seeded multi-slot simulation of the drift-plus-penalty controller.

The harness samples events, lets the controller pick a strategy from queue
state (exact, windowed-estimate, or separable mode), computes penalties
centrally, and reveals them to the queues only after the configured delay,
so the information model holds by construction.  Runs are bit-reproducible
from (config, seed); ensemble run r uses seed base_seed + r.

Per-slot running averages include the current slot: ubar(t) averages
u(0..t).  The recorded queue column is the queue value the controller saw
when selecting at slot t.  Every run also streams the sample-path check
that the averaged delayed penalties stay below c_k + Q_k(t)/t; the worst
residual lands in Metrics.queue_bound_max_residual (exact-arithmetic
identity of the update rule, so anything above rounding noise is a bug).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .online import DppConfig, RollingEstimator, separable_components
from .problem import (
    EventDistribution,
    ProblemSpec,
    flat_event_probabilities,
    joint_components,
    penalty_tables,
    sample_event_indices,
)
from .strategy import (
    PureStrategy,
    enumerate_all,
    enumerate_nondecreasing,
    prune_applicable,
    strategy_event_penalties,
)


@dataclass(frozen=True, eq=False)
class Phase:
    """Half-open slot range [start, end) governed by one event distribution."""

    start: int
    end: int
    distribution: EventDistribution


@dataclass(eq=False)
class SimConfig:
    spec: ProblemSpec
    dpp: DppConfig
    horizon: int
    seed: int
    strategies: Sequence[PureStrategy] | None = None
    phases: Sequence[Phase] | None = None
    runs: int = 1
    stride: int = 100
    # optional cache of strategy_event_penalties(spec, strategies); ensembles
    # reuse it across runs instead of rebuilding per episode
    event_penalties: np.ndarray | None = None


@dataclass(eq=False)
class Trace:
    t: np.ndarray  # recorded slots
    strategy: np.ndarray  # chosen strategy index; -1 in separable mode
    u: np.ndarray
    p: np.ndarray  # (n, K) instantaneous penalties
    q: np.ndarray  # (n, K) queues at selection time
    ubar: np.ndarray
    pbar: np.ndarray  # (n, K)
    delay: int | None = None
    constraints: tuple[float, ...] | None = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def max_pbar(self) -> np.ndarray:
        """Worst running constraint average at each recorded slot."""
        return self.pbar.max(axis=1)


@dataclass(eq=False)
class Metrics:
    slots: int
    utility: float
    pbar: np.ndarray
    final_queues: np.ndarray
    queue_bound_max_residual: float


@dataclass(eq=False)
class EnsembleMetrics:
    """Pointwise across-run means of the per-slot utility, penalties, ||Q||."""

    runs: int
    horizon: int
    mean_u: np.ndarray
    mean_p: np.ndarray
    mean_qnorm: np.ndarray
    seeds: list[int]
    per_run: list[Metrics]


def resolve_strategies(config: SimConfig) -> list[PureStrategy]:
    if config.strategies is not None:
        return list(config.strategies)
    if prune_applicable(config.spec):
        return enumerate_nondecreasing(config.spec)
    return enumerate_all(config.spec)


def _resolve_phases(config: SimConfig) -> list[Phase]:
    if not config.phases:
        return [Phase(0, config.horizon, config.spec.distribution)]
    phases = sorted(config.phases, key=lambda ph: ph.start)
    if phases[0].start != 0 or phases[-1].end != config.horizon:
        raise ValueError("phases must cover [0, horizon)")
    for a, b in zip(phases, phases[1:]):
        if a.end != b.start:
            raise ValueError("phases must be contiguous")
    return phases


def run_episode(config: SimConfig, record: bool = True) -> tuple[Metrics, Trace | None]:
    """Simulate one seeded run; returns metrics and (optionally) a trace.

    The loop stores full per-slot penalty and queue series (the penalty
    series doubles as the feedback delay line); running averages and the
    sample-path queue-bound residual are then computed in one vectorized
    pass.  Memory is O(horizon * K), fine for desk-scale horizons.
    """
    spec = config.spec
    dpp = config.dpp
    horizon = int(config.horizon)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n_k = spec.n_constraints
    c = np.asarray(spec.constraints, dtype=float)
    phases = _resolve_phases(config)
    rng = np.random.default_rng(config.seed)

    omega_seq = np.empty(horizon, dtype=np.int64)
    for ph in phases:
        omega_seq[ph.start : ph.end] = sample_event_indices(
            ph.distribution, spec.event_sizes, rng, ph.end - ph.start
        )

    mode = dpp.mode
    tables = penalty_tables(spec)
    if mode == "separable":
        comps = separable_components(spec)
        sep = [np.ascontiguousarray(comp.transpose(1, 2, 0)) for comp in comps]
        action_strides = np.ones(spec.n_users, dtype=np.int64)
        for i in range(spec.n_users - 2, -1, -1):
            action_strides[i] = action_strides[i + 1] * spec.action_sizes[i + 1]
        omega_comp = joint_components(spec.event_sizes)
        event_action_pen = np.ascontiguousarray(tables.transpose(1, 2, 0))
        event_pen = None
    elif config.event_penalties is not None:
        event_pen = config.event_penalties
    else:
        strategies = resolve_strategies(config)
        event_pen = strategy_event_penalties(spec, strategies, tables)

    estimator = None
    phase_r: list[np.ndarray] = []
    if mode == "approx":
        estimator = RollingEstimator(event_pen, dpp.window)
    elif mode == "exact":
        for ph in phases:
            pi = flat_event_probabilities(ph.distribution, spec.event_sizes)
            phase_r.append(np.tensordot(pi, event_pen, axes=(0, 0)))

    delay = dpp.delay
    pen_series = np.empty((horizon, n_k + 1))  # also serves as the delay line
    pen1_series = pen_series[:, 1:]
    sel_q = np.empty((horizon, n_k))  # queue values seen by the controller
    m_series = np.empty(horizon, dtype=np.int64)
    zero_row = np.zeros(n_k)
    wvec = np.empty(n_k + 1)
    wvec[0] = dpp.v
    q = wvec[1:]  # live queue vector, updated in place
    q[:] = 0.0

    n_users = spec.n_users
    phase_idx = 0
    next_phase_start = phases[0].end if len(phases) > 1 else horizon
    r_cur = phase_r[0] if mode == "exact" else None
    score_dot = r_cur.dot if mode == "exact" else None

    for t in range(horizon):
        if t == next_phase_start:
            phase_idx += 1
            next_phase_start = (
                phases[phase_idx].end if phase_idx + 1 < len(phases) else horizon
            )
            if mode == "exact":
                r_cur = phase_r[phase_idx]
                score_dot = r_cur.dot
        wf = omega_seq[t]

        if mode == "exact":
            m = score_dot(wvec).argmin()
            pen_series[t] = event_pen[wf, m]
        elif mode == "approx":
            if t >= delay:
                estimator.push(omega_seq[t - delay])
            m = estimator.sums.dot(wvec).argmin() if estimator.count else 0
            pen_series[t] = event_pen[wf, m]
        else:  # separable
            af = 0
            for i in range(n_users):
                af += action_strides[i] * sep[i][omega_comp[wf, i]].dot(wvec).argmin()
            m = -1
            pen_series[t] = event_action_pen[wf, af]

        m_series[t] = m
        sel_q[t] = q
        dp1 = pen1_series[t - delay] if t >= delay else zero_row
        q += dp1
        q -= c
        np.maximum(q, 0.0, out=q)

    # Vectorized post-pass: running averages and the sample-path queue bound
    # (mean delayed penalty through slot t' must stay below c + Q(t')/t').
    csum = np.cumsum(pen_series, axis=0)
    counts = np.arange(1.0, horizon + 1.0)
    worst_residual = 0.0
    if n_k:
        shifted_sum = np.empty((horizon, n_k))
        if delay:
            shifted_sum[: min(delay, horizon)] = 0.0
            if delay < horizon:
                shifted_sum[delay:] = csum[: horizon - delay, 1:]
        else:
            shifted_sum[:] = csum[:, 1:]
        q_after = np.vstack([sel_q[1:], q[None, :]])
        resid = (shifted_sum - q_after) / counts[:, None] - c
        worst_residual = float(resid.max())

    metrics = Metrics(
        slots=horizon,
        utility=float(-csum[-1, 0] / horizon),
        pbar=csum[-1, 1:] / horizon,
        final_queues=q.copy(),
        queue_bound_max_residual=worst_residual,
    )
    trace = None
    if record:
        stride = max(int(config.stride), 1)
        idx = np.arange(0, horizon, stride)
        trace = Trace(
            t=idx,
            strategy=m_series[idx],
            u=-pen_series[idx, 0],
            p=pen_series[idx, 1:].copy(),
            q=sel_q[idx].copy(),
            ubar=-csum[idx, 0] / counts[idx],
            pbar=csum[idx, 1:] / counts[idx, None],
            delay=delay,
            constraints=spec.constraints,
        )
    return metrics, trace


def run_ensemble(config: SimConfig, seeds: Sequence[int] | None = None) -> EnsembleMetrics:
    """Average instantaneous per-slot utility/penalties/||Q|| across runs.

    Runs are independent; seeds default to base_seed + run_index.  Traces are
    collected at full resolution internally regardless of config.stride.
    """
    runs = config.runs if seeds is None else len(seeds)
    if runs < 1:
        raise ValueError("need at least one run")
    if seeds is None:
        seeds = [config.seed + i for i in range(runs)]
    horizon = config.horizon
    n_k = config.spec.n_constraints
    event_pen = config.event_penalties
    if event_pen is None and config.dpp.mode != "separable":
        event_pen = strategy_event_penalties(config.spec, resolve_strategies(config))
    acc_u = np.zeros(horizon)
    acc_p = np.zeros((horizon, n_k))
    acc_qn = np.zeros(horizon)
    per_run = []
    for seed in seeds:
        run_cfg = replace(config, seed=seed, runs=1, stride=1, event_penalties=event_pen)
        metrics, trace = run_episode(run_cfg, record=True)
        acc_u += trace.u
        acc_p += trace.p
        acc_qn += np.sqrt((trace.q**2).sum(axis=1))
        per_run.append(metrics)
    return EnsembleMetrics(
        runs=runs,
        horizon=horizon,
        mean_u=acc_u / runs,
        mean_p=acc_p / runs,
        mean_qnorm=acc_qn / runs,
        seeds=list(seeds),
        per_run=per_run,
    )


def summarize(
    trace: Trace,
    constraints: Sequence[float] | None = None,
    delay: int | None = None,
) -> Metrics:
    """Recompute running averages from a full-resolution trace.

    Requires consecutive slots starting at 0.  The queue-bound residual needs
    the constraint levels and delay; they are taken from the trace metadata
    when not passed, and the residual is NaN if neither is available (e.g.
    after a CSV round-trip).
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    n = len(trace)
    if trace.t[0] != 0 or not np.array_equal(trace.t, np.arange(n)):
        raise ValueError("summarize needs a stride-1 trace starting at slot 0")
    counts = np.arange(1, n + 1, dtype=float)
    ubar = np.cumsum(trace.u) / counts
    pbar = np.cumsum(trace.p, axis=0) / counts[:, None]
    constraints = constraints if constraints is not None else trace.constraints
    delay = delay if delay is not None else trace.delay
    residual = float("nan")
    if constraints is not None and delay is not None and trace.p.shape[1]:
        # audit the *recorded* queues against the recorded penalty debt: mean
        # delayed penalty through slot t must stay below c + Q(t)/t, where
        # Q(t) is the queue column (selection-time values, so Q(t) covers
        # penalties through slot t-1)
        c = np.asarray(constraints, dtype=float)
        shifted = np.zeros_like(trace.p)
        if delay < n:
            shifted[delay:] = trace.p[: n - delay]
        dsum = np.cumsum(shifted, axis=0)
        if n > 1:
            resid = (dsum[: n - 1] - trace.q[1:]) / counts[: n - 1, None] - c
            residual = float(resid.max())
        else:
            residual = -np.inf
    return Metrics(
        slots=n,
        utility=float(ubar[-1]),
        pbar=pbar[-1],
        final_queues=trace.q[-1].copy(),
        queue_bound_max_residual=residual,
    )


def write_trace(trace: Trace, path) -> None:
    """CSV with 17 significant digits so values round-trip exactly."""
    n_k = trace.p.shape[1]
    header = (
        ["t", "strategy", "u"]
        + [f"p_{k + 1}" for k in range(n_k)]
        + [f"Q_{k + 1}" for k in range(n_k)]
        + ["ubar"]
        + [f"pbar_{k + 1}" for k in range(n_k)]
    )
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(len(trace)):
                cells = [str(int(trace.t[i])), str(int(trace.strategy[i]))]
                cells.append("%.17g" % trace.u[i])
                cells.extend("%.17g" % v for v in trace.p[i])
                cells.extend("%.17g" % v for v in trace.q[i])
                cells.append("%.17g" % trace.ubar[i])
                cells.extend("%.17g" % v for v in trace.pbar[i])
                fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace(path) -> Trace:
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    n_cols = len(header)
    n_k = (n_cols - 4) // 3
    if n_cols != 4 + 3 * n_k:
        raise ValueError(f"unexpected trace header {header!r}")
    t = data[:, 0].astype(np.int64)
    strategy = data[:, 1].astype(np.int64)
    u = data[:, 2]
    p = data[:, 3 : 3 + n_k]
    q = data[:, 3 + n_k : 3 + 2 * n_k]
    ubar = data[:, 3 + 2 * n_k]
    pbar = data[:, 4 + 2 * n_k : 4 + 3 * n_k]
    return Trace(t=t, strategy=strategy, u=u, p=p, q=q, ubar=ubar, pbar=pbar)
