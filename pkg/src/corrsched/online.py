"""Online drift-plus-penalty control with virtual queues and delayed feedback.

Each constraint carries a virtual queue updated by
``Q_k(t+1) = max(Q_k(t) + p_k(t-D) - c_k, 0)`` with ``p_k`` taken as zero for
negative slots.  Every slot the controller picks the strategy index
minimizing ``V r_0 + sum_k Q_k r_k``, using exact expected penalties, a
moving-window estimate of them, or (for separable penalties) a per-user
argmin that needs no strategy enumeration at all.  Ties always resolve to the
lowest index.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .problem import (
    CapExceeded,
    ProblemSpec,
    flat_event_probabilities,
    joint_components,
    penalty_tables,
)
from .strategy import PureStrategy, strategy_event_penalties

SEPARABLE_TOL = 1e-9
SEPARABLE_CAP = 10**7


class NotSeparable(Exception):
    """Raised when penalties do not split into per-user terms."""


@dataclass
class DppConfig:
    """Controller parameters: tradeoff weight V, feedback delay D, and mode."""

    v: float
    delay: int = 0
    mode: str = "exact"  # "exact" | "approx" | "separable"
    window: int | None = None

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("V must be non-negative")
        if self.delay < 0:
            raise ValueError("delay must be non-negative")
        if self.mode not in ("exact", "approx", "separable"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "approx" and (self.window is None or self.window < 1):
            raise ValueError("approx mode needs window >= 1")


@dataclass(eq=False)
class QueueState:
    """Virtual queues plus the buffer of penalties still in flight."""

    q: np.ndarray  # (K,), always >= 0
    delay_buffer: deque  # D most recent penalty vectors, oldest first
    t: int = 0


def initial_queue_state(n_constraints: int, delay: int) -> QueueState:
    """Zero queues and a delay line primed with D zero penalty vectors."""
    buffer = deque(np.zeros(n_constraints) for _ in range(delay))
    return QueueState(q=np.zeros(n_constraints), delay_buffer=buffer, t=0)


def queue_update(
    state: QueueState, delayed_penalties: np.ndarray, constraints: Sequence[float]
) -> QueueState:
    """Apply one max-with-zero update with the slot t-D penalties."""
    q = np.maximum(state.q + np.asarray(delayed_penalties, dtype=float) - np.asarray(constraints), 0.0)
    return QueueState(q=q, delay_buffer=state.delay_buffer, t=state.t + 1)


def advance_queues(
    state: QueueState, penalties_t: np.ndarray, constraints: Sequence[float]
) -> QueueState:
    """Push this slot's penalties into the delay line and update the queues.

    With delay D the update consumes the penalties produced D slots ago; the
    buffer starts out holding D zero vectors, which is exactly the convention
    that pre-history penalties are zero.
    """
    penalties_t = np.asarray(penalties_t, dtype=float)
    if len(state.delay_buffer) == 0:  # D = 0: feedback arrives the same slot
        delayed = penalties_t
    else:
        delayed = state.delay_buffer.popleft()
        state.delay_buffer.append(penalties_t)
    return queue_update(state, delayed, constraints)


def dpp_select(r: np.ndarray, q: np.ndarray, v: float) -> int:
    """Index minimizing V r_0 + Q . r_k over strategies; lowest index wins ties."""
    weights = np.concatenate(([v], np.asarray(q, dtype=float)))
    scores = r @ weights
    return int(np.argmin(scores))


class RollingEstimator:
    """Moving-window averages of per-strategy penalties from delayed samples.

    Keeps the last W delayed event samples and the running sum of the
    corresponding penalty rows; the estimate for each strategy and penalty is
    the exact average over whatever samples are buffered.
    """

    def __init__(self, event_penalties: np.ndarray, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.event_penalties = event_penalties  # (n_events, M, K+1)
        self.window = window
        self.samples = np.zeros(window, dtype=np.int64)
        self.count = 0
        self._pos = 0
        self.sums = np.zeros(event_penalties.shape[1:])

    def push(self, event_index: int) -> None:
        if self.count == self.window:
            self.sums -= self.event_penalties[self.samples[self._pos]]
        else:
            self.count += 1
        self.samples[self._pos] = event_index
        self._pos = (self._pos + 1) % self.window
        self.sums += self.event_penalties[event_index]

    def values(self) -> np.ndarray:
        """Current estimates (M, K+1); zeros before the first sample."""
        if self.count == 0:
            return np.zeros_like(self.sums)
        return self.sums / self.count

    def select(self, q: np.ndarray, v: float) -> int:
        if self.count == 0:
            return 0
        weights = np.concatenate(([v], np.asarray(q, dtype=float)))
        return int(np.argmin(self.sums @ weights))


def approx_update_and_select(
    estimator: RollingEstimator, event_index: int, q: np.ndarray, v: float
) -> int:
    """Feed the newly revealed delayed sample, then pick a strategy."""
    estimator.push(event_index)
    return estimator.select(q, v)


# ---------------------------------------------------------------------------
# Separable fast path
# ---------------------------------------------------------------------------


def separable_components(spec: ProblemSpec, cap: int = SEPARABLE_CAP) -> list[np.ndarray]:
    """Split every penalty into per-user terms, or raise NotSeparable.

    Uses the uniform-average decomposition: the candidate per-user component
    is the penalty's mean over all other coordinates, recentered so the parts
    sum back to the grand mean.  The split is accepted only if reassembling
    the parts reproduces every table entry.
    Returns one (K+1, |Omega_i|, |A_i|) array per user.
    """
    if spec.n_events * spec.n_actions > cap:
        raise CapExceeded(spec.n_events * spec.n_actions, cap)
    tables = penalty_tables(spec)
    n = spec.n_users
    shaped = tables.reshape((len(tables),) + spec.event_sizes + spec.action_sizes)
    scale = max(1.0, float(np.max(np.abs(tables))))
    components = [
        np.zeros((len(tables), spec.event_sizes[i], spec.action_sizes[i]))
        for i in range(n)
    ]
    omega_comp = joint_components(spec.event_sizes)
    alpha_comp = joint_components(spec.action_sizes)
    for k in range(len(tables)):
        grand = float(np.mean(shaped[k]))
        rebuilt = np.zeros((spec.n_events, spec.n_actions))
        for i in range(n):
            keep = (1 + i, 1 + n + i)
            other_axes = tuple(
                ax for ax in range(1, 1 + 2 * n) if ax not in keep
            )
            mean_i = np.mean(shaped[k], axis=tuple(a - 1 for a in other_axes))
            comp = mean_i - (n - 1) / n * grand
            components[i][k] = comp
            rebuilt += comp[np.ix_(omega_comp[:, i], alpha_comp[:, i])]
        if not np.allclose(rebuilt, tables[k], atol=SEPARABLE_TOL * scale, rtol=0.0):
            raise NotSeparable(f"penalty {k} does not split into per-user terms")
    return components


def separable_strategy(
    components: Sequence[np.ndarray], q: np.ndarray, v: float
) -> PureStrategy:
    """Per-user argmin maps for the current weights; jointly optimal.

    Minimizing V p_0 + Q . p over pure strategies decomposes across users
    when every penalty is a per-user sum, so each map can be built from that
    user's own component tables alone.
    """
    weights = np.concatenate(([v], np.asarray(q, dtype=float)))
    maps = []
    for comp in components:
        scores = np.tensordot(weights, comp, axes=(0, 0))  # (|Omega_i|, |A_i|)
        maps.append(tuple(int(a) for a in np.argmin(scores, axis=1)))
    return PureStrategy(tuple(maps))


def separable_select(
    components: Sequence[np.ndarray], q: np.ndarray, v: float, omega: Sequence[int]
) -> tuple[int, ...]:
    """Actions for the observed events; each user needs only its own omega_i."""
    weights = np.concatenate(([v], np.asarray(q, dtype=float)))
    return tuple(
        int(np.argmin(weights @ comp[:, omega[i], :]))
        for i, comp in enumerate(components)
    )


# ---------------------------------------------------------------------------
# Bound constants
# ---------------------------------------------------------------------------


def compute_B(
    spec: ProblemSpec,
    strategies: Sequence[PureStrategy],
    event_penalties: np.ndarray | None = None,
) -> float:
    """Drift constant: worst strategy's half mean squared constraint deviation."""
    if spec.n_constraints == 0:
        return 0.0
    if event_penalties is None:
        event_penalties = strategy_event_penalties(spec, strategies)
    pi = flat_event_probabilities(spec.distribution, spec.event_sizes)
    dev = event_penalties[:, :, 1:] - np.asarray(spec.constraints)
    per_strategy = 0.5 * np.einsum("w,wmk->m", pi, dev * dev)
    return float(per_strategy.max())


def compute_F(spec: ProblemSpec, r: np.ndarray, p0_opt: float) -> float:
    """Conservative optimality-gap constant for queue-growth envelopes."""
    table0 = spec.penalties[0].expand(spec.action_sizes, spec.event_sizes)
    span = float(table0.max() - table0.min())
    return float(np.max(np.abs(p0_opt - r[:, 0]))) + span


def performance_bound(
    b: float, delay: int, v: float, t: int, l_d: float, p0_opt: float
) -> float:
    """Upper bound on the running mean of p_0 after t slots."""
    if v <= 0:
        raise ValueError("V must be positive for the performance bound")
    if t <= 0:
        raise ValueError("t must be positive")
    return p0_opt + b * (1 + 2 * delay) / v + l_d / (v * t)


def slater_queue_bound(a: float, eps: float, delta_max: float, t: int) -> float:
    """Expected queue-norm bound under a Slater slack of eps.

    Grows like O(log t); valid for drift satisfying
    E[drift | Q] <= a - eps * sum_k Q_k with zero initial queues.
    """
    r = eps / (delta_max**2 + eps * delta_max / 3.0)
    head = math.log(2.0) / r
    tail = max(2.0 * a / eps, eps / 2.0) + math.log(
        2.0 * t * (math.exp(r * delta_max) - 1.0)
    ) / r
    return max(head, tail)


def queue_change_bound(spec: ProblemSpec) -> float:
    """Largest possible one-slot change of the queue norm."""
    tables = penalty_tables(spec)
    if spec.n_constraints == 0:
        return 0.0
    dev = np.abs(tables[1:] - np.asarray(spec.constraints)[:, None, None])
    per_k = dev.reshape(spec.n_constraints, -1).max(axis=1)
    return float(np.sqrt(np.sum(per_k**2)))
