"""Pure strategies: enumeration, monotone pruning, expected-penalty vectors.

A pure strategy assigns each user a deterministic map from its own observed
event to an action.  Strategies are ordered lexicographically on the
concatenated per-user maps; that order fixes every downstream tie-break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

import numpy as np

from .problem import (
    CapExceeded,
    ProblemSpec,
    ProductDistribution,
    flat_event_probabilities,
    joint_components,
    joint_strides,
    penalty_tables,
)

ENUM_CAP = 10**6
CHECK_CAP = 10**7
MONOTONE_TOL = 1e-12


@dataclass(frozen=True, order=True)
class PureStrategy:
    """Per-user deterministic maps g_i, stored as nested tuples of actions."""

    maps: tuple[tuple[int, ...], ...]

    def actions(self, omega: Sequence[int]) -> tuple[int, ...]:
        return tuple(g[w] for g, w in zip(self.maps, omega))

    def is_nondecreasing(self) -> bool:
        return all(all(g[j] <= g[j + 1] for j in range(len(g) - 1)) for g in self.maps)


def count_all(spec: ProblemSpec) -> int:
    return math.prod(a ** w for a, w in zip(spec.action_sizes, spec.event_sizes))


def count_nondecreasing(spec: ProblemSpec) -> int:
    return math.prod(
        math.comb(w + a - 1, a - 1) for a, w in zip(spec.action_sizes, spec.event_sizes)
    )


def enumerate_all(spec: ProblemSpec, cap: int = ENUM_CAP) -> list[PureStrategy]:
    """Every pure strategy, lexicographic order; raises CapExceeded past cap."""
    m = count_all(spec)
    if m > cap:
        raise CapExceeded(m, cap)
    per_user = [
        list(product(range(a), repeat=w))
        for a, w in zip(spec.action_sizes, spec.event_sizes)
    ]
    return [PureStrategy(maps) for maps in product(*per_user)]


def _nondecreasing_maps(n_events: int, n_actions: int) -> Iterator[tuple[int, ...]]:
    def rec(prefix: list[int], lo: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == n_events:
            yield tuple(prefix)
            return
        for a in range(lo, n_actions):
            prefix.append(a)
            yield from rec(prefix, a)
            prefix.pop()

    yield from rec([], 0)


def enumerate_nondecreasing(spec: ProblemSpec, cap: int = ENUM_CAP) -> list[PureStrategy]:
    """All strategies whose per-user maps are non-decreasing in the event.

    With binary actions each per-user map is a threshold rule, so the count
    is prod_i (|Omega_i| + 1).  Only sound as a pruning of enumerate_all when
    prune_applicable(spec) holds.
    """
    m = count_nondecreasing(spec)
    if m > cap:
        raise CapExceeded(m, cap)
    per_user = [
        list(_nondecreasing_maps(w, a))
        for a, w in zip(spec.action_sizes, spec.event_sizes)
    ]
    return [PureStrategy(maps) for maps in product(*per_user)]


def drop_act_on_zero(strategies: Iterable[PureStrategy]) -> list[PureStrategy]:
    """Keep only strategies where every user idles (action 0) on event 0.

    Fixture-level filter for instances where acting on the zero event is
    useless by inspection; it is not a general dominance engine.
    """
    return [s for s in strategies if all(g[0] == 0 for g in s.maps)]


def check_preferred_action(spec: ProblemSpec, k: int, cap: int = CHECK_CAP) -> bool:
    """Exhaustively test the preferred action property of penalty k.

    The property holds when, for every user, the penalty difference between a
    larger and a smaller own-action is non-increasing in the own-event with
    everything else fixed.  Checking consecutive action and event pairs is
    equivalent to checking all pairs.
    """
    if not 0 <= k <= spec.n_constraints:
        raise IndexError(f"penalty index {k} out of range")
    work = spec.n_events * spec.n_actions * spec.n_users
    if work > cap:
        raise CapExceeded(work, cap)
    table = spec.penalties[k].expand(spec.action_sizes, spec.event_sizes)
    shaped = table.reshape(spec.event_sizes + spec.action_sizes)
    n = spec.n_users
    for i in range(n):
        view = np.moveaxis(shaped, (i, n + i), (0, 1))  # (|Omega_i|, |A_i|, ...)
        if view.shape[0] < 2 or view.shape[1] < 2:
            continue
        diff_alpha = np.diff(view, axis=1)
        step_omega = np.diff(diff_alpha, axis=0)
        if np.any(step_omega > MONOTONE_TOL):
            return False
    return True


def prune_applicable(spec: ProblemSpec, cap: int = CHECK_CAP) -> bool:
    """True when restriction to non-decreasing strategies loses nothing.

    Requires independent events with strictly positive marginals and the
    preferred action property for every penalty, the objective included.
    """
    dist = spec.distribution
    if not isinstance(dist, ProductDistribution):
        return False
    if any(np.any(q <= 0) for q in dist.marginals):
        return False
    return all(check_preferred_action(spec, k, cap) for k in range(spec.n_constraints + 1))


def strategy_action_table(
    spec: ProblemSpec, strategies: Sequence[PureStrategy]
) -> np.ndarray:
    """Flat action index chosen by each strategy at each event, shape (M, n_events)."""
    omega_comp = joint_components(spec.event_sizes)
    strides = joint_strides(spec.action_sizes)
    out = np.zeros((len(strategies), spec.n_events), dtype=np.int64)
    for i in range(spec.n_users):
        maps_i = np.array([s.maps[i] for s in strategies], dtype=np.int64)
        out += strides[i] * maps_i[:, omega_comp[:, i]]
    return out


def strategy_event_penalties(
    spec: ProblemSpec,
    strategies: Sequence[PureStrategy],
    tables: np.ndarray | None = None,
) -> np.ndarray:
    """Penalties of every strategy at every event, shape (n_events, M, K+1).

    Event-major layout so a single event row (used by windowed estimators and
    per-slot bookkeeping) is contiguous.
    """
    if tables is None:
        tables = penalty_tables(spec)
    actions = strategy_action_table(spec, strategies)  # (M, n_events)
    n_events = spec.n_events
    out = np.empty((n_events, len(strategies), len(tables)))
    rows = np.arange(n_events)[:, None]
    cols = actions.T
    for k in range(len(tables)):
        out[:, :, k] = tables[k][rows, cols]
    return out


def r_matrix(
    spec: ProblemSpec,
    strategies: Sequence[PureStrategy],
    event_penalties: np.ndarray | None = None,
) -> np.ndarray:
    """Expected-penalty vectors r^(m), shape (M, K+1); exact sums over events."""
    if event_penalties is None:
        event_penalties = strategy_event_penalties(spec, strategies)
    pi = flat_event_probabilities(spec.distribution, spec.event_sizes)
    return np.tensordot(pi, event_penalties, axes=(0, 0))


def compute_r_vector(spec: ProblemSpec, strategy: PureStrategy) -> np.ndarray:
    """Expected penalties of one strategy, shape (K+1,)."""
    return r_matrix(spec, [strategy])[0]
