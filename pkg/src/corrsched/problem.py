"""Problem instances for multi-user scheduling under time-average constraints.

A problem bundles finite per-user action and event spaces, the random-event
distribution, a stack of K+1 penalty functions (index 0 is the negated system
utility), and the K constraint levels c_k.  Actions and events are dense
integer ranges starting at 0.  Flat indices over the joint spaces use C order
with user 0 most significant; dense penalty tables are indexed
``[event_flat, action_flat]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

PROB_TOL = 1e-12


class CapExceeded(Exception):
    """An enumeration or exhaustive check would exceed its size cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"size {size} exceeds cap {cap}")
        self.size = size
        self.cap = cap


def joint_strides(sizes: Sequence[int]) -> np.ndarray:
    """C-order strides for flattening a tuple of per-user indices."""
    sizes = np.asarray(sizes, dtype=np.int64)
    out = np.ones(len(sizes), dtype=np.int64)
    out[:-1] = np.cumprod(sizes[::-1])[::-1][1:]
    return out


def joint_components(sizes: Sequence[int]) -> np.ndarray:
    """Per-user components of every flat index, shape (prod(sizes), n_users)."""
    n = int(np.prod(sizes))
    return np.array(np.unravel_index(np.arange(n), tuple(sizes))).T


def flatten_index(indices: Sequence[int], sizes: Sequence[int]) -> int:
    return int(np.ravel_multi_index(tuple(int(i) for i in indices), tuple(sizes)))


# ---------------------------------------------------------------------------
# Event distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Explicit joint event table; zero-probability outcomes are allowed."""

    table: np.ndarray  # shape = event_sizes

    def __post_init__(self):
        object.__setattr__(self, "table", np.asarray(self.table, dtype=float))


@dataclass(frozen=True, eq=False)
class ProductDistribution:
    """Mutually independent per-user event marginals q_i."""

    marginals: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "marginals",
            tuple(np.asarray(q, dtype=float) for q in self.marginals),
        )


EventDistribution = Union[JointDistribution, ProductDistribution]


def flat_event_probabilities(
    distribution: EventDistribution, event_sizes: Sequence[int]
) -> np.ndarray:
    """Probability of every flat event index, shape (prod(event_sizes),)."""
    if isinstance(distribution, JointDistribution):
        table = distribution.table.reshape(tuple(event_sizes))
        return table.reshape(-1).astype(float)
    pi = np.ones(1)
    for q in distribution.marginals:
        pi = np.outer(pi, q).reshape(-1)
    return pi


def sample_event_indices(
    distribution: EventDistribution,
    event_sizes: Sequence[int],
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """Draw n i.i.d. flat event indices from the distribution.

    Product mode draws each user's stream separately (user 0 first); joint
    mode uses inverse-CDF over the flattened table.  Deterministic given the
    generator state.
    """
    if isinstance(distribution, ProductDistribution):
        strides = joint_strides(event_sizes)
        out = np.zeros(n, dtype=np.int64)
        for i, q in enumerate(distribution.marginals):
            edges = np.cumsum(q)
            edges[-1] = 1.0
            out += strides[i] * np.searchsorted(edges, rng.random(n), side="right")
        return out
    edges = np.cumsum(flat_event_probabilities(distribution, event_sizes))
    edges[-1] = 1.0
    return np.searchsorted(edges, rng.random(n), side="right").astype(np.int64)


# ---------------------------------------------------------------------------
# Penalty functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FullTable:
    """Dense penalty values indexed [event_flat, action_flat]."""

    values: np.ndarray

    kind = "full_table"

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def expand(self, action_sizes, event_sizes) -> np.ndarray:
        n_omega = int(np.prod(event_sizes))
        n_alpha = int(np.prod(action_sizes))
        if self.values.shape != (n_omega, n_alpha):
            raise ValueError(
                f"table shape {self.values.shape} != ({n_omega}, {n_alpha})"
            )
        return self.values

    def evaluate(self, alpha, omega, action_sizes, event_sizes) -> float:
        return float(
            self.values[
                flatten_index(omega, event_sizes), flatten_index(alpha, action_sizes)
            ]
        )


@dataclass(frozen=True)
class PowerPerUser:
    """Penalty equal to one user's own action value (its power draw)."""

    user: int

    kind = "power_per_user"

    def expand(self, action_sizes, event_sizes) -> np.ndarray:
        n_omega = int(np.prod(event_sizes))
        comp = joint_components(action_sizes)[:, self.user].astype(float)
        return np.tile(comp, (n_omega, 1))

    def evaluate(self, alpha, omega, action_sizes, event_sizes) -> float:
        return float(alpha[self.user])


@dataclass(frozen=True, eq=False)
class MinSumUtilityNeg:
    """Negated saturating utility: -min(sum_i weights_i[omega_i] * alpha_i, cap).

    Models information saturation: once the weighted report total reaches
    ``cap``, further reports add nothing.
    """

    weights: tuple[np.ndarray, ...]  # per user, length |Omega_i|
    cap: float

    kind = "min_sum_utility_neg"

    def __post_init__(self):
        object.__setattr__(
            self, "weights", tuple(np.asarray(w, dtype=float) for w in self.weights)
        )

    def expand(self, action_sizes, event_sizes) -> np.ndarray:
        omega_comp = joint_components(event_sizes)
        alpha_comp = joint_components(action_sizes)
        total = np.zeros((int(np.prod(event_sizes)), int(np.prod(action_sizes))))
        for i, w in enumerate(self.weights):
            total += np.outer(w[omega_comp[:, i]], alpha_comp[:, i])
        return -np.minimum(total, self.cap)

    def evaluate(self, alpha, omega, action_sizes, event_sizes) -> float:
        total = sum(w[omega[i]] * alpha[i] for i, w in enumerate(self.weights))
        return -min(total, self.cap)


@dataclass(frozen=True)
class CollisionUtilityNeg:
    """Negated collision-channel utility for binary transmit decisions.

    A transmission succeeds (and contributes its event value omega_i) only
    when no other user transmits in the same slot.
    """

    kind = "collision_utility_neg"

    def expand(self, action_sizes, event_sizes) -> np.ndarray:
        omega_comp = joint_components(event_sizes).astype(float)
        alpha_comp = joint_components(action_sizes)
        n_users = len(action_sizes)
        u = np.zeros((omega_comp.shape[0], alpha_comp.shape[0]))
        for i in range(n_users):
            alone = alpha_comp[:, i] == 1
            for j in range(n_users):
                if j != i:
                    alone = alone & (alpha_comp[:, j] == 0)
            u += np.outer(omega_comp[:, i], alone.astype(float))
        return -u

    def evaluate(self, alpha, omega, action_sizes, event_sizes) -> float:
        u = 0.0
        for i in range(len(alpha)):
            if alpha[i] == 1 and all(alpha[j] == 0 for j in range(len(alpha)) if j != i):
                u += omega[i]
        return -u


@dataclass(frozen=True, eq=False)
class WeightedSum:
    """Non-negative combination of child penalty functions."""

    children: tuple
    coefficients: tuple[float, ...]

    kind = "weighted_sum"

    def expand(self, action_sizes, event_sizes) -> np.ndarray:
        out = np.zeros((int(np.prod(event_sizes)), int(np.prod(action_sizes))))
        for w, child in zip(self.coefficients, self.children):
            out += w * child.expand(action_sizes, event_sizes)
        return out

    def evaluate(self, alpha, omega, action_sizes, event_sizes) -> float:
        return sum(
            w * child.evaluate(alpha, omega, action_sizes, event_sizes)
            for w, child in zip(self.coefficients, self.children)
        )


@dataclass(frozen=True, eq=False)
class ProductForm:
    """Separable product prod_i phis_i[omega_i] * psis_i[alpha_i]."""

    phis: tuple[np.ndarray, ...]
    psis: tuple[np.ndarray, ...]

    kind = "product_form"

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(np.asarray(p, dtype=float) for p in self.phis))
        object.__setattr__(self, "psis", tuple(np.asarray(p, dtype=float) for p in self.psis))

    def expand(self, action_sizes, event_sizes) -> np.ndarray:
        omega_comp = joint_components(event_sizes)
        alpha_comp = joint_components(action_sizes)
        phi = np.ones(omega_comp.shape[0])
        psi = np.ones(alpha_comp.shape[0])
        for i in range(len(self.phis)):
            phi = phi * self.phis[i][omega_comp[:, i]]
            psi = psi * self.psis[i][alpha_comp[:, i]]
        return np.outer(phi, psi)

    def evaluate(self, alpha, omega, action_sizes, event_sizes) -> float:
        out = 1.0
        for i in range(len(self.phis)):
            out *= self.phis[i][omega[i]] * self.psis[i][alpha[i]]
        return float(out)


PenaltyFn = Union[
    FullTable, PowerPerUser, MinSumUtilityNeg, CollisionUtilityNeg, WeightedSum, ProductForm
]


# ---------------------------------------------------------------------------
# Problem spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Immutable problem instance; validate with :func:`validate_spec`."""

    action_sizes: tuple[int, ...]
    event_sizes: tuple[int, ...]
    distribution: EventDistribution
    penalties: tuple[PenaltyFn, ...]  # K+1 entries, [0] is the negated utility
    constraints: tuple[float, ...]  # c_k, k = 1..K

    def __post_init__(self):
        object.__setattr__(self, "action_sizes", tuple(int(a) for a in self.action_sizes))
        object.__setattr__(self, "event_sizes", tuple(int(w) for w in self.event_sizes))
        object.__setattr__(self, "penalties", tuple(self.penalties))
        object.__setattr__(self, "constraints", tuple(float(c) for c in self.constraints))

    @property
    def n_users(self) -> int:
        return len(self.action_sizes)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    @property
    def n_actions(self) -> int:
        return int(np.prod(self.action_sizes))

    @property
    def n_events(self) -> int:
        return int(np.prod(self.event_sizes))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str) -> None:
        self.violations.append(message)


def validate_spec(spec: ProblemSpec) -> ValidationReport:
    """Check sizes, distribution normalization, and penalty finiteness.

    Returns a report object; it never raises.  Product-mode marginals must be
    strictly positive (zero marginals break the pruning theory this library
    relies on), while joint tables may contain zeros.
    """
    report = ValidationReport()
    if spec.n_users < 1:
        report.add("no users")
        return report
    if len(spec.event_sizes) != spec.n_users:
        report.add("event_sizes length != action_sizes length")
        return report
    if any(a < 1 for a in spec.action_sizes) or any(w < 1 for w in spec.event_sizes):
        report.add("all action/event sizes must be >= 1")
        return report
    if len(spec.penalties) != spec.n_constraints + 1:
        report.add(
            f"penalties length {len(spec.penalties)} != K+1 = {spec.n_constraints + 1}"
        )
        return report

    dist = spec.distribution
    if isinstance(dist, ProductDistribution):
        if len(dist.marginals) != spec.n_users:
            report.add("marginal count != number of users")
        else:
            for i, q in enumerate(dist.marginals):
                if q.shape != (spec.event_sizes[i],):
                    report.add(f"user {i} marginal has wrong length")
                    continue
                if np.any(q < 0):
                    report.add(f"user {i} marginal has negative entries")
                if abs(q.sum() - 1.0) > PROB_TOL:
                    report.add(f"user {i} marginal not normalized (sum {q.sum()!r})")
                if np.any(q <= 0):
                    report.add(f"user {i} has a zero marginal probability")
    elif isinstance(dist, JointDistribution):
        if dist.table.shape != spec.event_sizes and dist.table.size != spec.n_events:
            report.add("joint table shape does not match event sizes")
        else:
            flat = dist.table.reshape(-1)
            if np.any(flat < 0):
                report.add("joint table has negative entries")
            if abs(flat.sum() - 1.0) > PROB_TOL:
                report.add(f"joint table not normalized (sum {flat.sum()!r})")
    else:
        report.add(f"unknown distribution type {type(dist).__name__}")

    for k, pen in enumerate(spec.penalties):
        try:
            table = pen.expand(spec.action_sizes, spec.event_sizes)
        except Exception as exc:  # shape/parameter errors surface as violations
            report.add(f"penalty {k} cannot be evaluated: {exc}")
            continue
        if not np.all(np.isfinite(table)):
            report.add(f"penalty {k} is not finite everywhere")
    return report


def eval_penalty(
    spec: ProblemSpec, k: int, alpha: Sequence[int], omega: Sequence[int]
) -> float:
    """Value of penalty k at action vector alpha and event vector omega."""
    if not 0 <= k <= spec.n_constraints:
        raise IndexError(f"penalty index {k} out of range 0..{spec.n_constraints}")
    for i in range(spec.n_users):
        if not 0 <= alpha[i] < spec.action_sizes[i]:
            raise IndexError(f"action {alpha[i]} out of range for user {i}")
        if not 0 <= omega[i] < spec.event_sizes[i]:
            raise IndexError(f"event {omega[i]} out of range for user {i}")
    return spec.penalties[k].evaluate(alpha, omega, spec.action_sizes, spec.event_sizes)


def event_probability(spec: ProblemSpec, omega: Sequence[int]) -> float:
    """Probability that the event vector equals omega."""
    dist = spec.distribution
    if isinstance(dist, ProductDistribution):
        out = 1.0
        for i, q in enumerate(dist.marginals):
            out *= q[omega[i]]
        return float(out)
    return float(dist.table.reshape(spec.event_sizes)[tuple(int(w) for w in omega)])


def sample_event(spec: ProblemSpec, rng: np.random.Generator) -> tuple[int, ...]:
    """Draw one event vector; mutates only the caller-owned generator."""
    idx = sample_event_indices(spec.distribution, spec.event_sizes, rng, 1)[0]
    return tuple(int(v) for v in np.unravel_index(idx, spec.event_sizes))


def penalty_tables(spec: ProblemSpec) -> np.ndarray:
    """All penalties expanded to one array of shape (K+1, n_events, n_actions)."""
    return np.stack(
        [pen.expand(spec.action_sizes, spec.event_sizes) for pen in spec.penalties]
    )
