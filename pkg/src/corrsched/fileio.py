"""JSON file formats: problem specs, phase schedules, policies, metrics.

Spec files carry ``users``, ``action_sizes``, ``event_sizes``,
``distribution`` (either ``{"joint": [...]}`` flat in event-major order or
``{"product": [[...], ...]}`` per user), ``penalties`` as a list of
``{"kind", "params"}`` objects, and ``constraints``.  Dense penalty tables
are event-major then action, users in ascending index order.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .optimizer import CorrelatedPolicy
from .problem import (
    CollisionUtilityNeg,
    EventDistribution,
    FullTable,
    JointDistribution,
    MinSumUtilityNeg,
    PowerPerUser,
    ProblemSpec,
    ProductDistribution,
    WeightedSum,
    ProductForm,
)
from .simulator import Metrics, Phase


def _penalty_to_dict(pen) -> dict[str, Any]:
    if isinstance(pen, FullTable):
        return {"kind": pen.kind, "params": {"values": pen.values.tolist()}}
    if isinstance(pen, PowerPerUser):
        return {"kind": pen.kind, "params": {"user": pen.user}}
    if isinstance(pen, MinSumUtilityNeg):
        return {
            "kind": pen.kind,
            "params": {"weights": [w.tolist() for w in pen.weights], "cap": pen.cap},
        }
    if isinstance(pen, CollisionUtilityNeg):
        return {"kind": pen.kind, "params": {}}
    if isinstance(pen, WeightedSum):
        return {
            "kind": pen.kind,
            "params": {
                "coefficients": list(pen.coefficients),
                "children": [_penalty_to_dict(ch) for ch in pen.children],
            },
        }
    if isinstance(pen, ProductForm):
        return {
            "kind": pen.kind,
            "params": {
                "phis": [p.tolist() for p in pen.phis],
                "psis": [p.tolist() for p in pen.psis],
            },
        }
    raise TypeError(f"unknown penalty type {type(pen).__name__}")


def _penalty_from_dict(obj: dict[str, Any]):
    kind = obj["kind"]
    params = obj.get("params", {})
    if kind == "full_table":
        return FullTable(np.asarray(params["values"], dtype=float))
    if kind == "power_per_user":
        return PowerPerUser(int(params["user"]))
    if kind == "min_sum_utility_neg":
        return MinSumUtilityNeg(
            weights=tuple(np.asarray(w, dtype=float) for w in params["weights"]),
            cap=float(params["cap"]),
        )
    if kind == "collision_utility_neg":
        return CollisionUtilityNeg()
    if kind == "weighted_sum":
        return WeightedSum(
            children=tuple(_penalty_from_dict(ch) for ch in params["children"]),
            coefficients=tuple(float(w) for w in params["coefficients"]),
        )
    if kind == "product_form":
        return ProductForm(
            phis=tuple(np.asarray(p, dtype=float) for p in params["phis"]),
            psis=tuple(np.asarray(p, dtype=float) for p in params["psis"]),
        )
    raise ValueError(f"unknown penalty kind {kind!r}")


def _distribution_to_dict(dist: EventDistribution) -> dict[str, Any]:
    if isinstance(dist, ProductDistribution):
        return {"product": [q.tolist() for q in dist.marginals]}
    return {"joint": dist.table.reshape(-1).tolist()}


def _distribution_from_dict(obj: dict[str, Any], event_sizes) -> EventDistribution:
    if "product" in obj:
        return ProductDistribution(tuple(np.asarray(q, dtype=float) for q in obj["product"]))
    if "joint" in obj:
        return JointDistribution(np.asarray(obj["joint"], dtype=float).reshape(tuple(event_sizes)))
    raise ValueError("distribution must have a 'product' or 'joint' entry")


def spec_to_dict(spec: ProblemSpec) -> dict[str, Any]:
    return {
        "users": spec.n_users,
        "action_sizes": list(spec.action_sizes),
        "event_sizes": list(spec.event_sizes),
        "distribution": _distribution_to_dict(spec.distribution),
        "penalties": [_penalty_to_dict(p) for p in spec.penalties],
        "constraints": list(spec.constraints),
    }


def spec_from_dict(obj: dict[str, Any]) -> ProblemSpec:
    event_sizes = tuple(int(v) for v in obj["event_sizes"])
    action_sizes = tuple(int(v) for v in obj["action_sizes"])
    if "users" in obj and int(obj["users"]) != len(action_sizes):
        raise ValueError("'users' disagrees with action_sizes length")
    return ProblemSpec(
        action_sizes=action_sizes,
        event_sizes=event_sizes,
        distribution=_distribution_from_dict(obj["distribution"], event_sizes),
        penalties=tuple(_penalty_from_dict(p) for p in obj["penalties"]),
        constraints=tuple(float(c) for c in obj["constraints"]),
    )


def load_spec(path) -> ProblemSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def save_spec(spec: ProblemSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


def load_phases(path, spec: ProblemSpec) -> list[Phase]:
    with open(path) as fh:
        obj = json.load(fh)
    phases = []
    for ph in obj["phases"]:
        phases.append(
            Phase(
                start=int(ph["start"]),
                end=int(ph["end"]),
                distribution=_distribution_from_dict(ph["distribution"], spec.event_sizes),
            )
        )
    return phases


def save_phases(phases, path) -> None:
    obj = {
        "phases": [
            {
                "start": ph.start,
                "end": ph.end,
                "distribution": _distribution_to_dict(ph.distribution),
            }
            for ph in phases
        ]
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def policy_to_dict(policy: CorrelatedPolicy) -> dict[str, Any]:
    return {
        "objective": policy.objective,
        "utility": policy.utility,
        "achieved_constraints": policy.achieved_constraints.tolist(),
        "support": [
            {"theta": theta, "maps": [list(g) for g in strat.maps]}
            for strat, theta in policy.support
        ],
    }


def save_policy(policy: CorrelatedPolicy, path) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(policy), fh, indent=2)
        fh.write("\n")


def metrics_to_dict(metrics: Metrics, config: dict[str, Any] | None = None) -> dict[str, Any]:
    out = {
        "slots": metrics.slots,
        "utility": metrics.utility,
        "pbar": metrics.pbar.tolist(),
        "final_queues": metrics.final_queues.tolist(),
        "queue_bound_max_residual": metrics.queue_bound_max_residual,
    }
    if config is not None:
        out["config"] = config
    return out


def save_metrics(metrics: Metrics, path, config: dict[str, Any] | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(metrics_to_dict(metrics, config), fh, indent=2)
        fh.write("\n")


def load_run_config(path) -> dict[str, Any]:
    """Read a run-config JSON, accepting either a bare config or a metrics file."""
    with open(path) as fh:
        obj = json.load(fh)
    return obj.get("config", obj)
