"""Command-line front end: solve, simulate, analyze, compare, counterexample."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, fileio
from .online import DppConfig
from .optimizer import solve_distributed_lp
from .problem import validate_spec
from .simulator import SimConfig, read_trace, run_episode, write_trace
from .strategy import enumerate_all, enumerate_nondecreasing, prune_applicable


def _load_checked_spec(path):
    spec = fileio.load_spec(path)
    report = validate_spec(spec)
    if not report.ok:
        raise SystemExit("invalid spec:\n  " + "\n  ".join(report.violations))
    return spec


def _pick_strategies(spec, prune: str):
    if prune == "off":
        return enumerate_all(spec)
    if prune == "force":
        return enumerate_nondecreasing(spec)
    return enumerate_nondecreasing(spec) if prune_applicable(spec) else enumerate_all(spec)


def _cmd_solve(args) -> int:
    spec = _load_checked_spec(args.spec)
    strategies = _pick_strategies(spec, args.prune)
    policy = solve_distributed_lp(spec, strategies)
    fileio.save_policy(policy, args.out)
    print(f"strategies considered: {len(strategies)}")
    print(f"utility: {policy.utility:.12g}")
    print(f"support size: {len(policy.support)}")
    for k, val in enumerate(policy.achieved_constraints):
        print(f"constraint {k + 1}: {val:.12g} <= {spec.constraints[k]:.12g}")
    print(f"policy written to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    spec = _load_checked_spec(args.spec)
    phases = fileio.load_phases(args.phases, spec) if args.phases else None
    dpp = DppConfig(
        v=args.v,
        delay=args.delay,
        mode=args.mode,
        window=args.window if args.mode == "approx" else None,
    )
    strategies = None
    if args.mode != "separable":
        strategies = _pick_strategies(spec, args.prune)
    config = SimConfig(
        spec=spec,
        dpp=dpp,
        horizon=args.slots,
        seed=args.seed,
        strategies=strategies,
        phases=phases,
        runs=args.runs,
        stride=args.stride,
    )
    run_config = {
        "v": args.v,
        "delay": args.delay,
        "window": args.window,
        "mode": args.mode,
        "slots": args.slots,
        "seed": args.seed,
        "runs": args.runs,
        "stride": args.stride,
        "prune": args.prune,
        "spec": str(args.spec),
    }
    if args.runs > 1:
        from .simulator import run_ensemble

        ensemble = run_ensemble(config)
        mean_u = ensemble.mean_u.mean()
        out = {
            "config": run_config,
            "runs": ensemble.runs,
            "utility_grand_mean": float(mean_u),
            "per_run_utility": [m.utility for m in ensemble.per_run],
        }
        with open(f"{args.out}.metrics", "w") as fh:
            json.dump(out, fh, indent=2)
            fh.write("\n")
        np.savetxt(
            f"{args.out}.trace.csv",
            np.column_stack(
                [np.arange(ensemble.horizon), ensemble.mean_u, ensemble.mean_p, ensemble.mean_qnorm]
            ),
            delimiter=",",
            header="t,mean_u,"
            + ",".join(f"mean_p_{k + 1}" for k in range(spec.n_constraints))
            + ",mean_qnorm",
            comments="",
        )
        print(f"ensemble of {ensemble.runs} runs written to {args.out}.*")
        return 0
    metrics, trace = run_episode(config)
    fileio.save_metrics(metrics, f"{args.out}.metrics", config=run_config)
    write_trace(trace, f"{args.out}.trace.csv")
    print(f"utility: {metrics.utility:.6f}")
    print("pbar:", " ".join(f"{v:.6f}" for v in metrics.pbar))
    print(f"queue bound residual: {metrics.queue_bound_max_residual:.3e}")
    print(f"outputs written to {args.out}.metrics and {args.out}.trace.csv")
    return 0


def _cmd_analyze(args) -> int:
    spec = _load_checked_spec(args.spec)
    run_config = fileio.load_run_config(args.config)
    trace = read_trace(args.trace)
    trace.constraints = spec.constraints
    trace.delay = int(run_config["delay"])
    dpp = DppConfig(
        v=float(run_config["v"]),
        delay=int(run_config["delay"]),
        mode=run_config.get("mode", "exact"),
        window=run_config.get("window"),
    )
    strategies = _pick_strategies(spec, run_config.get("prune", "auto"))
    report = analysis.audit_bounds(trace, spec, strategies, dpp)
    print(f"optimal objective: {report.p0_opt:.12g} (utility {-report.p0_opt:.12g})")
    print(f"drift constant B: {report.b_const:.12g}")
    print(f"performance bound: {'ok' if report.perf_ok else 'VIOLATED'} "
          f"(worst margin {report.worst_perf_margin:.3e})")
    if not np.isnan(report.queue_bound_max_residual):
        print(f"queue bound residual: {report.queue_bound_max_residual:.3e} "
              f"({'ok' if report.queue_ok else 'VIOLATED'})")
    else:
        print("queue bound: trace is strided; rerun with --stride 1 to audit")
    return 0 if report.perf_ok else 1


def _cmd_counterexample(args) -> int:
    centralized, distributed = analysis.verify_counterexample()
    print(f"centralized utility: {centralized}")
    print(f"distributed utility: {distributed}")
    return 0


def _cmd_compare(args) -> int:
    spec = _load_checked_spec(args.spec)
    report = analysis.compare_policies(spec)
    print(f"independent best (probed): {report.independent_best:.6f}")
    print(f"correlated optimum:        {report.distributed_opt:.6f}")
    print(f"centralized optimum:       {report.centralized_opt:.6f}")
    print(f"gain from shared randomness: {report.correlation_gain:.6f}")
    print(f"cost of being distributed:   {report.centralized_gap:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute the optimal correlated policy")
    p.add_argument("--spec", required=True)
    p.add_argument("--prune", choices=["auto", "off", "force"], default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="run the online controller")
    p.add_argument("--spec", required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--delay", type=int, default=0)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=["exact", "approx", "separable"], default="exact")
    p.add_argument("--prune", choices=["auto", "off", "force"], default="auto")
    p.add_argument("--phases", default=None)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--stride", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="audit a trace against the bounds")
    p.add_argument("--trace", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("counterexample", help="centralized vs distributed gap demo")
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("compare", help="independent vs correlated vs centralized")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
